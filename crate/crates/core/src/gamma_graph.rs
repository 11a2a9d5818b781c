//! Graphs with an action of a free abelian group by graph automorphisms.
//!
//! Two classes are supported. Translation graphs have vertex set `C × ℤ` for a
//! finite label set `C`, with `ℤ` translating the second coordinate and edges
//! given by difference families. Finite graphs carry `ℤⁿ` acting through `n`
//! commuting automorphisms, so the action factors through a finite abelian
//! permutation group (the image group).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid difference family: {0}")]
    InvalidFamily(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("vertex {0} does not belong to the graph")]
    InvalidVertex(Vertex),
    #[error("acting element has rank {found}, expected {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error("modulus must be at least 1")]
    ZeroModulus,
    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),
    #[error("operation needs a translation graph")]
    NotTranslation,
}

/// A set of nonzero integer offsets, closed under negation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DifferenceFamily {
    Finite { offsets: BTreeSet<i64> },
    /// `{ ±(shift + n!) : n ≥ 1 }`
    Factorial { shift: u64 },
    /// `{ ±(start + step·n) : n ≥ 0 }`
    Arithmetic { start: u64, step: u64 },
}

impl DifferenceFamily {
    /// Finite family; negations are added, zero is rejected.
    pub fn finite<I: IntoIterator<Item = i64>>(offsets: I) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for d in offsets {
            if d == 0 {
                return Err(GraphError::InvalidFamily("offset 0 would create a loop".into()));
            }
            if d == i64::MIN {
                return Err(GraphError::InvalidFamily("offset out of range".into()));
            }
            set.insert(d);
            set.insert(-d);
        }
        Ok(DifferenceFamily::Finite { offsets: set })
    }

    pub fn factorial(shift: u64) -> Self {
        DifferenceFamily::Factorial { shift }
    }

    pub fn arithmetic(start: u64, step: u64) -> Result<Self, GraphError> {
        if start == 0 || step == 0 {
            return Err(GraphError::InvalidFamily("arithmetic families need start ≥ 1 and step ≥ 1".into()));
        }
        Ok(DifferenceFamily::Arithmetic { start, step })
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        match self {
            DifferenceFamily::Finite { offsets } => {
                if offsets.contains(&0) {
                    return Err(GraphError::InvalidFamily("offset 0 would create a loop".into()));
                }
                if offsets.iter().any(|d| !offsets.contains(&-d)) {
                    return Err(GraphError::InvalidFamily("finite family is not closed under negation".into()));
                }
                Ok(())
            }
            DifferenceFamily::Factorial { .. } => Ok(()),
            DifferenceFamily::Arithmetic { start, step } => Self::arithmetic(*start, *step).map(drop),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DifferenceFamily::Finite { .. })
    }

    /// Exact membership test.
    pub fn contains(&self, d: i64) -> bool {
        let abs = d.unsigned_abs();
        match self {
            DifferenceFamily::Finite { offsets } => offsets.contains(&d),
            DifferenceFamily::Factorial { shift } => {
                if abs <= *shift {
                    return false;
                }
                let target = abs - shift;
                let (mut n, mut fact) = (1u64, 1u64);
                while fact < target {
                    n += 1;
                    match fact.checked_mul(n) {
                        Some(f) => fact = f,
                        None => return false,
                    }
                }
                fact == target
            }
            DifferenceFamily::Arithmetic { start, step } => abs >= *start && (abs - start).is_multiple_of(*step),
        }
    }

    /// `{ d mod m : d ∈ family }` as a set of residues in `[0, m)`.
    pub fn residues_mod(&self, m: u64) -> Result<BTreeSet<u64>, GraphError> {
        if m == 0 {
            return Err(GraphError::ZeroModulus);
        }
        let mm = m as i128;
        let mut out = BTreeSet::new();
        let mut push = |x: i128| {
            out.insert(x.rem_euclid(mm) as u64);
            out.insert((-x).rem_euclid(mm) as u64);
        };
        match self {
            DifferenceFamily::Finite { offsets } => offsets.iter().for_each(|&d| push(d as i128)),
            DifferenceFamily::Factorial { shift } => {
                // n! ≡ 0 (mod m) for n ≥ m, so the tail contributes ±shift.
                let s = *shift as i128;
                let mut fact = 1i128;
                for n in 1..m.max(2) {
                    fact = fact * n as i128 % mm;
                    push(s + fact);
                }
                push(s);
            }
            DifferenceFamily::Arithmetic { start, step } => {
                for k in 0..m {
                    push(*start as i128 + *step as i128 * k as i128);
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute offset of a finite family.
    pub fn max_offset(&self) -> Option<u64> {
        match self {
            DifferenceFamily::Finite { offsets } => Some(offsets.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0)),
            _ => None,
        }
    }
}

/// An element of `ℤⁿ`, the acting group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GammaElement(pub Vec<i64>);

impl GammaElement {
    pub fn zero(rank: usize) -> Self {
        GammaElement(vec![0; rank])
    }

    pub fn scalar(x: i64) -> Self {
        GammaElement(vec![x])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn add(&self, other: &GammaElement) -> GammaElement {
        GammaElement(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn neg(&self) -> GammaElement {
        GammaElement(self.0.iter().map(|a| -a).collect())
    }
}

impl std::fmt::Display for GammaElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// A vertex: `(label, position)` in a translation graph or an id in a finite graph.
///
/// The derived order is the total vertex order used by normal forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Vertex {
    Translation { label: usize, position: i64 },
    Finite(usize),
}

impl Vertex {
    pub fn at(label: usize, position: i64) -> Self {
        Vertex::Translation { label, position }
    }
}

impl std::fmt::Display for Vertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Vertex::Translation { label, position } => write!(f, "{label}:{position}"),
            Vertex::Finite(id) => write!(f, "{id}"),
        }
    }
}

/// Anything with a vertex set and a symmetric adjacency relation.
pub trait SimplicialGraph<V> {
    fn has_vertex(&self, v: &V) -> bool;
    /// Adjacency of distinct vertices; never true for `v == w`.
    fn adjacent(&self, v: &V, w: &V) -> bool;
    /// Quotient graphs may mark vertices that absorbed an edge.
    fn has_loop(&self, _v: &V) -> bool {
        false
    }
}

/// Maps keyed by label pairs, stored as `[[c, c'], value]` entries so they survive JSON.
pub(crate) mod pair_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<V: Serialize, S: Serializer>(map: &BTreeMap<(usize, usize), V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), V>, D::Error> {
        Ok(Vec::<((usize, usize), V)>::deserialize(d)?.into_iter().collect())
    }
}

fn pair_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationGraph {
    labels: Vec<String>,
    #[serde(with = "pair_map")]
    families: BTreeMap<(usize, usize), Vec<DifferenceFamily>>,
}

impl TranslationGraph {
    pub fn new<S: Into<String>>(labels: Vec<S>) -> Result<Self, GraphError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(GraphError::InvalidGraph("duplicate orbit label".into()));
        }
        if let Some(bad) = labels.iter().find(|l| l.is_empty() || l.contains(':')) {
            return Err(GraphError::InvalidGraph(format!("label {bad:?} must be nonempty and free of ':'")));
        }
        Ok(TranslationGraph { labels, families: BTreeMap::new() })
    }

    /// Adds a family of offsets `y − x` between `(c, x)` and `(c', y)`.
    pub fn add_family(&mut self, c: usize, c2: usize, family: DifferenceFamily) -> Result<(), GraphError> {
        if c >= self.labels.len() || c2 >= self.labels.len() {
            return Err(GraphError::InvalidGraph(format!("label index out of range in pair ({c}, {c2})")));
        }
        family.validate()?;
        self.families.entry(pair_key(c, c2)).or_default().push(family);
        Ok(())
    }

    pub fn with_family(mut self, c: usize, c2: usize, family: DifferenceFamily) -> Result<Self, GraphError> {
        self.add_family(c, c2, family)?;
        Ok(self)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    pub fn families(&self, c: usize, c2: usize) -> &[DifferenceFamily] {
        self.families.get(&pair_key(c, c2)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn family_table(&self) -> &BTreeMap<(usize, usize), Vec<DifferenceFamily>> {
        &self.families
    }

    pub fn all_finite(&self) -> bool {
        self.families.values().flatten().all(DifferenceFamily::is_finite)
    }

    /// Largest absolute offset over all families, if every family is finite.
    pub fn max_offset(&self) -> Option<u64> {
        self.families.values().flatten().try_fold(0, |acc, f| f.max_offset().map(|m| acc.max(m)))
    }

    pub fn offset_in(&self, c: usize, c2: usize, d: i64) -> bool {
        self.families(c, c2).iter().any(|f| f.contains(d))
    }

    /// Union of residues of the families between `c` and `c2` modulo `m`.
    pub fn residues(&self, c: usize, c2: usize, m: u64) -> Result<BTreeSet<u64>, GraphError> {
        let mut out = BTreeSet::new();
        for f in self.families(c, c2) {
            out.extend(f.residues_mod(m)?);
        }
        if m == 0 {
            return Err(GraphError::ZeroModulus);
        }
        Ok(out)
    }

    /// The sub-instance on the given labels, in the given order.
    pub fn restrict_labels(&self, keep: &[usize]) -> TranslationGraph {
        let labels = keep.iter().map(|&c| self.labels[c].clone()).collect();
        let mut families = BTreeMap::new();
        for (i, &c) in keep.iter().enumerate() {
            for (j, &c2) in keep.iter().enumerate().skip(i) {
                let fams = self.families(c, c2);
                if !fams.is_empty() {
                    families.insert((i, j), fams.to_vec());
                }
            }
        }
        TranslationGraph { labels, families }
    }

    fn validate(&self) -> Result<(), GraphError> {
        Self::new(self.labels.clone())?;
        for (&(c, c2), fams) in &self.families {
            if c > c2 || c2 >= self.labels.len() {
                return Err(GraphError::InvalidGraph(format!("bad label pair ({c}, {c2})")));
            }
            fams.iter().try_for_each(DifferenceFamily::validate)?;
        }
        Ok(())
    }
}

impl SimplicialGraph<Vertex> for TranslationGraph {
    fn has_vertex(&self, v: &Vertex) -> bool {
        matches!(v, Vertex::Translation { label, .. } if *label < self.labels.len())
    }

    fn adjacent(&self, v: &Vertex, w: &Vertex) -> bool {
        match (v, w) {
            (Vertex::Translation { label: c, position: x }, Vertex::Translation { label: c2, position: y }) => {
                v != w && self.has_vertex(v) && self.has_vertex(w) && self.offset_in(*c, *c2, y - x)
            }
            _ => false,
        }
    }
}

fn compose_perm(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&x| a[x]).collect()
}

fn perm_order(p: &[usize]) -> u64 {
    let mut seen = vec![false; p.len()];
    let mut order = 1u64;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0u64;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = p[x];
            len += 1;
        }
        order = lcm(order, len);
    }
    order
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn perm_pow(p: &[usize], e: i64) -> Vec<usize> {
    let order = perm_order(p) as i64;
    let e = e.rem_euclid(order);
    let mut out: Vec<usize> = (0..p.len()).collect();
    for _ in 0..e {
        out = compose_perm(p, &out);
    }
    out
}

/// A finite simple graph with `ℤⁿ` acting through commuting automorphisms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGraph {
    vertex_count: usize,
    edges: BTreeSet<(usize, usize)>,
    generators: Vec<Vec<usize>>,
}

impl FiniteGraph {
    pub fn new(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        generators: Vec<Vec<usize>>,
    ) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::InvalidGraph(format!("loop at vertex {a}")));
            }
            if a >= vertex_count || b >= vertex_count {
                return Err(GraphError::InvalidGraph(format!("edge ({a}, {b}) leaves the vertex set")));
            }
            set.insert(pair_key(a, b));
        }
        for (i, g) in generators.iter().enumerate() {
            let mut seen = vec![false; vertex_count];
            if g.len() != vertex_count || g.iter().any(|&x| x >= vertex_count || std::mem::replace(&mut seen[x], true)) {
                return Err(GraphError::InvalidGraph(format!("generator {i} is not a permutation of the vertices")));
            }
            for &(a, b) in &set {
                if !set.contains(&pair_key(g[a], g[b])) {
                    return Err(GraphError::InvalidGraph(format!(
                        "generator {i} maps edge ({a}, {b}) to a non-edge"
                    )));
                }
            }
        }
        for (i, g) in generators.iter().enumerate() {
            for (j, h) in generators.iter().enumerate().skip(i + 1) {
                if compose_perm(g, h) != compose_perm(h, g) {
                    return Err(GraphError::InvalidGraph(format!("generators {i} and {j} do not commute")));
                }
            }
        }
        Ok(FiniteGraph { vertex_count, edges: set, generators })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.vertex_count * self.vertex_count.saturating_sub(1) / 2
    }

    /// The permutation by which `gamma` acts.
    pub fn image_of(&self, gamma: &GammaElement) -> Result<Vec<usize>, GraphError> {
        if gamma.rank() != self.rank() {
            return Err(GraphError::RankMismatch { expected: self.rank(), found: gamma.rank() });
        }
        let mut out: Vec<usize> = (0..self.vertex_count).collect();
        for (g, &e) in self.generators.iter().zip(&gamma.0) {
            out = compose_perm(&perm_pow(g, e), &out);
        }
        Ok(out)
    }

    pub fn image_group(&self) -> ImageGroup {
        ImageGroup::generate(self.vertex_count, &self.generators)
    }

    /// Induced subgraph on a union of orbits, renumbered in increasing id order.
    pub fn restrict_vertices(&self, keep: &[usize]) -> FiniteGraph {
        let index: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|(a, b)| Some((*index.get(a)?, *index.get(b)?)))
            .collect();
        let generators = self
            .generators
            .iter()
            .map(|g| keep.iter().map(|v| index[&g[*v]]).collect())
            .collect();
        FiniteGraph { vertex_count: keep.len(), edges, generators }
    }

    fn validate(&self) -> Result<(), GraphError> {
        Self::new(self.vertex_count, self.edges.iter().copied(), self.generators.clone()).map(drop)
    }
}

impl SimplicialGraph<Vertex> for FiniteGraph {
    fn has_vertex(&self, v: &Vertex) -> bool {
        matches!(v, Vertex::Finite(id) if *id < self.vertex_count)
    }

    fn adjacent(&self, v: &Vertex, w: &Vertex) -> bool {
        match (v, w) {
            (Vertex::Finite(a), Vertex::Finite(b)) => self.edges.contains(&pair_key(*a, *b)),
            _ => false,
        }
    }
}

/// The finite abelian permutation group through which `ℤⁿ` acts on a finite graph.
///
/// Elements are listed in breadth-first order from the identity, each with the
/// exponent vector that first reached it.
#[derive(Debug, Clone)]
pub struct ImageGroup {
    degree: usize,
    elements: Vec<Vec<usize>>,
    preimages: Vec<GammaElement>,
    index: HashMap<Vec<usize>, usize>,
    generators: Vec<Vec<usize>>,
}

impl ImageGroup {
    fn generate(degree: usize, generators: &[Vec<usize>]) -> Self {
        let id: Vec<usize> = (0..degree).collect();
        let rank = generators.len();
        let mut elements = vec![id.clone()];
        let mut preimages = vec![GammaElement::zero(rank)];
        let mut index = HashMap::from([(id, 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for (j, g) in generators.iter().enumerate() {
                let next = compose_perm(g, &elements[i]);
                if !index.contains_key(&next) {
                    let mut pre = preimages[i].clone();
                    pre.0[j] += 1;
                    index.insert(next.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(next);
                    preimages.push(pre);
                }
            }
        }
        ImageGroup { degree, elements, preimages, index, generators: generators.to_vec() }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, i: usize) -> &[usize] {
        &self.elements[i]
    }

    pub fn preimage(&self, i: usize) -> &GammaElement {
        &self.preimages[i]
    }

    pub fn index_of(&self, p: &[usize]) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn project(&self, gamma: &GammaElement) -> Result<usize, GraphError> {
        if gamma.rank() != self.generators.len() {
            return Err(GraphError::RankMismatch { expected: self.generators.len(), found: gamma.rank() });
        }
        let mut out: Vec<usize> = (0..self.degree).collect();
        for (g, &e) in self.generators.iter().zip(&gamma.0) {
            out = compose_perm(&perm_pow(g, e), &out);
        }
        Ok(self.index[&out])
    }

    fn mul(&self, a: usize, b: usize) -> usize {
        self.index[&compose_perm(&self.elements[a], &self.elements[b])]
    }

    /// Closure of a set of elements under multiplication, as sorted element indices.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut set: BTreeSet<usize> = BTreeSet::from([0]);
        let mut queue: VecDeque<usize> = VecDeque::from([0]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(g, x);
                if set.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        set.into_iter().collect()
    }

    /// The subgroup generated by `m`-th powers of the generators, i.e. the image of `mℤⁿ`.
    pub fn power_subgroup(&self, m: u64) -> Vec<usize> {
        let gens: Vec<usize> =
            self.generators.iter().map(|g| self.index[&perm_pow(g, m as i64)]).collect();
        self.closure(&gens)
    }

    /// Every subgroup, ordered by ascending index and then by element list.
    pub fn subgroups(&self) -> Vec<Vec<usize>> {
        let mut found: BTreeSet<Vec<usize>> = (0..self.order()).map(|a| self.closure(&[a])).collect();
        loop {
            let current: Vec<Vec<usize>> = found.iter().cloned().collect();
            let mut grew = false;
            for (i, a) in current.iter().enumerate() {
                for b in &current[i + 1..] {
                    let joined: Vec<usize> = a.iter().chain(b).copied().collect();
                    if found.insert(self.closure(&joined)) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let mut subgroups: Vec<Vec<usize>> = found.into_iter().collect();
        subgroups.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        subgroups
    }

    /// A small generating set of a subgroup, greedily in element order.
    pub fn generating_set(&self, subgroup: &[usize]) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = self.closure(&gens);
        for &x in subgroup {
            if span.binary_search(&x).is_err() {
                gens.push(x);
                span = self.closure(&gens);
            }
        }
        gens
    }

    /// Orbit index of each vertex under a subgroup; orbits numbered by smallest member.
    pub fn orbits(&self, subgroup: &[usize]) -> Vec<usize> {
        let mut orbit = vec![usize::MAX; self.degree];
        let mut next = 0;
        for v in 0..self.degree {
            if orbit[v] != usize::MAX {
                continue;
            }
            for &s in subgroup {
                orbit[self.elements[s][v]] = next;
            }
            next += 1;
        }
        orbit
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GammaGraph {
    Translation(TranslationGraph),
    Finite(FiniteGraph),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeOrbits {
    Finite(usize),
    Infinite,
}

impl GammaGraph {
    /// Line graph on `ℤ`: one orbit, edges `{i, i+1}`.
    pub fn line() -> Self {
        let g = TranslationGraph::new(vec!["a"]).unwrap();
        GammaGraph::Translation(g.with_family(0, 0, DifferenceFamily::finite([1]).unwrap()).unwrap())
    }

    /// One orbit on `ℤ` with a single family.
    pub fn single_family(family: DifferenceFamily) -> Result<Self, GraphError> {
        Ok(GammaGraph::Translation(TranslationGraph::new(vec!["a"])?.with_family(0, 0, family)?))
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        match self {
            GammaGraph::Translation(t) => t.validate(),
            GammaGraph::Finite(f) => f.validate(),
        }
    }

    /// Rank `n` of the acting group `ℤⁿ`.
    pub fn rank(&self) -> usize {
        match self {
            GammaGraph::Translation(_) => 1,
            GammaGraph::Finite(f) => f.rank(),
        }
    }

    pub fn check_gamma(&self, gamma: &GammaElement) -> Result<(), GraphError> {
        if gamma.rank() == self.rank() {
            Ok(())
        } else {
            Err(GraphError::RankMismatch { expected: self.rank(), found: gamma.rank() })
        }
    }

    pub fn check_vertex(&self, v: &Vertex) -> Result<(), GraphError> {
        if self.has_vertex(v) {
            Ok(())
        } else {
            Err(GraphError::InvalidVertex(v.clone()))
        }
    }

    pub fn act(&self, gamma: &GammaElement, v: &Vertex) -> Result<Vertex, GraphError> {
        self.check_gamma(gamma)?;
        self.check_vertex(v)?;
        Ok(match (self, v) {
            (GammaGraph::Translation(_), Vertex::Translation { label, position }) => {
                Vertex::Translation { label: *label, position: position + gamma.0[0] }
            }
            (GammaGraph::Finite(f), Vertex::Finite(id)) => Vertex::Finite(f.image_of(gamma)?[*id]),
            _ => unreachable!("checked above"),
        })
    }

    /// Vertex and edge orbit counts under the whole acting group.
    pub fn orbit_counts(&self) -> (usize, EdgeOrbits) {
        match self {
            GammaGraph::Translation(t) => {
                if !t.all_finite() {
                    return (t.labels.len(), EdgeOrbits::Infinite);
                }
                let mut count = 0;
                for (&(c, c2), fams) in &t.families {
                    let offsets: BTreeSet<i64> = fams
                        .iter()
                        .flat_map(|f| match f {
                            DifferenceFamily::Finite { offsets } => offsets.iter().copied(),
                            _ => unreachable!("all finite"),
                        })
                        .filter(|&d| c != c2 || d > 0)
                        .collect();
                    count += offsets.len();
                }
                (t.labels.len(), EdgeOrbits::Finite(count))
            }
            GammaGraph::Finite(f) => {
                let group = f.image_group();
                let all: Vec<usize> = (0..group.order()).collect();
                let vertex_orbits: BTreeSet<usize> = group.orbits(&all).into_iter().collect();
                let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
                let mut edge_orbits = 0;
                for &(a, b) in &f.edges {
                    if seen.contains(&(a, b)) {
                        continue;
                    }
                    edge_orbits += 1;
                    for p in &group.elements {
                        seen.insert(pair_key(p[a], p[b]));
                    }
                }
                (vertex_orbits.len(), EdgeOrbits::Finite(edge_orbits))
            }
        }
    }

    /// Whether every pair of distinct vertices is adjacent.
    pub fn is_complete(&self) -> bool {
        match self {
            GammaGraph::Translation(t) => match t.labels.len() {
                0 => true,
                1 => t
                    .families(0, 0)
                    .iter()
                    .any(|f| matches!(f, DifferenceFamily::Arithmetic { start: 1, step: 1 })),
                // Distinct labels at the same position are never adjacent.
                _ => false,
            },
            GammaGraph::Finite(f) => f.is_complete(),
        }
    }
}

impl SimplicialGraph<Vertex> for GammaGraph {
    fn has_vertex(&self, v: &Vertex) -> bool {
        match self {
            GammaGraph::Translation(t) => t.has_vertex(v),
            GammaGraph::Finite(f) => f.has_vertex(v),
        }
    }

    fn adjacent(&self, v: &Vertex, w: &Vertex) -> bool {
        match self {
            GammaGraph::Translation(t) => t.adjacent(v, w),
            GammaGraph::Finite(f) => f.adjacent(v, w),
        }
    }
}

/// A finite-index subgroup `K` of `ℤⁿ`.
///
/// `Image { generators, modulus }` is `π⁻¹(⟨π(generators)⟩) ∩ modulus·ℤⁿ`, where
/// `π` maps `ℤⁿ` onto the image group of a finite graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Subgroup {
    Modulus { modulus: u64 },
    Image { generators: Vec<GammaElement>, modulus: u64 },
}

/// The image of an acting element in `Γ/K`.
///
/// `residues` is the element modulo the subgroup's modulus; for finite graphs
/// `coset` is the smallest image-group element (as a permutation) in the coset
/// of its image modulo the image of `K`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GammaImage {
    pub residues: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coset: Option<Vec<usize>>,
}

impl GammaImage {
    pub fn is_trivial(&self) -> bool {
        self.residues.iter().all(|&r| r == 0)
            && self.coset.as_ref().is_none_or(|p| p.iter().enumerate().all(|(i, &x)| i == x))
    }
}

/// `Γ/K` together with its action on the `K`-orbits of a fixed graph.
#[derive(Debug, Clone)]
pub struct GammaQuotient {
    subgroup: Subgroup,
    kind: QuotientKind,
}

#[derive(Debug, Clone)]
enum QuotientKind {
    Translation { modulus: u64, labels: usize },
    Finite { modulus: u64, group: ImageGroup, kernel_image: Vec<usize>, orbits: Vec<usize> },
}

impl GammaQuotient {
    pub fn new(graph: &GammaGraph, subgroup: &Subgroup) -> Result<Self, GraphError> {
        let kind = match (graph, subgroup) {
            (GammaGraph::Translation(t), Subgroup::Modulus { modulus }) => {
                if *modulus == 0 {
                    return Err(GraphError::ZeroModulus);
                }
                QuotientKind::Translation { modulus: *modulus, labels: t.labels.len() }
            }
            (GammaGraph::Finite(f), Subgroup::Image { generators, modulus }) => {
                if *modulus == 0 {
                    return Err(GraphError::ZeroModulus);
                }
                let group = f.image_group();
                let gens = generators
                    .iter()
                    .map(|g| group.project(g))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| GraphError::InvalidSubgroup(e.to_string()))?;
                let spanned = group.closure(&gens);
                let powers = group.power_subgroup(*modulus);
                let kernel_image: Vec<usize> =
                    spanned.into_iter().filter(|x| powers.binary_search(x).is_ok()).collect();
                let orbits = group.orbits(&kernel_image);
                QuotientKind::Finite { modulus: *modulus, group, kernel_image, orbits }
            }
            (GammaGraph::Finite(f), Subgroup::Modulus { modulus }) => {
                // K = mℤⁿ: the image subgroup is everything.
                let units = (0..f.rank())
                    .map(|i| {
                        let mut e = GammaElement::zero(f.rank());
                        e.0[i] = 1;
                        e
                    })
                    .collect();
                let mut q = Self::new(graph, &Subgroup::Image { generators: units, modulus: *modulus })?;
                q.subgroup = subgroup.clone();
                return Ok(q);
            }
            (GammaGraph::Translation(_), Subgroup::Image { .. }) => {
                return Err(GraphError::InvalidSubgroup("translation graphs take a modulus".into()))
            }
        };
        Ok(GammaQuotient { subgroup: subgroup.clone(), kind })
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn modulus(&self) -> u64 {
        match &self.kind {
            QuotientKind::Translation { modulus, .. } | QuotientKind::Finite { modulus, .. } => *modulus,
        }
    }

    pub fn project(&self, gamma: &GammaElement) -> Result<GammaImage, GraphError> {
        let m = self.modulus() as i64;
        let residues = gamma.0.iter().map(|x| x.rem_euclid(m) as u64).collect();
        match &self.kind {
            QuotientKind::Translation { .. } => {
                if gamma.rank() != 1 {
                    return Err(GraphError::RankMismatch { expected: 1, found: gamma.rank() });
                }
                Ok(GammaImage { residues, coset: None })
            }
            QuotientKind::Finite { group, kernel_image, .. } => {
                let x = group.project(gamma)?;
                let coset = kernel_image
                    .iter()
                    .map(|&k| group.mul(x, k))
                    .min_by(|&a, &b| group.elements[a].cmp(&group.elements[b]))
                    .map(|i| group.elements[i].clone());
                Ok(GammaImage { residues, coset })
            }
        }
    }

    pub fn compose(&self, a: &GammaImage, b: &GammaImage) -> GammaImage {
        let m = self.modulus();
        let residues = a.residues.iter().zip(&b.residues).map(|(x, y)| (x + y) % m).collect();
        let coset = match (&self.kind, &a.coset, &b.coset) {
            (QuotientKind::Finite { group, kernel_image, .. }, Some(p), Some(q)) => {
                let x = group.mul(group.index[p], group.index[q]);
                kernel_image
                    .iter()
                    .map(|&k| group.mul(x, k))
                    .min_by(|&a, &b| group.elements[a].cmp(&group.elements[b]))
                    .map(|i| group.elements[i].clone())
            }
            _ => None,
        };
        GammaImage { residues, coset }
    }

    /// Orbit id of a vertex: `label·m + (position mod m)` for translation graphs,
    /// orbits numbered by smallest member for finite graphs.
    pub fn orbit_of(&self, v: &Vertex) -> Option<usize> {
        match (&self.kind, v) {
            (QuotientKind::Translation { modulus, labels }, Vertex::Translation { label, position }) => {
                (*label < *labels).then(|| label * *modulus as usize + position.rem_euclid(*modulus as i64) as usize)
            }
            (QuotientKind::Finite { orbits, .. }, Vertex::Finite(id)) => orbits.get(*id).copied(),
            _ => None,
        }
    }

    pub fn orbit_count(&self) -> usize {
        match &self.kind {
            QuotientKind::Translation { modulus, labels } => labels * *modulus as usize,
            QuotientKind::Finite { orbits, .. } => orbits.iter().max().map_or(0, |m| m + 1),
        }
    }

    /// Representative of each orbit: position `r` for residue `r`, smallest id otherwise.
    pub fn lift(&self, orbit: usize) -> Vertex {
        match &self.kind {
            QuotientKind::Translation { modulus, .. } => {
                let m = *modulus as usize;
                Vertex::Translation { label: orbit / m, position: (orbit % m) as i64 }
            }
            QuotientKind::Finite { orbits, .. } => {
                Vertex::Finite(orbits.iter().position(|&o| o == orbit).expect("orbit exists"))
            }
        }
    }

    /// Action of the image of `gamma` on orbit ids.
    pub fn act_on_orbit(&self, gamma: &GammaElement, orbit: usize) -> Result<usize, GraphError> {
        match &self.kind {
            QuotientKind::Translation { modulus, .. } => {
                let m = *modulus as usize;
                let shift = gamma.0[0].rem_euclid(*modulus as i64) as usize;
                Ok(orbit / m * m + (orbit % m + shift) % m)
            }
            QuotientKind::Finite { group, orbits, .. } => {
                let Vertex::Finite(v) = self.lift(orbit) else { unreachable!() };
                let p = group.project(gamma)?;
                Ok(orbits[group.elements[p][v]])
            }
        }
    }

    /// Action of a `Γ/K` element on orbit ids.
    pub fn act_image_on_orbit(&self, image: &GammaImage, orbit: usize) -> usize {
        match &self.kind {
            QuotientKind::Translation { modulus, .. } => {
                let m = *modulus as usize;
                orbit / m * m + (orbit % m + image.residues[0] as usize) % m
            }
            QuotientKind::Finite { orbits, .. } => {
                let Vertex::Finite(v) = self.lift(orbit) else { unreachable!() };
                let p = image.coset.as_ref().expect("finite quotient images carry a coset");
                orbits[p[v]]
            }
        }
    }

    /// Whether `γ ∈ K`.
    pub fn contains(&self, gamma: &GammaElement) -> Result<bool, GraphError> {
        Ok(self.project(gamma)?.is_trivial())
    }
}

/// How vertices of the original graph map to quotient vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OrbitMap {
    Residues { modulus: u64, labels: usize },
    Table { orbit_of: Vec<usize> },
}

/// `K\G`: vertices are `K`-orbits, edges join orbits with adjacent representatives,
/// and a loop marks an orbit containing two adjacent vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientGraph {
    pub subgroup: Subgroup,
    pub lifts: Vec<Vertex>,
    pub edges: BTreeSet<(usize, usize)>,
    pub loops: BTreeSet<usize>,
    pub orbit_map: OrbitMap,
}

impl QuotientGraph {
    pub fn vertex_count(&self) -> usize {
        self.lifts.len()
    }

    pub fn orbit_of(&self, v: &Vertex) -> Option<usize> {
        match (&self.orbit_map, v) {
            (OrbitMap::Residues { modulus, labels }, Vertex::Translation { label, position }) => (*label < *labels)
                .then(|| label * *modulus as usize + position.rem_euclid(*modulus as i64) as usize),
            (OrbitMap::Table { orbit_of }, Vertex::Finite(id)) => orbit_of.get(*id).copied(),
            _ => None,
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&pair_key(a, b))
    }

    pub fn has_loop(&self, a: usize) -> bool {
        self.loops.contains(&a)
    }
}

impl SimplicialGraph<usize> for QuotientGraph {
    fn has_vertex(&self, v: &usize) -> bool {
        *v < self.lifts.len()
    }

    fn adjacent(&self, v: &usize, w: &usize) -> bool {
        v != w && self.has_edge(*v, *w)
    }

    fn has_loop(&self, v: &usize) -> bool {
        self.loops.contains(v)
    }
}

/// Builds `K\G`. Translation graphs use residues of the difference families;
/// finite graphs enumerate orbits exhaustively.
pub fn quotient_graph(graph: &GammaGraph, subgroup: &Subgroup) -> Result<QuotientGraph, GraphError> {
    let quotient = GammaQuotient::new(graph, subgroup)?;
    quotient_graph_for(graph, &quotient)
}

pub fn quotient_graph_for(graph: &GammaGraph, quotient: &GammaQuotient) -> Result<QuotientGraph, GraphError> {
    let count = quotient.orbit_count();
    let lifts: Vec<Vertex> = (0..count).map(|o| quotient.lift(o)).collect();
    let mut edges = BTreeSet::new();
    let mut loops = BTreeSet::new();
    let orbit_map = match (graph, &quotient.kind) {
        (GammaGraph::Translation(t), QuotientKind::Translation { modulus, labels }) => {
            let m = *modulus as usize;
            for &(c, c2) in t.families.keys() {
                let residues = t.residues(c, c2, *modulus)?;
                for r in 0..m {
                    for &d in &residues {
                        let a = c * m + r;
                        let b = c2 * m + (r + d as usize) % m;
                        if a == b {
                            loops.insert(a);
                        } else {
                            edges.insert(pair_key(a, b));
                        }
                    }
                }
            }
            OrbitMap::Residues { modulus: *modulus, labels: *labels }
        }
        (GammaGraph::Finite(f), QuotientKind::Finite { orbits, .. }) => {
            for &(a, b) in &f.edges {
                let (oa, ob) = (orbits[a], orbits[b]);
                if oa == ob {
                    loops.insert(oa);
                } else {
                    edges.insert(pair_key(oa, ob));
                }
            }
            OrbitMap::Table { orbit_of: orbits.clone() }
        }
        _ => unreachable!("quotient built for this graph"),
    };
    Ok(QuotientGraph { subgroup: quotient.subgroup.clone(), lifts, edges, loops, orbit_map })
}

/// A finite graph on an explicit vertex list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InducedGraph<V> {
    pub vertices: Vec<V>,
    /// Index pairs `(i, j)` with `i < j`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl<V: PartialEq> SimplicialGraph<V> for InducedGraph<V> {
    fn has_vertex(&self, v: &V) -> bool {
        self.vertices.contains(v)
    }

    fn adjacent(&self, v: &V, w: &V) -> bool {
        let i = self.vertices.iter().position(|x| x == v);
        let j = self.vertices.iter().position(|x| x == w);
        matches!((i, j), (Some(i), Some(j)) if i != j && self.edges.contains(&pair_key(i, j)))
    }
}

/// The subgraph induced on `vertices` (sorted and deduplicated).
pub fn induced<V, G>(graph: &G, vertices: impl IntoIterator<Item = V>) -> InducedGraph<V>
where
    V: Ord + Clone,
    G: SimplicialGraph<V> + ?Sized,
{
    let vertices: Vec<V> = vertices.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let mut edges = BTreeSet::new();
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            if graph.adjacent(&vertices[i], &vertices[j]) {
                edges.insert((i, j));
            }
        }
    }
    InducedGraph { vertices, edges }
}
