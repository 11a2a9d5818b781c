//! Finite partial models of `ℤⁿ`-actions on graphs (LEF certificates).
//!
//! Given finite `A ⊂ Γ` and a finite vertex set `E`, a certificate is a finite
//! group `Q` acting on a finite graph `Y`, with injections `φ: A → Q` and
//! `ψ: E → Y` such that `φ` is a partial homomorphism, `ψ` is equivariant
//! wherever `a·e ∈ E`, and `ψ` presents `E` as an induced subgraph of `Y`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamma_graph::{
    quotient_graph, DifferenceFamily, GammaElement, GammaGraph, GraphError, OrbitMap, QuotientGraph, SimplicialGraph,
    Subgroup, TranslationGraph, Vertex,
};
use crate::groups::{GroupElement, GroupSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LefError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no modulus up to {bound} gives a certificate")]
    SearchExhausted { bound: u64 },
}

/// `H`: the graph on the labels meeting `E`, keeping only the edge offsets
/// realised between two vertices of `E`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// Original label of each label of `H`.
    pub labels: Vec<usize>,
    /// Realised offsets `|y − x|` per pair of `H` labels.
    #[serde(with = "crate::gamma_graph::pair_map")]
    pub realized: BTreeMap<(usize, usize), BTreeSet<u64>>,
    pub graph: TranslationGraph,
}

impl Truncation {
    /// Name of an original vertex in `H`.
    pub fn map_vertex(&self, v: &Vertex) -> Option<Vertex> {
        match v {
            Vertex::Translation { label, position } => {
                self.labels.iter().position(|c| c == label).map(|i| Vertex::at(i, *position))
            }
            Vertex::Finite(_) => None,
        }
    }

    /// Every realised offset, over all label pairs.
    pub fn offsets(&self) -> BTreeSet<u64> {
        self.realized.values().flatten().copied().collect()
    }
}

fn translation(graph: &GammaGraph) -> Result<&TranslationGraph, GraphError> {
    match graph {
        GammaGraph::Translation(t) => Ok(t),
        GammaGraph::Finite(_) => Err(GraphError::NotTranslation),
    }
}

pub fn truncate_graph(graph: &GammaGraph, e: &[Vertex]) -> Result<Truncation, LefError> {
    let t = translation(graph)?;
    let mut points: BTreeSet<(usize, i64)> = BTreeSet::new();
    for v in e {
        graph.check_vertex(v)?;
        if let Vertex::Translation { label, position } = v {
            points.insert((*label, *position));
        }
    }
    let labels: Vec<usize> = points.iter().map(|p| p.0).collect::<BTreeSet<_>>().into_iter().collect();
    let index = |c: usize| labels.binary_search(&c).expect("label of a point");
    let mut realized: BTreeMap<(usize, usize), BTreeSet<u64>> = BTreeMap::new();
    let pts: Vec<(usize, i64)> = points.into_iter().collect();
    for (i, &(c, x)) in pts.iter().enumerate() {
        for &(c2, y) in &pts[i + 1..] {
            if t.offset_in(c, c2, y - x) {
                let key = (index(c).min(index(c2)), index(c).max(index(c2)));
                realized.entry(key).or_default().insert((y - x).unsigned_abs());
            }
        }
    }
    let mut h = TranslationGraph::new(labels.iter().map(|&c| t.labels()[c].clone()).collect())?;
    for (&(i, j), offs) in &realized {
        h.add_family(i, j, DifferenceFamily::finite(offs.iter().map(|&d| d as i64))?)?;
    }
    Ok(Truncation { labels, realized, graph: h })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LefCertificate {
    /// `Q = (ℤ/m)ⁿ`.
    pub q: GroupSpec,
    pub modulus: u64,
    /// `Y`, the quotient of the (truncated) graph by `mℤⁿ`.
    pub y: QuotientGraph,
    pub phi: Vec<(GammaElement, GroupElement)>,
    pub psi: Vec<(Vertex, usize)>,
    pub truncation: Option<Truncation>,
}

fn reduce(gamma: &GammaElement, m: u64) -> GroupElement {
    GroupElement::Vector(gamma.0.iter().map(|x| x.rem_euclid(m as i64)).collect())
}

fn perm_order(p: &[usize]) -> u64 {
    let mut seen = vec![false; p.len()];
    let mut order = 1u64;
    for start in 0..p.len() {
        let mut len = 0u64;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = p[x];
            len += 1;
        }
        if len > 0 {
            order = order / gcd(order, len) * len;
        }
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

/// Searches `m` up to `bound` for a certificate with `Q = (ℤ/m)ⁿ`.
///
/// Translation graphs are truncated to `H` first and `m` must also make
/// `A ∪ (B + E)` distinct modulo `m`, where `B` is the set of realised offsets.
/// Finite graphs use moduli divisible by the exponent of the acting group, so
/// `Y` is the graph itself.
pub fn lef_certificate(graph: &GammaGraph, a: &[GammaElement], e: &[Vertex], bound: u64) -> Result<LefCertificate, LefError> {
    graph.validate()?;
    let a: Vec<GammaElement> = a.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    for g in &a {
        graph.check_gamma(g)?;
    }
    let e: Vec<Vertex> = e.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    for v in &e {
        graph.check_vertex(v)?;
    }
    let rank = graph.rank();
    let (target, truncation, step) = match graph {
        GammaGraph::Translation(_) => {
            let trunc = truncate_graph(graph, &e)?;
            (GammaGraph::Translation(trunc.graph.clone()), Some(trunc), 1)
        }
        GammaGraph::Finite(f) => {
            let exponent = f.generators().iter().fold(1u64, |acc, g| {
                let o = perm_order(g);
                acc / gcd(acc, o) * o
            });
            (graph.clone(), None, exponent)
        }
    };
    let recipe: Vec<i64> = match &truncation {
        Some(trunc) => {
            let offsets = trunc.offsets();
            let positions = e.iter().filter_map(|v| match v {
                Vertex::Translation { position, .. } => Some(*position),
                Vertex::Finite(_) => None,
            });
            let shifted: Vec<i64> = positions.flat_map(|x| offsets.iter().map(move |&b| x + b as i64)).collect();
            a.iter().map(|g| g.0[0]).chain(shifted).collect::<BTreeSet<_>>().into_iter().collect()
        }
        None => Vec::new(),
    };
    let map_e = |v: &Vertex| match &truncation {
        Some(t) => t.map_vertex(v).expect("label of a point"),
        None => v.clone(),
    };

    for m in (step..=bound).step_by(step as usize) {
        let distinct: BTreeSet<i64> = recipe.iter().map(|x| x.rem_euclid(m as i64)).collect();
        if distinct.len() != recipe.len() {
            continue;
        }
        let y = quotient_graph(&target, &Subgroup::Modulus { modulus: m })?;
        let cert = LefCertificate {
            q: GroupSpec::CyclicPower { modulus: m, rank },
            modulus: m,
            phi: a.iter().map(|g| (g.clone(), reduce(g, m))).collect(),
            psi: e.iter().map(|v| (v.clone(), y.orbit_of(&map_e(v)).expect("vertex of the target"))).collect(),
            y,
            truncation: truncation.clone(),
        };
        if verify_lef(&cert, graph, &a, &e) {
            return Ok(cert);
        }
    }
    Err(LefError::SearchExhausted { bound })
}

/// The action of `r ∈ (ℤ/m)ⁿ` on a vertex of `Y`.
fn act_on_y(graph: &GammaGraph, y: &QuotientGraph, m: u64, r: &GroupElement, o: usize) -> Option<usize> {
    let GroupElement::Vector(r) = r else { return None };
    match (&y.orbit_map, graph) {
        (OrbitMap::Residues { modulus, labels }, GammaGraph::Translation(_)) => {
            if *modulus != m || o >= labels * m as usize {
                return None;
            }
            let (label, res) = (o / m as usize, o % m as usize);
            Some(label * m as usize + (res as i64 + r[0]).rem_euclid(m as i64) as usize)
        }
        (OrbitMap::Table { orbit_of }, GammaGraph::Finite(f)) => {
            // Y is the graph itself; mℤⁿ must act trivially on it.
            if orbit_of.iter().enumerate().any(|(i, &x)| i != x) {
                return None;
            }
            let perm = f.image_of(&GammaElement(r.clone())).ok()?;
            perm.get(o).copied()
        }
        _ => None,
    }
}

/// Re-checks a certificate against the original action on `A` and `E`.
pub fn verify_lef(cert: &LefCertificate, graph: &GammaGraph, a: &[GammaElement], e: &[Vertex]) -> bool {
    let m = cert.modulus;
    let rank = graph.rank();
    if m == 0 || cert.q != (GroupSpec::CyclicPower { modulus: m, rank }) {
        return false;
    }
    let a: BTreeSet<&GammaElement> = a.iter().collect();
    let e: BTreeSet<&Vertex> = e.iter().collect();
    let phi: BTreeMap<&GammaElement, &GroupElement> = cert.phi.iter().map(|(g, q)| (g, q)).collect();
    let psi: BTreeMap<&Vertex, usize> = cert.psi.iter().map(|(v, y)| (v, *y)).collect();
    if phi.len() != cert.phi.len() || psi.len() != cert.psi.len() {
        return false;
    }
    if phi.keys().copied().collect::<BTreeSet<_>>() != a || psi.keys().copied().collect::<BTreeSet<_>>() != e {
        return false;
    }
    if phi.values().any(|q| !cert.q.contains(q)) || psi.values().any(|&y| y >= cert.y.vertex_count()) {
        return false;
    }

    // Q acts on Y by automorphisms.
    let n = cert.y.vertex_count();
    for i in 0..rank {
        let mut unit = vec![0i64; rank];
        unit[i] = 1;
        let unit = GroupElement::Vector(unit);
        let Some(image) = (0..n).map(|o| act_on_y(graph, &cert.y, m, &unit, o)).collect::<Option<Vec<usize>>>() else {
            return false;
        };
        if image.iter().collect::<BTreeSet<_>>().len() != n {
            return false;
        }
        let preserved = (0..n).all(|p| {
            cert.y.has_loop(p) == cert.y.has_loop(image[p])
                && (p + 1..n).all(|q| cert.y.has_edge(p, q) == cert.y.has_edge(image[p], image[q]))
        });
        if !preserved {
            return false;
        }
    }

    if phi.values().collect::<BTreeSet<_>>().len() != phi.len() {
        return false;
    }
    if psi.values().collect::<BTreeSet<_>>().len() != psi.len() {
        return false;
    }
    for (&x, &px) in &phi {
        for (&y, &py) in &phi {
            if let Some(&pxy) = phi.get(&x.add(y)) {
                if cert.q.compose(px, py).ok().as_ref() != Some(pxy) {
                    return false;
                }
            }
        }
    }
    for (&g, &pg) in &phi {
        for (&v, &pv) in &psi {
            let Ok(moved) = graph.act(g, v) else { return false };
            if let Some(&target) = psi.get(&moved) {
                if act_on_y(graph, &cert.y, m, pg, pv) != Some(target) {
                    return false;
                }
            }
        }
    }
    let points: Vec<(&Vertex, usize)> = psi.iter().map(|(&v, &y)| (v, y)).collect();
    for (i, &(v, pv)) in points.iter().enumerate() {
        if cert.y.has_loop(pv) {
            return false;
        }
        for &(w, pw) in &points[i + 1..] {
            if graph.adjacent(v, w) != cert.y.has_edge(pv, pw) {
                return false;
            }
        }
    }
    true
}

/// Modulus within which the search succeeds on a translation graph:
/// one more than the larger of the span of `A ∪ (B + E)` and twice the
/// position diameter of `E`.
pub fn lef_modulus_rule(graph: &GammaGraph, a: &[GammaElement], e: &[Vertex]) -> Result<u64, LefError> {
    let trunc = truncate_graph(graph, e)?;
    let positions: Vec<i64> = e
        .iter()
        .filter_map(|v| match v {
            Vertex::Translation { position, .. } => Some(*position),
            Vertex::Finite(_) => None,
        })
        .collect();
    let offsets = trunc.offsets();
    let recipe: Vec<i64> = a
        .iter()
        .map(|g| g.0[0])
        .chain(positions.iter().flat_map(|x| offsets.iter().map(move |&b| x + b as i64)))
        .collect();
    let span = |xs: &[i64]| match (xs.iter().min(), xs.iter().max()) {
        (Some(lo), Some(hi)) => (hi - lo) as u64,
        _ => 0,
    };
    Ok(span(&recipe).max(2 * span(&positions)) + 1)
}
