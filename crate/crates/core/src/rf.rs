//! Three-valued residual finiteness classification of graph wreath products.
//!
//! An instance `G(Δ) ⋊ Γ` with `Δ` and `Γ` residually finite is residually
//! finite exactly when two separation conditions hold for every vertex `v`:
//!
//! * the neighbourhood condition: some finite-index `K` has `Kv ∩ N(v) = ∅`
//!   (only `w ∉ Kv` for each neighbour `w` when `Δ` is abelian);
//! * the pair condition: for every `w ∉ N(v) ∪ {v}` some finite-index `K` has
//!   `Kw ∩ (N(v) ∪ {v}) = ∅`.
//!
//! Positive answers come with explicit moduli or subgroups, negative answers
//! with a witness element, and anything else is reported as unknown.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gamma_graph::{
    DifferenceFamily, EdgeOrbits, FiniteGraph, GammaGraph, ImageGroup, Subgroup, TranslationGraph,
    Vertex,
};
use crate::wreath::{verify_witness, witness, Instance, NonRFWitness, Obstruction, WitnessError, WitnessKind, WitnessParams, WreathElement};

/// How to pick a separating modulus for an offset `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Rule {
    /// `m(t) = |t| + 1`
    AbsPlusOne,
    /// `m(t) = |t| + max_offset + 1`
    AbsPlusOffset { max_offset: u64 },
    /// `m(t)` is the least multiple of `period` exceeding `|t| + max_offset`.
    Periodic { period: u64, max_offset: u64 },
    /// There is nothing to separate.
    Vacuous,
}

impl Rule {
    pub fn modulus(&self, t: i64) -> Option<u64> {
        let t = t.unsigned_abs();
        match self {
            Rule::AbsPlusOne => t.checked_add(1),
            Rule::AbsPlusOffset { max_offset } => t.checked_add(*max_offset)?.checked_add(1),
            Rule::Periodic { period, max_offset } => {
                let floor = t.checked_add(*max_offset)?;
                (floor / period).checked_add(1)?.checked_mul(*period)
            }
            Rule::Vacuous => None,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::AbsPlusOne => write!(f, "m(t) = |t|+1"),
            Rule::AbsPlusOffset { max_offset } => write!(f, "m(t) = |t|+{}", max_offset + 1),
            Rule::Periodic { period, max_offset } => write!(f, "m(t) = least multiple of {period} above |t|+{max_offset}"),
            Rule::Vacuous => write!(f, "vacuous"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Holds,
    Fails { obstruction: Obstruction },
    Unknown,
}

impl Outcome {
    fn merge<'a>(outcomes: impl IntoIterator<Item = &'a Outcome>) -> Outcome {
        let mut unknown = false;
        for o in outcomes {
            match o {
                Outcome::Fails { .. } => return o.clone(),
                Outcome::Unknown => unknown = true,
                Outcome::Holds => {}
            }
        }
        if unknown {
            Outcome::Unknown
        } else {
            Outcome::Holds
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReport {
    pub label: usize,
    /// Least `m` with no loop at any vertex of `mℤ\G` in this orbit.
    pub loop_free_modulus: Option<u64>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighbourhoodReport {
    pub abelian: bool,
    /// Keeps each neighbour out of the orbit of `v` (translation graphs).
    pub edge_rule: Option<Rule>,
    pub labels: Vec<LabelReport>,
    /// A single subgroup working for every vertex (finite graphs).
    pub subgroup: Option<Subgroup>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetModulus {
    pub offset: i64,
    pub modulus: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    pub labels: (usize, usize),
    pub rule: Option<Rule>,
    /// Offsets handled outside the rule, with the least working modulus.
    pub exceptions: Vec<OffsetModulus>,
    /// Offsets up to `t_max` for which no modulus up to the bound was found.
    pub unresolved: Vec<i64>,
    pub outcome: Outcome,
}

impl PairReport {
    /// A modulus separating `(c', t)` from `N((c, 0)) ∪ {(c, 0)}`, if known.
    pub fn modulus(&self, t: i64) -> Option<u64> {
        let t = t.abs();
        if let Some(e) = self.exceptions.iter().find(|e| e.offset == t) {
            return Some(e.modulus);
        }
        self.rule.and_then(|r| r.modulus(t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairConditionReport {
    pub t_max: u64,
    pub pairs: Vec<PairReport>,
    pub subgroup: Option<Subgroup>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Neighbourhood,
    Pair,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Neighbourhood => "neighbourhood condition",
            Condition::Pair => "pair condition",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WreathReason {
    /// No vertices at all.
    EmptyGraph,
    AbelianVertexGroup,
    /// `ℤⁿ` acts through a finite group, so vertex stabilisers have finite index.
    FiniteIndexStabilisers,
}

impl fmt::Display for WreathReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WreathReason::EmptyGraph => "the graph has no vertices",
            WreathReason::AbelianVertexGroup => "the vertex group is abelian",
            WreathReason::FiniteIndexStabilisers => "vertex stabilisers have finite index",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    Conditions { neighbourhood: NeighbourhoodReport, pair: PairConditionReport },
    Wreath { reason: WreathReason },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    ResiduallyFinite { evidence: Evidence },
    NotResiduallyFinite { witness: NonRFWitness },
    Unknown { bound: u64, condition: Condition },
}

impl Verdict {
    pub fn is_rf(&self) -> bool {
        matches!(self, Verdict::ResiduallyFinite { .. })
    }

    pub fn is_not_rf(&self) -> bool {
        matches!(self, Verdict::NotResiduallyFinite { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::ResiduallyFinite { .. } => write!(f, "RESIDUALLY FINITE"),
            Verdict::NotResiduallyFinite { witness } => write!(f, "NOT RESIDUALLY FINITE ({} witness)", witness.kind),
            Verdict::Unknown { bound, condition } => write!(f, "UNKNOWN ({condition} undecided up to modulus {bound})"),
        }
    }
}

fn label_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |c| (c..n).map(move |c2| (c, c2)))
}

fn first_modulus(bound: u64, mut ok: impl FnMut(u64) -> bool) -> Option<u64> {
    (1..=bound).find(|&m| ok(m))
}

fn loop_free_modulus(graph: &TranslationGraph, c: usize, bound: u64) -> Option<u64> {
    first_modulus(bound, |m| !graph.residues(c, c, m).expect("m ≥ 1").contains(&0))
}

/// `m` keeps `(c', t)` out of `N((c, 0)) ∪ {(c, 0)}` modulo `m`.
fn separates_offset(graph: &TranslationGraph, c: usize, c2: usize, t: i64, m: u64) -> bool {
    let class = t.rem_euclid(m as i64) as u64;
    (c != c2 || class != 0) && !graph.residues(c, c2, m).expect("m ≥ 1").contains(&class)
}

/// The largest subgroup `P` of the image group, in search order, satisfying `ok`.
fn uniform_subgroup(group: &ImageGroup, mut ok: impl FnMut(&[usize]) -> bool) -> Subgroup {
    let chosen = group
        .subgroups()
        .into_iter()
        .find(|p| ok(p))
        .expect("the trivial subgroup separates everything in a simplicial graph");
    Subgroup::Image {
        generators: group.generating_set(&chosen).into_iter().map(|g| group.preimage(g).clone()).collect(),
        modulus: 1,
    }
}

fn neighbours(f: &FiniteGraph, v: usize) -> BTreeSet<usize> {
    f.edges().iter().filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None }).collect()
}

fn orbit_under(group: &ImageGroup, p: &[usize], v: usize) -> BTreeSet<usize> {
    p.iter().map(|&i| group.element(i)[v]).collect()
}

/// Checks the neighbourhood condition, searching moduli up to `bound`.
pub fn check_neighbourhood(instance: &Instance, bound: u64) -> NeighbourhoodReport {
    let abelian = instance.delta.is_abelian();
    match &instance.graph {
        GammaGraph::Translation(t) => {
            let labels: Vec<LabelReport> = (0..t.labels().len())
                .map(|c| {
                    let loop_free_modulus = loop_free_modulus(t, c, bound);
                    let outcome = if abelian || loop_free_modulus.is_some() {
                        Outcome::Holds
                    } else {
                        match Obstruction::find(t, c, c, 0) {
                            Some(obstruction) => Outcome::Fails { obstruction },
                            None => Outcome::Unknown,
                        }
                    };
                    LabelReport { label: c, loop_free_modulus, outcome }
                })
                .collect();
            let outcome = Outcome::merge(labels.iter().map(|l| &l.outcome));
            // Every edge offset is nonzero, so any m above it keeps the neighbour out of the orbit.
            let edge_rule = abelian.then_some(Rule::AbsPlusOne);
            NeighbourhoodReport { abelian, edge_rule, labels, subgroup: None, outcome }
        }
        GammaGraph::Finite(f) => {
            let group = f.image_group();
            let subgroup = uniform_subgroup(&group, |p| {
                (0..f.vertex_count()).all(|v| {
                    // One subgroup for all neighbours at once, which also covers abelian Δ.
                    orbit_under(&group, p, v).is_disjoint(&neighbours(f, v))
                })
            });
            NeighbourhoodReport { abelian, edge_rule: None, labels: Vec::new(), subgroup: Some(subgroup), outcome: Outcome::Holds }
        }
    }
}

/// Default offset range for the pair condition: three times the largest family parameter.
pub fn default_t_max(graph: &GammaGraph) -> u64 {
    let GammaGraph::Translation(t) = graph else { return 0 };
    let datum = t
        .family_table()
        .values()
        .flatten()
        .map(|f| match f {
            DifferenceFamily::Finite { offsets } => offsets.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0),
            DifferenceFamily::Factorial { shift } => *shift,
            DifferenceFamily::Arithmetic { start, step } => start.saturating_add(*step),
        })
        .max()
        .unwrap_or(0);
    3 * datum.max(1)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

fn check_pair(graph: &TranslationGraph, c: usize, c2: usize, bound: u64, t_max: u64) -> PairReport {
    let fams = graph.families(c, c2);
    let same = c == c2;
    let non_adjacent = |t: i64| !(same && t == 0) && !graph.offset_in(c, c2, t);
    let lowest = if same { 1 } else { 0 };

    // Some ±(a + n) family leaves only the offsets below a to check.
    let dense_start = fams
        .iter()
        .filter_map(|f| match f {
            DifferenceFamily::Arithmetic { start, step: 1 } => Some(*start),
            _ => None,
        })
        .min();
    if let Some(a) = dense_start {
        if (lowest..a as i64).all(|t| !non_adjacent(t)) {
            return PairReport {
                labels: (c, c2),
                rule: Some(Rule::Vacuous),
                exceptions: Vec::new(),
                unresolved: Vec::new(),
                outcome: Outcome::Holds,
            };
        }
    }

    let max_finite = fams.iter().filter_map(DifferenceFamily::max_offset).max().unwrap_or(0);
    let has_factorial = fams.iter().any(|f| matches!(f, DifferenceFamily::Factorial { .. }));
    let mut period = 1u64;
    let mut max_start = 0u64;
    for f in fams {
        if let DifferenceFamily::Arithmetic { start, step } = f {
            period = lcm(period, *step).unwrap_or(u64::MAX);
            max_start = max_start.max(*start);
        }
    }
    let rule = if has_factorial {
        None
    } else if period == 1 && max_start == 0 {
        Some(Rule::AbsPlusOffset { max_offset: max_finite })
    } else {
        Some(Rule::Periodic { period, max_offset: max_finite })
    };

    // Offsets the rule does not cover: every offset for factorial families,
    // otherwise those congruent to ±a mod b below some start a.
    let mut candidates: BTreeSet<i64> = BTreeSet::new();
    for f in fams {
        match f {
            DifferenceFamily::Factorial { shift } => {
                candidates.insert(*shift as i64);
            }
            DifferenceFamily::Arithmetic { start, step } => {
                let (a, b) = (*start as i64, *step as i64);
                candidates.extend((0..a).filter(|t| (t - a).rem_euclid(b) == 0 || (t + a).rem_euclid(b) == 0));
            }
            DifferenceFamily::Finite { .. } => {}
        }
    }
    if has_factorial {
        candidates.extend(0..=t_max as i64);
    }
    candidates.retain(|&t| t >= lowest && non_adjacent(t));

    let mut exceptions = Vec::new();
    let mut unresolved = Vec::new();
    for t in candidates {
        if let Some(obstruction) = Obstruction::find(graph, c, c2, t) {
            return PairReport { labels: (c, c2), rule, exceptions, unresolved, outcome: Outcome::Fails { obstruction } };
        }
        match first_modulus(bound, |m| separates_offset(graph, c, c2, t, m)) {
            Some(modulus) => exceptions.push(OffsetModulus { offset: t, modulus }),
            None => unresolved.push(t),
        }
    }
    let outcome = if rule.is_some() && unresolved.is_empty() { Outcome::Holds } else { Outcome::Unknown };
    PairReport { labels: (c, c2), rule, exceptions, unresolved, outcome }
}

/// Checks the pair condition. Translation graphs with factorial families are
/// only examined for offsets up to `t_max` beyond the lemma-driven classes.
pub fn check_pairs(instance: &Instance, bound: u64, t_max: Option<u64>) -> PairConditionReport {
    let t_max = t_max.unwrap_or_else(|| default_t_max(&instance.graph));
    match &instance.graph {
        GammaGraph::Translation(t) => {
            let pairs: Vec<PairReport> =
                label_pairs(t.labels().len()).map(|(c, c2)| check_pair(t, c, c2, bound, t_max)).collect();
            let outcome = Outcome::merge(pairs.iter().map(|p| &p.outcome));
            PairConditionReport { t_max, pairs, subgroup: None, outcome }
        }
        GammaGraph::Finite(f) => {
            let group = f.image_group();
            let n = f.vertex_count();
            let subgroup = uniform_subgroup(&group, |p| {
                (0..n).all(|v| {
                    let mut closed = neighbours(f, v);
                    closed.insert(v);
                    (0..n).filter(|w| !closed.contains(w)).all(|w| orbit_under(&group, p, w).is_disjoint(&closed))
                })
            });
            PairConditionReport { t_max, pairs: Vec::new(), subgroup: Some(subgroup), outcome: Outcome::Holds }
        }
    }
}

fn witness_for(instance: &Instance, obstruction: &Obstruction, kind: WitnessKind) -> Result<NonRFWitness, WitnessError> {
    let (c, c2) = obstruction.labels();
    let params = WitnessParams {
        v: Some(Vertex::at(c, 0)),
        w: (kind == WitnessKind::PairCommutator).then(|| Vertex::at(c2, obstruction.offset())),
        ..Default::default()
    };
    witness(instance, kind, &params)
}

/// Classifies the instance. Unknown means a condition was neither certified
/// nor refuted within `bound` (and `t_max` for the pair condition).
pub fn classify(instance: &Instance, bound: u64, t_max: Option<u64>) -> Verdict {
    let neighbourhood = check_neighbourhood(instance, bound);
    if let Outcome::Fails { obstruction } = &neighbourhood.outcome {
        let witness = witness_for(instance, obstruction, WitnessKind::VertexCommutator).expect("obstruction yields a witness");
        return Verdict::NotResiduallyFinite { witness };
    }
    let pair = check_pairs(instance, bound, t_max);
    if let Outcome::Fails { obstruction } = &pair.outcome {
        let witness = witness_for(instance, obstruction, WitnessKind::PairCommutator).expect("obstruction yields a witness");
        return Verdict::NotResiduallyFinite { witness };
    }
    if neighbourhood.outcome == Outcome::Unknown {
        return Verdict::Unknown { bound, condition: Condition::Neighbourhood };
    }
    if pair.outcome == Outcome::Unknown {
        return Verdict::Unknown { bound, condition: Condition::Pair };
    }
    Verdict::ResiduallyFinite { evidence: Evidence::Conditions { neighbourhood, pair } }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("the graph is not complete")]
pub struct NotComplete;

/// Classification for complete graphs: residually finite iff `Δ` is abelian
/// or vertex stabilisers have finite index.
pub fn classify_wreath(instance: &Instance) -> Result<Verdict, NotComplete> {
    if !instance.graph.is_complete() {
        return Err(NotComplete);
    }
    let reason = match &instance.graph {
        GammaGraph::Translation(t) if t.labels().is_empty() => WreathReason::EmptyGraph,
        _ if instance.delta.is_abelian() => WreathReason::AbelianVertexGroup,
        GammaGraph::Finite(_) => WreathReason::FiniteIndexStabilisers,
        GammaGraph::Translation(t) => {
            let obstruction = Obstruction::find(t, 0, 0, 0).expect("a complete line meets every class");
            let witness = witness_for(instance, &obstruction, WitnessKind::VertexCommutator).expect("non-abelian vertex group");
            return Ok(Verdict::NotResiduallyFinite { witness });
        }
    };
    Ok(Verdict::ResiduallyFinite { evidence: Evidence::Wreath { reason } })
}

/// A modulus bound within which `separate` must succeed on `x`, derived from
/// the recorded rules: separating moduli for every support pair combine by
/// taking their least common multiple.
pub fn separation_modulus(instance: &Instance, evidence: &Evidence, x: &WreathElement) -> Option<u64> {
    let Evidence::Conditions { neighbourhood, pair } = evidence else { return None };
    let gamma_mod = x.gamma.0.iter().map(|g| g.unsigned_abs()).max().unwrap_or(0) + 1;
    match &instance.graph {
        GammaGraph::Finite(_) => Some(if x.gamma.is_zero() { 1 } else { gamma_mod }),
        GammaGraph::Translation(t) => {
            let mut m = if x.gamma.is_zero() { 1 } else { gamma_mod };
            let support: Vec<(usize, i64)> = x
                .word
                .vertices()
                .into_iter()
                .map(|v| match v {
                    Vertex::Translation { label, position } => (label, position),
                    Vertex::Finite(_) => unreachable!("translation vertex"),
                })
                .collect();
            if !neighbourhood.abelian {
                let labels: BTreeSet<usize> = support.iter().map(|s| s.0).collect();
                for c in labels {
                    m = lcm(m, neighbourhood.labels[c].loop_free_modulus?)?;
                }
            }
            for (i, &(c, x0)) in support.iter().enumerate() {
                for &(c2, y0) in &support[i + 1..] {
                    let (lo, hi, d) = if c <= c2 { (c, c2, y0 - x0) } else { (c2, c, x0 - y0) };
                    let needed = if t.offset_in(lo, hi, d) {
                        if lo == hi {
                            neighbourhood.edge_rule.unwrap_or(Rule::AbsPlusOne).modulus(d)?
                        } else {
                            1
                        }
                    } else {
                        pair.pairs.iter().find(|p| p.labels == (lo, hi))?.modulus(d)?
                    };
                    m = lcm(m, needed)?;
                }
            }
            Some(m)
        }
    }
}

/// Re-derives a verdict. Witnesses are re-verified; positive evidence is
/// recomputed with a bound covering every recorded modulus and compared.
pub fn recheck_verdict(instance: &Instance, verdict: &Verdict) -> bool {
    match verdict {
        Verdict::NotResiduallyFinite { witness } => verify_witness(instance, witness),
        Verdict::ResiduallyFinite { evidence: Evidence::Wreath { .. } } => {
            classify_wreath(instance).as_ref() == Ok(verdict)
        }
        Verdict::ResiduallyFinite { evidence: Evidence::Conditions { neighbourhood, pair } } => {
            let loop_free = neighbourhood.labels.iter().filter_map(|l| l.loop_free_modulus);
            let exceptions = pair.pairs.iter().flat_map(|p| p.exceptions.iter().map(|e| e.modulus));
            let bound = loop_free.chain(exceptions).max().unwrap_or(1);
            classify(instance, bound, Some(pair.t_max)) == *verdict
        }
        Verdict::Unknown { .. } => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationCondition {
    pub name: String,
    pub holds: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationReport {
    pub finitely_presented: bool,
    pub conditions: Vec<PresentationCondition>,
}

/// Finite presentability: `Δ` and `Γ` finitely presented, finitely many orbits
/// of vertices and edges, and finitely generated vertex stabilisers.
pub fn check_finitely_presented(instance: &Instance) -> PresentationReport {
    let (vertex_orbits, edge_orbits) = instance.graph.orbit_counts();
    let cond = |name: &str, holds: bool, reason: String| PresentationCondition { name: name.into(), holds, reason };
    let rank = instance.graph.rank();
    let conditions = vec![
        cond("vertex group finitely presented", true, format!("{} is finitely presented", instance.delta)),
        cond("acting group finitely presented", true, format!("Z^{rank} is finitely presented")),
        match edge_orbits {
            EdgeOrbits::Finite(e) => {
                cond("finitely many orbits", true, format!("{vertex_orbits} vertex orbits and {e} edge orbits"))
            }
            EdgeOrbits::Infinite => {
                cond("finitely many orbits", false, format!("{vertex_orbits} vertex orbits but infinitely many edge orbits"))
            }
        },
        cond("stabilisers finitely generated", true, format!("every subgroup of Z^{rank} is finitely generated")),
    ];
    PresentationReport { finitely_presented: conditions.iter().all(|c| c.holds), conditions }
}
