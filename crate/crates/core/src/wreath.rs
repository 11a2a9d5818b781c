//! Arithmetic in `G(Δ) ⋊ Γ`, witnesses against residual finiteness, and the
//! separation engine that maps an element nontrivially into a finite quotient
//! graph product.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamma_graph::{
    quotient_graph_for, DifferenceFamily, GammaElement, GammaGraph, GammaImage, GammaQuotient, GraphError,
    OrbitMap, QuotientGraph, SimplicialGraph, Subgroup, TranslationGraph, Vertex,
};
use crate::graph_product::{canonical_form, gp_compose, gp_invert, push_forward, ProductError, Syllable, Word};
use crate::groups::{GroupElement, GroupError, GroupSpec, Homomorphism};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WreathError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A vertex group together with a graph, which fixes the acting group `ℤⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub delta: GroupSpec,
    pub graph: GammaGraph,
}

impl Instance {
    pub fn new(delta: GroupSpec, graph: GammaGraph) -> Result<Self, WreathError> {
        delta.validate_spec()?;
        graph.validate()?;
        Ok(Instance { delta, graph })
    }

    pub fn identity(&self) -> WreathElement {
        WreathElement { word: Word::empty(), gamma: GammaElement::zero(self.graph.rank()) }
    }

    /// Normalises the word and checks the acting element's rank.
    pub fn element(&self, word: Word<Vertex>, gamma: GammaElement) -> Result<WreathElement, WreathError> {
        self.graph.check_gamma(&gamma)?;
        Ok(WreathElement { word: canonical_form(&self.graph, &self.delta, &word)?, gamma })
    }

    pub fn word(&self, syllables: Vec<(Vertex, GroupElement)>) -> Result<Word<Vertex>, WreathError> {
        Ok(Word::new(&self.delta, syllables.into_iter().map(|(v, g)| Syllable::new(v, g)).collect())?)
    }
}

/// `(w, γ) ∈ G(Δ) ⋊ Γ` with `w` in normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WreathElement {
    pub word: Word<Vertex>,
    pub gamma: GammaElement,
}

impl WreathElement {
    pub fn is_identity(&self) -> bool {
        self.word.is_empty() && self.gamma.is_zero()
    }
}

impl fmt::Display for WreathElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; {})", self.word, self.gamma)
    }
}

/// `γ · w`, moving every syllable along the vertex action.
pub fn act_word(graph: &GammaGraph, delta: &GroupSpec, gamma: &GammaElement, w: &Word<Vertex>) -> Result<Word<Vertex>, WreathError> {
    let moved = w
        .syllables()
        .iter()
        .map(|s| Ok(Syllable::new(graph.act(gamma, &s.vertex)?, s.value.clone())))
        .collect::<Result<Vec<_>, GraphError>>()?;
    Ok(canonical_form(graph, delta, &Word::new(delta, moved)?)?)
}

/// `(w₁, γ₁)(w₂, γ₂) = (w₁ · γ₁w₂, γ₁γ₂)`.
pub fn gw_compose(instance: &Instance, x: &WreathElement, y: &WreathElement) -> Result<WreathElement, WreathError> {
    instance.graph.check_gamma(&x.gamma)?;
    instance.graph.check_gamma(&y.gamma)?;
    let moved = act_word(&instance.graph, &instance.delta, &x.gamma, &y.word)?;
    Ok(WreathElement {
        word: gp_compose(&instance.graph, &instance.delta, &x.word, &moved)?,
        gamma: x.gamma.add(&y.gamma),
    })
}

/// `(w, γ)⁻¹ = (γ⁻¹w⁻¹, γ⁻¹)`.
pub fn gw_invert(instance: &Instance, x: &WreathElement) -> Result<WreathElement, WreathError> {
    instance.graph.check_gamma(&x.gamma)?;
    let inv = gp_invert(&instance.graph, &instance.delta, &x.word)?;
    let gamma = x.gamma.neg();
    Ok(WreathElement { word: act_word(&instance.graph, &instance.delta, &gamma, &inv)?, gamma })
}

// ---------------------------------------------------------------------------
// Witnesses

/// Which commutation trick kills the witness in every finite quotient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// `[g₍ᵥ₎, h₍ᵥ₎]` where every finite-index `K` moves `v` to a neighbour.
    VertexCommutator,
    /// `[g₍ᵥ₎, g₍w₎]` for non-adjacent `v ≠ w` with `Kw` always meeting `N(v) ∪ {v}`.
    PairCommutator,
    /// `g₍ᵥ₎ g₍w₎⁻¹` for `v ≠ w` never separated by a finite-index `K`.
    OrbitRatio,
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessKind::VertexCommutator => "vertex commutator",
            WitnessKind::PairCommutator => "pair commutator",
            WitnessKind::OrbitRatio => "orbit ratio",
        })
    }
}

/// Why an offset class is met by every finite-index subgroup `mℤ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "kebab-case")]
pub enum Obstruction {
    /// `±n!` between the labels: `m | m!`, so residue 0 is hit for every `m`.
    FactorialDivides { labels: (usize, usize) },
    /// `±(s + n!)`: `s + n! ≡ s (mod m)` once `n ≥ m`, so the offset `±s` is hit for every `m`.
    FactorialShift { labels: (usize, usize), shift: u64, offset: i64 },
    /// `±(a + b·n)` reaches class `t` mod `m` iff `gcd(b, m)` divides `t − a` or `t + a`;
    /// that holds for every divisor of `b`, hence for every `m`.
    ArithmeticCovers { labels: (usize, usize), start: u64, step: u64, offset: i64 },
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obstruction::FactorialDivides { .. } => write!(f, "±n! is 0 modulo every m, since m divides m!"),
            Obstruction::FactorialShift { shift, offset, .. } => {
                write!(f, "±({shift}+n!) meets {offset} modulo every m, since n! is 0 modulo m once n ≥ m")
            }
            Obstruction::ArithmeticCovers { start, step, offset, .. } => write!(
                f,
                "±({start}+{step}n) meets {offset} modulo every m, since every divisor of {step} divides {offset}-{start} or {offset}+{start}"
            ),
        }
    }
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..).take_while(|d| d * d <= n).filter(|d| n.is_multiple_of(*d)).flat_map(|d| [d, n / d]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Whether `±(start + step·n)` meets `offset + mℤ` for every `m ≥ 1`.
pub fn arithmetic_hits_every_modulus(start: u64, step: u64, offset: i64) -> bool {
    let (a, t) = (start as i128, offset as i128);
    divisors(step).into_iter().all(|d| {
        let d = d as i128;
        (t - a).rem_euclid(d) == 0 || (t + a).rem_euclid(d) == 0
    })
}

impl Obstruction {
    /// The offset class that is met for every modulus.
    pub fn offset(&self) -> i64 {
        match self {
            Obstruction::FactorialDivides { .. } => 0,
            Obstruction::FactorialShift { offset, .. } | Obstruction::ArithmeticCovers { offset, .. } => *offset,
        }
    }

    pub fn labels(&self) -> (usize, usize) {
        match self {
            Obstruction::FactorialDivides { labels }
            | Obstruction::FactorialShift { labels, .. }
            | Obstruction::ArithmeticCovers { labels, .. } => *labels,
        }
    }

    /// Re-derives the lemma's hypotheses from the graph's family table.
    pub fn holds(&self, graph: &TranslationGraph) -> bool {
        let (c, c2) = self.labels();
        if c.max(c2) >= graph.labels().len() {
            return false;
        }
        let fams = graph.families(c, c2);
        match self {
            Obstruction::FactorialDivides { .. } => fams.contains(&DifferenceFamily::Factorial { shift: 0 }),
            Obstruction::FactorialShift { shift, offset, .. } => {
                offset.unsigned_abs() == *shift && fams.contains(&DifferenceFamily::Factorial { shift: *shift })
            }
            Obstruction::ArithmeticCovers { start, step, offset, .. } => {
                fams.contains(&DifferenceFamily::Arithmetic { start: *start, step: *step })
                    && arithmetic_hits_every_modulus(*start, *step, *offset)
            }
        }
    }

    /// Finds a lemma showing `offset` is hit modulo every `m` by the families between `c` and `c2`.
    pub fn find(graph: &TranslationGraph, c: usize, c2: usize, offset: i64) -> Option<Obstruction> {
        let labels = (c.min(c2), c.max(c2));
        // Offsets are read from the smaller label; families are symmetric.
        graph.families(c, c2).iter().find_map(|f| match f {
            DifferenceFamily::Factorial { shift: 0 } if offset == 0 => Some(Obstruction::FactorialDivides { labels }),
            DifferenceFamily::Factorial { shift } if offset.unsigned_abs() == *shift => {
                Some(Obstruction::FactorialShift { labels, shift: *shift, offset })
            }
            DifferenceFamily::Arithmetic { start, step } if arithmetic_hits_every_modulus(*start, *step, offset) => {
                Some(Obstruction::ArithmeticCovers { labels, start: *start, step: *step, offset })
            }
            _ => None,
        })
    }

    /// Checks the claim directly for every modulus up to `max_modulus`.
    pub fn check_up_to(&self, graph: &TranslationGraph, max_modulus: u64) -> Result<bool, GraphError> {
        let (c, c2) = self.labels();
        for m in 1..=max_modulus {
            let class = self.offset().rem_euclid(m as i64) as u64;
            if !graph.residues(c, c2, m)?.contains(&class) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonRFWitness {
    pub kind: WitnessKind,
    pub vertices: Vec<Vertex>,
    pub delta_elements: Vec<GroupElement>,
    pub element: WreathElement,
    pub obstruction: Obstruction,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WitnessParams {
    pub v: Option<Vertex>,
    pub w: Option<Vertex>,
    pub g: Option<GroupElement>,
    pub h: Option<GroupElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error(transparent)]
    Wreath(#[from] WreathError),
    #[error("missing witness parameter: {0}")]
    MissingParameter(&'static str),
    #[error("the vertex group is abelian, so no non-commuting pair exists")]
    AbelianDelta,
    #[error("{0} and {1} commute")]
    Commuting(GroupElement, GroupElement),
    #[error("witness element is trivial")]
    TrivialElement,
    #[error("hypotheses are not certifiable: {0}")]
    NotCertifiable(String),
}

/// Builds a witness element and the lemma showing it dies in every finite quotient.
pub fn witness(instance: &Instance, kind: WitnessKind, params: &WitnessParams) -> Result<NonRFWitness, WitnessError> {
    let delta = &instance.delta;
    let GammaGraph::Translation(graph) = &instance.graph else {
        // ℤⁿ acts through a finite group, so the kernel of the action separates every pair.
        return Err(WitnessError::NotCertifiable("finite graphs have finite-index vertex stabilisers".into()));
    };
    let v = params.v.clone().ok_or(WitnessError::MissingParameter("v"))?;
    instance.graph.check_vertex(&v).map_err(WreathError::from)?;
    let Vertex::Translation { label: c, position: x } = v else { unreachable!("translation vertex") };
    let syl = |vertex: &Vertex, g: &GroupElement| Syllable::new(vertex.clone(), g.clone());
    let (vertices, delta_elements, syllables, obstruction) = match kind {
        WitnessKind::VertexCommutator => {
            let (g, h) = match (&params.g, &params.h) {
                (Some(g), Some(h)) => (g.clone(), h.clone()),
                _ => delta.noncommuting_pair().ok_or(WitnessError::AbelianDelta)?,
            };
            let comm = delta.commutator(&g, &h).map_err(WreathError::from)?;
            if delta.is_identity(&comm) {
                return Err(if delta.is_abelian() { WitnessError::AbelianDelta } else { WitnessError::Commuting(g, h) });
            }
            let obstruction = Obstruction::find(graph, c, c, 0).ok_or_else(|| {
                WitnessError::NotCertifiable(format!("no lemma shows every mℤ moves {v} to a neighbour"))
            })?;
            let (gi, hi) = (delta.invert(&g).map_err(WreathError::from)?, delta.invert(&h).map_err(WreathError::from)?);
            let syllables = vec![syl(&v, &g), syl(&v, &h), syl(&v, &gi), syl(&v, &hi)];
            (vec![v.clone()], vec![g, h], syllables, obstruction)
        }
        WitnessKind::PairCommutator | WitnessKind::OrbitRatio => {
            let w = params.w.clone().ok_or(WitnessError::MissingParameter("w"))?;
            instance.graph.check_vertex(&w).map_err(WreathError::from)?;
            let Vertex::Translation { label: c2, position: y } = w else { unreachable!("translation vertex") };
            let g = match &params.g {
                Some(g) => g.clone(),
                None => delta.nontrivial_element().ok_or(WitnessError::TrivialElement)?,
            };
            delta.check(&g).map_err(WreathError::from)?;
            if delta.is_identity(&g) {
                return Err(WitnessError::TrivialElement);
            }
            if v == w {
                return Err(WitnessError::NotCertifiable("the two vertices coincide".into()));
            }
            let gi = delta.invert(&g).map_err(WreathError::from)?;
            if kind == WitnessKind::OrbitRatio {
                // w ∈ Kv for all K needs m | (y − x) for every m.
                return Err(WitnessError::NotCertifiable(format!(
                    "{v} and {w} are separated by mℤ for any m not dividing {}",
                    y - x
                )));
            }
            if instance.graph.adjacent(&v, &w) {
                return Err(WitnessError::NotCertifiable(format!("{v} and {w} are adjacent")));
            }
            let (lo, hi, offset) = if c <= c2 { (c, c2, y - x) } else { (c2, c, x - y) };
            let obstruction = Obstruction::find(graph, lo, hi, offset).ok_or_else(|| {
                WitnessError::NotCertifiable(format!("no lemma shows every mℤ moves {w} next to {v}"))
            })?;
            let syllables = vec![syl(&v, &g), syl(&w, &g), syl(&v, &gi), syl(&w, &gi)];
            (vec![v.clone(), w.clone()], vec![g], syllables, obstruction)
        }
    };
    let word = Word::new(delta, syllables).map_err(WreathError::from)?;
    let element = instance.element(word, GammaElement::zero(1))?;
    if element.is_identity() {
        return Err(WitnessError::TrivialElement);
    }
    Ok(NonRFWitness { kind, vertices, delta_elements, element, obstruction })
}

/// The raw witness element for the orbit-ratio construction, `g₍ᵥ₎ g₍w₎⁻¹`.
pub fn orbit_ratio_element(instance: &Instance, v: &Vertex, w: &Vertex, g: &GroupElement) -> Result<WreathElement, WreathError> {
    let gi = instance.delta.invert(g)?;
    let word = instance.word(vec![(v.clone(), g.clone()), (w.clone(), gi)])?;
    instance.element(word, GammaElement::zero(instance.graph.rank()))
}

/// Re-checks a witness: element shape, nontriviality and the obstruction lemma.
pub fn verify_witness(instance: &Instance, witness: &NonRFWitness) -> bool {
    let GammaGraph::Translation(graph) = &instance.graph else { return false };
    let params = WitnessParams {
        v: witness.vertices.first().cloned(),
        w: witness.vertices.get(1).cloned(),
        g: witness.delta_elements.first().cloned(),
        h: witness.delta_elements.get(1).cloned(),
    };
    match self::witness(instance, witness.kind, &params) {
        Ok(rebuilt) => rebuilt.element == witness.element && !witness.element.is_identity() && witness.obstruction.holds(graph),
        Err(_) => false,
    }
}

// ---------------------------------------------------------------------------
// Orbit restriction

/// Which `Γ`-orbits survive a restriction, in the original numbering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "kept", rename_all = "kebab-case")]
pub enum KeptOrbits {
    Labels(Vec<usize>),
    Vertices(Vec<usize>),
}

impl KeptOrbits {
    /// New name of an original vertex, if its orbit was kept.
    pub fn map_vertex(&self, v: &Vertex) -> Option<Vertex> {
        match (self, v) {
            (KeptOrbits::Labels(keep), Vertex::Translation { label, position }) => {
                keep.iter().position(|c| c == label).map(|i| Vertex::at(i, *position))
            }
            (KeptOrbits::Vertices(keep), Vertex::Finite(id)) => keep.binary_search(id).ok().map(Vertex::Finite),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restriction {
    pub instance: Instance,
    pub element: WreathElement,
    pub kept: KeptOrbits,
}

/// Restricts to the orbits meeting the support of `x`, killing all other vertex copies.
pub fn restrict_orbits(instance: &Instance, x: &WreathElement) -> Result<Restriction, WreathError> {
    let word = canonical_form(&instance.graph, &instance.delta, &x.word)?;
    let (graph, kept) = match &instance.graph {
        GammaGraph::Translation(t) => {
            let labels: BTreeSet<usize> = word
                .syllables()
                .iter()
                .map(|s| match s.vertex {
                    Vertex::Translation { label, .. } => label,
                    Vertex::Finite(_) => unreachable!("validated by canonical_form"),
                })
                .collect();
            let keep: Vec<usize> = labels.into_iter().collect();
            (GammaGraph::Translation(t.restrict_labels(&keep)), KeptOrbits::Labels(keep))
        }
        GammaGraph::Finite(f) => {
            let group = f.image_group();
            let all: Vec<usize> = (0..group.order()).collect();
            let orbits = group.orbits(&all);
            let hit: BTreeSet<usize> = word
                .syllables()
                .iter()
                .map(|s| match s.vertex {
                    Vertex::Finite(id) => orbits[id],
                    Vertex::Translation { .. } => unreachable!("validated by canonical_form"),
                })
                .collect();
            let keep: Vec<usize> = (0..f.vertex_count()).filter(|&v| hit.contains(&orbits[v])).collect();
            (GammaGraph::Finite(f.restrict_vertices(&keep)), KeptOrbits::Vertices(keep))
        }
    };
    let restricted = Instance { delta: instance.delta.clone(), graph };
    let syllables = word
        .syllables()
        .iter()
        .map(|s| Syllable::new(kept.map_vertex(&s.vertex).expect("support orbits are kept"), s.value.clone()))
        .collect();
    let element = restricted.element(Word::new(&instance.delta, syllables)?, x.gamma.clone())?;
    Ok(Restriction { instance: restricted, element, kept })
}

// ---------------------------------------------------------------------------
// Separation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationChecks {
    /// `Γ → Γ/K` is injective on `{e, γ}`.
    pub gamma_injective: bool,
    /// The quotient map is an isomorphism from the induced subgraph on the support onto its image.
    pub support_isomorphism: bool,
    /// No quotient vertex carries a loop (required only for non-abelian `Δ`).
    pub loop_free: bool,
    pub image_nontrivial: bool,
}

impl SeparationChecks {
    pub fn all(&self) -> bool {
        self.gamma_injective && self.support_isomorphism && self.loop_free && self.image_nontrivial
    }
}

/// A finite-index `K ≤ Γ` and the image of an element in `(K\G')(Δ) ⋊ Γ/K`,
/// where `G'` is the union of the orbits meeting the element's support.
///
/// The image group is a graph product over a finite graph, which is residually
/// finite; the certificate stops at the nontrivial image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RFCertificate {
    pub element: WreathElement,
    pub kept: KeptOrbits,
    pub restricted_element: WreathElement,
    pub subgroup: Subgroup,
    pub support: Vec<Vertex>,
    pub support_orbits: Vec<usize>,
    pub quotient: QuotientGraph,
    pub gamma_image: GammaImage,
    pub word_image: Word<usize>,
    pub checks: SeparationChecks,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeparationError {
    #[error(transparent)]
    Wreath(#[from] WreathError),
    #[error("the identity cannot be separated")]
    Identity,
    #[error("no subgroup with modulus at most {bound} separates the element")]
    SearchExhausted { bound: u64 },
}

/// The homomorphism `(w, γ) ↦ (K·w, γK)` into the finite quotient wreath product.
#[derive(Debug, Clone)]
pub struct SeparationMap {
    pub kept: KeptOrbits,
    pub instance: Instance,
    pub quotient: GammaQuotient,
    pub graph: QuotientGraph,
}

/// An element of `(K\G)(Δ) ⋊ Γ/K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientElement {
    pub word: Word<usize>,
    pub gamma: GammaImage,
}

impl QuotientElement {
    pub fn is_identity(&self) -> bool {
        self.word.is_empty() && self.gamma.is_trivial()
    }
}

impl SeparationMap {
    pub fn new(instance: &Instance, kept: KeptOrbits, subgroup: &Subgroup) -> Result<Self, WreathError> {
        let graph = match (&instance.graph, &kept) {
            (GammaGraph::Translation(t), KeptOrbits::Labels(keep)) => GammaGraph::Translation(t.restrict_labels(keep)),
            (GammaGraph::Finite(f), KeptOrbits::Vertices(keep)) => GammaGraph::Finite(f.restrict_vertices(keep)),
            _ => return Err(GraphError::InvalidSubgroup("restriction does not match the graph".into()).into()),
        };
        let restricted = Instance { delta: instance.delta.clone(), graph };
        let quotient = GammaQuotient::new(&restricted.graph, subgroup)?;
        let graph = quotient_graph_for(&restricted.graph, &quotient)?;
        Ok(SeparationMap { kept, instance: restricted, quotient, graph })
    }

    /// Image of an element of the original instance.
    pub fn apply(&self, x: &WreathElement) -> Result<QuotientElement, WreathError> {
        let kept: Vec<Syllable<Vertex>> = x
            .word
            .syllables()
            .iter()
            .filter_map(|s| self.kept.map_vertex(&s.vertex).map(|v| Syllable::new(v, s.value.clone())))
            .collect();
        let word = Word::new(&self.instance.delta, kept)?;
        let image = push_forward(
            &self.instance.graph,
            &word,
            |v| self.quotient.orbit_of(v),
            &Homomorphism::identity(&self.instance.delta),
            &self.graph,
        )?;
        Ok(QuotientElement { word: image, gamma: self.quotient.project(&x.gamma)? })
    }

    pub fn compose(&self, a: &QuotientElement, b: &QuotientElement) -> Result<QuotientElement, WreathError> {
        let moved: Vec<Syllable<usize>> = b
            .word
            .syllables()
            .iter()
            .map(|s| Syllable::new(self.quotient.act_image_on_orbit(&a.gamma, s.vertex), s.value.clone()))
            .collect();
        let word = a.word.concat(&Word::new(&self.instance.delta, moved)?);
        Ok(QuotientElement {
            word: canonical_form(&self.graph, &self.instance.delta, &word)?,
            gamma: self.quotient.compose(&a.gamma, &b.gamma),
        })
    }
}

impl RFCertificate {
    /// Rebuilds the homomorphism the certificate describes.
    pub fn map(&self, instance: &Instance) -> Result<SeparationMap, WreathError> {
        SeparationMap::new(instance, self.kept.clone(), &self.subgroup)
    }
}

fn candidate_subgroups(graph: &GammaGraph, bound: u64) -> Box<dyn Iterator<Item = Subgroup> + '_> {
    match graph {
        GammaGraph::Translation(_) => Box::new((1..=bound).map(|modulus| Subgroup::Modulus { modulus })),
        GammaGraph::Finite(f) => {
            let group = f.image_group();
            let subgroups = group.subgroups();
            Box::new((1..=bound).flat_map(move |modulus| {
                let powers = group.power_subgroup(modulus);
                subgroups
                    .iter()
                    .filter(|s| s.iter().all(|x| powers.binary_search(x).is_ok()))
                    .map(|s| Subgroup::Image {
                        generators: group.generating_set(s).into_iter().map(|g| group.preimage(g).clone()).collect(),
                        modulus,
                    })
                    .collect::<Vec<_>>()
            }))
        }
    }
}

/// Finds the first subgroup in search order whose quotient keeps `x` nontrivial.
///
/// Translation graphs try `K = mℤ` for `m = 1, 2, …, bound`. Finite graphs try,
/// for each modulus, every subgroup of the image of `mℤⁿ` in order of
/// increasing index.
pub fn separate(instance: &Instance, x: &WreathElement, bound: u64) -> Result<RFCertificate, SeparationError> {
    let x = instance.element(x.word.clone(), x.gamma.clone())?;
    if x.is_identity() {
        return Err(SeparationError::Identity);
    }
    let restriction = restrict_orbits(instance, &x)?;
    let restricted = &restriction.instance;
    let element = &restriction.element;
    let support: Vec<Vertex> = element.word.vertices().into_iter().collect();
    let abelian = instance.delta.is_abelian();

    for subgroup in candidate_subgroups(&restricted.graph, bound) {
        let quotient = GammaQuotient::new(&restricted.graph, &subgroup).map_err(WreathError::from)?;
        let gamma_image = quotient.project(&element.gamma).map_err(WreathError::from)?;
        let gamma_injective = element.gamma.is_zero() || !gamma_image.is_trivial();
        if !gamma_injective {
            continue;
        }
        let support_orbits: Vec<usize> =
            support.iter().map(|v| quotient.orbit_of(v).expect("support vertex in graph")).collect();
        let distinct: BTreeSet<usize> = support_orbits.iter().copied().collect();
        if distinct.len() != support.len() {
            continue;
        }
        let qgraph = quotient_graph_for(&restricted.graph, &quotient).map_err(WreathError::from)?;
        let support_isomorphism = (0..support.len()).all(|i| {
            (i + 1..support.len()).all(|j| {
                restricted.graph.adjacent(&support[i], &support[j]) == qgraph.has_edge(support_orbits[i], support_orbits[j])
            })
        });
        if !support_isomorphism {
            continue;
        }
        let loop_free = abelian || qgraph.loops.is_empty();
        if !loop_free {
            continue;
        }
        let word_image = push_forward(
            &restricted.graph,
            &element.word,
            |v| quotient.orbit_of(v),
            &Homomorphism::identity(&instance.delta),
            &qgraph,
        )
        .map_err(WreathError::from)?;
        let image_nontrivial = !word_image.is_empty() || !gamma_image.is_trivial();
        assert!(
            image_nontrivial && (element.word.is_empty() || !word_image.is_empty()),
            "an isomorphism on the support cannot kill the word"
        );
        return Ok(RFCertificate {
            element: x.clone(),
            kept: restriction.kept.clone(),
            restricted_element: element.clone(),
            subgroup,
            support,
            support_orbits,
            quotient: qgraph,
            gamma_image,
            word_image,
            checks: SeparationChecks { gamma_injective, support_isomorphism, loop_free, image_nontrivial },
        });
    }
    Err(SeparationError::SearchExhausted { bound })
}

// ---------------------------------------------------------------------------
// Independent re-verification

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("certificate rejected: {0}")]
pub struct VerificationError(pub String);

fn reject<T>(msg: impl Into<String>) -> Result<T, VerificationError> {
    Err(VerificationError(msg.into()))
}

/// Whether some member of the family is congruent to `class` mod `m`, by listing
/// members until their residues repeat.
fn family_meets_class(family: &DifferenceFamily, class: u64, m: u64) -> bool {
    let hit = |d: i128| d.rem_euclid(m as i128) as u64 == class;
    match family {
        DifferenceFamily::Finite { offsets } => offsets.iter().any(|&d| hit(d as i128)),
        DifferenceFamily::Arithmetic { start, step } => (0..m as i128).any(|n| {
            let d = *start as i128 + *step as i128 * n;
            hit(d) || hit(-d)
        }),
        DifferenceFamily::Factorial { shift } => {
            let s = *shift as i128;
            let mut fact: i128 = 1;
            for n in 1..=m as i128 + 1 {
                fact = fact * n % m as i128;
                if hit(s + fact) || hit(-(s + fact)) {
                    return true;
                }
            }
            hit(s) || hit(-s)
        }
    }
}

/// Re-checks a separation certificate from scratch against the instance.
pub fn verify_certificate(instance: &Instance, cert: &RFCertificate) -> Result<(), VerificationError> {
    let wrap = |e: WreathError| VerificationError(e.to_string());
    let x = instance.element(cert.element.word.clone(), cert.element.gamma.clone()).map_err(wrap)?;
    if x != cert.element {
        return reject("element is not in normal form");
    }
    if x.is_identity() {
        return reject("element is the identity");
    }
    let restriction = restrict_orbits(instance, &x).map_err(wrap)?;
    if restriction.kept != cert.kept || restriction.element != cert.restricted_element {
        return reject("orbit restriction does not match");
    }
    let restricted = &restriction.instance;
    let support: Vec<Vertex> = restriction.element.word.vertices().into_iter().collect();
    if support != cert.support {
        return reject("support does not match");
    }

    // Orbits straight from the subgroup description.
    let orbit_of = |v: &Vertex| -> Option<usize> {
        match (&cert.subgroup, v, &restricted.graph) {
            (Subgroup::Modulus { modulus }, Vertex::Translation { label, position }, GammaGraph::Translation(_)) => {
                Some(label * *modulus as usize + position.rem_euclid(*modulus as i64) as usize)
            }
            (_, Vertex::Finite(_), GammaGraph::Finite(_)) => cert.quotient.orbit_of(v),
            _ => None,
        }
    };
    match (&cert.quotient.orbit_map, &cert.subgroup, &restricted.graph) {
        (OrbitMap::Residues { modulus, labels }, Subgroup::Modulus { modulus: m }, GammaGraph::Translation(t)) => {
            if modulus != m || *labels != t.labels().len() {
                return reject("orbit map disagrees with the subgroup");
            }
        }
        (OrbitMap::Table { orbit_of: table }, _, GammaGraph::Finite(_)) => {
            let q = GammaQuotient::new(&restricted.graph, &cert.subgroup).map_err(|e| VerificationError(e.to_string()))?;
            let expected: Vec<usize> =
                (0..table.len()).map(|i| q.orbit_of(&Vertex::Finite(i)).unwrap_or(usize::MAX)).collect();
            if &expected != table {
                return reject("orbit table disagrees with the subgroup");
            }
        }
        _ => return reject("orbit map has the wrong shape"),
    }
    let orbits: Vec<usize> = support.iter().map(|v| orbit_of(v).ok_or_else(|| VerificationError(format!("{v} has no orbit")))).collect::<Result<_, _>>()?;
    if orbits != cert.support_orbits {
        return reject("support orbits do not match");
    }

    // Quotient edges among support orbits and loops, by listing lifts.
    let brute_edge = |a: &Vertex, b: &Vertex| -> bool {
        match (&restricted.graph, &cert.subgroup, a, b) {
            (
                GammaGraph::Translation(t),
                Subgroup::Modulus { modulus },
                Vertex::Translation { label: c, position: x },
                Vertex::Translation { label: c2, position: y },
            ) => {
                let class = (y - x).rem_euclid(*modulus as i64) as u64;
                t.families(*c, *c2).iter().any(|f| family_meets_class(f, class, *modulus))
            }
            (GammaGraph::Finite(f), _, Vertex::Finite(_), Vertex::Finite(_)) => {
                let (oa, ob) = (orbit_of(a), orbit_of(b));
                f.edges().iter().any(|&(u, w)| {
                    let (ou, ow) = (orbit_of(&Vertex::Finite(u)), orbit_of(&Vertex::Finite(w)));
                    (ou == oa && ow == ob) || (ou == ob && ow == oa)
                })
            }
            _ => false,
        }
    };
    for i in 0..support.len() {
        for j in i + 1..support.len() {
            if orbits[i] == orbits[j] {
                return reject(format!("{} and {} share an orbit", support[i], support[j]));
            }
            let in_graph = restricted.graph.adjacent(&support[i], &support[j]);
            let recorded = cert.quotient.has_edge(orbits[i], orbits[j]);
            if recorded != brute_edge(&support[i], &support[j]) {
                return reject("recorded quotient edge is wrong");
            }
            if in_graph != recorded {
                return reject(format!("adjacency of {} and {} is not preserved", support[i], support[j]));
            }
        }
    }
    if !instance.delta.is_abelian() {
        for o in 0..cert.quotient.vertex_count() {
            let lift = &cert.quotient.lifts[o];
            if orbit_of(lift) != Some(o) {
                return reject("orbit lift is outside its orbit");
            }
            let looped = brute_edge(lift, lift) || cert.quotient.has_loop(o);
            if looped {
                return reject(format!("quotient vertex {o} carries a loop"));
            }
        }
    }

    let map = cert.map(instance).map_err(wrap)?;
    let image = map.apply(&x).map_err(wrap)?;
    if image.gamma != cert.gamma_image || image.word != cert.word_image {
        return reject("recorded image does not match");
    }
    if !x.gamma.is_zero() && image.gamma.is_trivial() {
        return reject("acting element dies in the quotient");
    }
    if !x.word.is_empty() && image.word.is_empty() {
        return reject("word dies in the quotient");
    }
    if image.is_identity() {
        return reject("image is trivial");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i64) -> Vertex {
        Vertex::at(0, x)
    }

    fn line_c2() -> Instance {
        Instance::new(GroupSpec::cyclic(2).unwrap(), GammaGraph::line()).unwrap()
    }

    fn one(inst: &Instance, xs: &[i64]) -> Word<Vertex> {
        inst.word(xs.iter().map(|&x| (v(x), GroupElement::Residue(1))).collect()).unwrap()
    }

    #[test]
    fn act_word_examples() {
        let inst = line_c2();
        let w = one(&inst, &[0, 1]);
        assert_eq!(act_word(&inst.graph, &inst.delta, &GammaElement::scalar(0), &w).unwrap(), w);
        assert_eq!(act_word(&inst.graph, &inst.delta, &GammaElement::scalar(2), &w).unwrap(), one(&inst, &[2, 3]));
    }

    #[test]
    fn compose_examples() {
        let inst = line_c2();
        let x = inst.element(one(&inst, &[0]), GammaElement::scalar(1)).unwrap();
        let y = inst.element(one(&inst, &[0]), GammaElement::scalar(-1)).unwrap();
        let xy = gw_compose(&inst, &x, &y).unwrap();
        assert_eq!(xy, inst.element(one(&inst, &[0, 1]), GammaElement::scalar(0)).unwrap());
        assert_eq!(gw_compose(&inst, &x, &inst.identity()).unwrap(), x);
        assert!(gw_compose(&inst, &x, &gw_invert(&inst, &x).unwrap()).unwrap().is_identity());
    }

    #[test]
    fn witness_examples() {
        let s3 = GroupSpec::symmetric(3).unwrap();
        let fact0 = Instance::new(s3, GammaGraph::single_family(DifferenceFamily::factorial(0)).unwrap()).unwrap();
        let g = GroupElement::Perm(vec![1, 0, 2]);
        let h = GroupElement::Perm(vec![2, 1, 0]);
        let params = WitnessParams { v: Some(v(0)), g: Some(g.clone()), h: Some(h.clone()), ..Default::default() };
        let wit = witness(&fact0, WitnessKind::VertexCommutator, &params).unwrap();
        let comm = fact0.delta.commutator(&g, &h).unwrap();
        assert_eq!(wit.element.word, fact0.word(vec![(v(0), comm)]).unwrap());
        assert_eq!(wit.obstruction, Obstruction::FactorialDivides { labels: (0, 0) });
        assert!(verify_witness(&fact0, &wit));

        let c2 = GroupSpec::cyclic(2).unwrap();
        let fact1 = Instance::new(c2.clone(), GammaGraph::single_family(DifferenceFamily::factorial(1)).unwrap()).unwrap();
        let params = WitnessParams { v: Some(v(0)), w: Some(v(1)), ..Default::default() };
        let wit = witness(&fact1, WitnessKind::PairCommutator, &params).unwrap();
        assert_eq!(wit.element.word, one(&fact1, &[0, 1, 0, 1]));
        assert_eq!(wit.obstruction, Obstruction::FactorialShift { labels: (0, 0), shift: 1, offset: 1 });
        assert!(verify_witness(&fact1, &wit));

        let fact0_c2 = Instance::new(c2, fact0.graph.clone()).unwrap();
        let params = WitnessParams { v: Some(v(0)), ..Default::default() };
        assert_eq!(witness(&fact0_c2, WitnessKind::VertexCommutator, &params).unwrap_err(), WitnessError::AbelianDelta);
    }

    #[test]
    fn witness_rejects_unprovable_hypotheses() {
        let inst = line_c2();
        let params = WitnessParams { v: Some(v(0)), w: Some(v(2)), ..Default::default() };
        assert!(matches!(witness(&inst, WitnessKind::PairCommutator, &params), Err(WitnessError::NotCertifiable(_))));
        assert!(matches!(witness(&inst, WitnessKind::OrbitRatio, &params), Err(WitnessError::NotCertifiable(_))));
        let adjacent = WitnessParams { v: Some(v(0)), w: Some(v(1)), ..Default::default() };
        assert!(matches!(witness(&inst, WitnessKind::PairCommutator, &adjacent), Err(WitnessError::NotCertifiable(_))));
    }

    #[test]
    fn arithmetic_lemma() {
        // Every nonzero offset class is hit by ±(1 + n).
        assert!(arithmetic_hits_every_modulus(1, 1, 0));
        assert!(arithmetic_hits_every_modulus(1, 1, 17));
        // ±(1 + 2n) covers only odd offsets modulo 2.
        assert!(!arithmetic_hits_every_modulus(1, 2, 0));
        assert!(arithmetic_hits_every_modulus(1, 2, 4 + 1));
        assert!(arithmetic_hits_every_modulus(2, 2, 0));
    }

    #[test]
    fn restrict_orbits_examples() {
        let inst = line_c2();
        let x = inst.element(one(&inst, &[0, 3]), GammaElement::scalar(1)).unwrap();
        let r = restrict_orbits(&inst, &x).unwrap();
        assert_eq!(r.instance, inst);
        assert_eq!(r.element, x);

        let two = TranslationGraph::new(vec!["a", "b"])
            .unwrap()
            .with_family(0, 0, DifferenceFamily::finite([1]).unwrap())
            .unwrap()
            .with_family(0, 1, DifferenceFamily::finite([2]).unwrap())
            .unwrap()
            .with_family(1, 1, DifferenceFamily::finite([3]).unwrap())
            .unwrap();
        let inst2 = Instance::new(GroupSpec::cyclic(2).unwrap(), GammaGraph::Translation(two)).unwrap();
        let w = inst2.word(vec![(Vertex::at(1, 4), GroupElement::Residue(1))]).unwrap();
        let x = inst2.element(w.clone(), GammaElement::scalar(0)).unwrap();
        let r = restrict_orbits(&inst2, &x).unwrap();
        assert_eq!(r.kept, KeptOrbits::Labels(vec![1]));
        let GammaGraph::Translation(t) = &r.instance.graph else { panic!() };
        assert_eq!(t.labels(), ["b".to_string()]);
        assert_eq!(r.element.word.syllables()[0].vertex, Vertex::at(0, 4));

        let x = inst.element(Word::empty(), GammaElement::scalar(3)).unwrap();
        let r = restrict_orbits(&inst, &x).unwrap();
        let GammaGraph::Translation(t) = &r.instance.graph else { panic!() };
        assert!(t.labels().is_empty());
        assert_eq!(r.element.gamma, GammaElement::scalar(3));
    }

    #[test]
    fn separate_examples() {
        let inst = line_c2();
        let x = inst.element(one(&inst, &[0, 2]), GammaElement::scalar(0)).unwrap();
        let cert = separate(&inst, &x, 64).unwrap();
        assert_eq!(cert.subgroup, Subgroup::Modulus { modulus: 4 });
        assert_eq!(cert.word_image.len(), 2);
        verify_certificate(&inst, &cert).unwrap();

        let y = inst.element(Word::empty(), GammaElement::scalar(5)).unwrap();
        let cert = separate(&inst, &y, 64).unwrap();
        assert_eq!(cert.subgroup, Subgroup::Modulus { modulus: 2 });
        assert_eq!(cert.gamma_image.residues, vec![1]);
        verify_certificate(&inst, &cert).unwrap();

        assert_eq!(separate(&inst, &inst.identity(), 64).unwrap_err(), SeparationError::Identity);
        assert_eq!(separate(&inst, &x, 3).unwrap_err(), SeparationError::SearchExhausted { bound: 3 });
    }

    #[test]
    fn tampered_certificates_fail() {
        let inst = line_c2();
        let x = inst.element(one(&inst, &[0, 2]), GammaElement::scalar(0)).unwrap();
        let cert = separate(&inst, &x, 64).unwrap();

        let mut bad = cert.clone();
        bad.subgroup = Subgroup::Modulus { modulus: 3 };
        assert!(verify_certificate(&inst, &bad).is_err());

        let mut bad = cert.clone();
        bad.quotient.edges.insert((0, 2));
        assert!(verify_certificate(&inst, &bad).is_err());

        let mut bad = cert;
        bad.word_image = Word::empty();
        assert!(verify_certificate(&inst, &bad).is_err());
    }
}
