//! Words in the graph product `G(Δ)` and their normal form.
//!
//! A word is a sequence of syllables `g₍ᵥ₎`, one nontrivial element of `Δ` at a
//! vertex. Syllables at distinct adjacent vertices commute. The normal form is
//! computed in two passes:
//!
//! 1. Reduction: syllables are appended one at a time to a reduced word. A new
//!    syllable at `v` slides left past syllables at vertices adjacent to `v`;
//!    if it meets a syllable at `v` the two are multiplied (and dropped when the
//!    product is trivial), otherwise it stays at the end. Appending keeps the
//!    word reduced, so one pass suffices.
//! 2. Ordering: reduced words for the same element differ only by commuting
//!    swaps, so they share a dependency order. The lexicographically least
//!    linear extension (by vertex order) is chosen, which places every syllable
//!    as early as its non-commuting predecessors allow.
//!
//! Equality in `G(Δ)` is equality of normal forms, and an element is trivial
//! exactly when its normal form is empty.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamma_graph::SimplicialGraph;
use crate::groups::{GroupElement, GroupError, GroupSpec, Homomorphism};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProductError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("syllable vertex {0} is not in the graph")]
    InvalidVertex(String),
    #[error("syllable at {0} carries the identity")]
    IdentitySyllable(String),
    #[error("vertex {0} has no image under the vertex map")]
    UnmappedVertex(String),
    #[error("image vertex {0} carries a loop and the vertex group is non-abelian")]
    LoopObstruction(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Syllable<V> {
    pub vertex: V,
    pub value: GroupElement,
}

impl<V> Syllable<V> {
    pub fn new(vertex: V, value: GroupElement) -> Self {
        Syllable { vertex, value }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word<V> {
    syllables: Vec<Syllable<V>>,
}

impl<V> Default for Word<V> {
    fn default() -> Self {
        Word { syllables: Vec::new() }
    }
}

impl<V: Clone + fmt::Display> Word<V> {
    /// Rejects syllables whose value is not a nontrivial element of `delta`.
    pub fn new(delta: &GroupSpec, syllables: Vec<Syllable<V>>) -> Result<Self, ProductError> {
        for s in &syllables {
            delta.check(&s.value)?;
            if delta.is_identity(&s.value) {
                return Err(ProductError::IdentitySyllable(s.vertex.to_string()));
            }
        }
        Ok(Word { syllables })
    }

    pub fn single(delta: &GroupSpec, vertex: V, value: GroupElement) -> Result<Self, ProductError> {
        Self::new(delta, vec![Syllable::new(vertex, value)])
    }
}

impl<V> Word<V> {
    pub fn empty() -> Self {
        Word { syllables: Vec::new() }
    }

    pub fn syllables(&self) -> &[Syllable<V>] {
        &self.syllables
    }

    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn into_syllables(self) -> Vec<Syllable<V>> {
        self.syllables
    }
}

impl<V: Clone> Word<V> {
    pub fn concat(&self, other: &Word<V>) -> Word<V> {
        let mut syllables = self.syllables.clone();
        syllables.extend(other.syllables.iter().cloned());
        Word { syllables }
    }

    /// Vertices carrying syllables, deduplicated.
    pub fn vertices(&self) -> BTreeSet<V>
    where
        V: Ord,
    {
        self.syllables.iter().map(|s| s.vertex.clone()).collect()
    }
}

impl<V: fmt::Display> fmt::Display for Word<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "e");
        }
        for (i, s) in self.syllables.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}@{}", s.value, s.vertex)?;
        }
        Ok(())
    }
}

fn commute<V: PartialEq, G: SimplicialGraph<V> + ?Sized>(graph: &G, a: &V, b: &V) -> bool {
    a != b && graph.adjacent(a, b)
}

/// The unique normal form of `w` in `G(Δ)`.
pub fn canonical_form<V, G>(graph: &G, delta: &GroupSpec, w: &Word<V>) -> Result<Word<V>, ProductError>
where
    V: Ord + Clone + fmt::Display,
    G: SimplicialGraph<V> + ?Sized,
{
    let mut reduced: Vec<Syllable<V>> = Vec::with_capacity(w.len());
    for syl in &w.syllables {
        if !graph.has_vertex(&syl.vertex) {
            return Err(ProductError::InvalidVertex(syl.vertex.to_string()));
        }
        delta.check(&syl.value)?;
        if delta.is_identity(&syl.value) {
            continue;
        }
        let mut merged = false;
        for j in (0..reduced.len()).rev() {
            if reduced[j].vertex == syl.vertex {
                let product = delta.compose(&reduced[j].value, &syl.value)?;
                if delta.is_identity(&product) {
                    reduced.remove(j);
                } else {
                    reduced[j].value = product;
                }
                merged = true;
                break;
            }
            if !commute(graph, &reduced[j].vertex, &syl.vertex) {
                break;
            }
        }
        if !merged {
            reduced.push(syl.clone());
        }
    }
    Ok(Word { syllables: lex_least_order(graph, reduced) })
}

/// Least linear extension of the dependency order, comparing by vertex.
fn lex_least_order<V, G>(graph: &G, syllables: Vec<Syllable<V>>) -> Vec<Syllable<V>>
where
    V: Ord + Clone,
    G: SimplicialGraph<V> + ?Sized,
{
    let n = syllables.len();
    let mut blockers = vec![0usize; n];
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..j {
            if !commute(graph, &syllables[i].vertex, &syllables[j].vertex) {
                blockers[j] += 1;
                successors[i].push(j);
            }
        }
    }
    // Two ready syllables never share a vertex, so the minimum is unique.
    let mut ready: BTreeSet<(V, usize)> =
        (0..n).filter(|&j| blockers[j] == 0).map(|j| (syllables[j].vertex.clone(), j)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, i)) = ready.pop_first() {
        order.push(i);
        for &j in &successors[i] {
            blockers[j] -= 1;
            if blockers[j] == 0 {
                ready.insert((syllables[j].vertex.clone(), j));
            }
        }
    }
    let mut slots: Vec<Option<Syllable<V>>> = syllables.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("each syllable placed once")).collect()
}

pub fn gp_compose<V, G>(graph: &G, delta: &GroupSpec, w1: &Word<V>, w2: &Word<V>) -> Result<Word<V>, ProductError>
where
    V: Ord + Clone + fmt::Display,
    G: SimplicialGraph<V> + ?Sized,
{
    canonical_form(graph, delta, &w1.concat(w2))
}

pub fn gp_invert<V, G>(graph: &G, delta: &GroupSpec, w: &Word<V>) -> Result<Word<V>, ProductError>
where
    V: Ord + Clone + fmt::Display,
    G: SimplicialGraph<V> + ?Sized,
{
    let syllables = w
        .syllables
        .iter()
        .rev()
        .map(|s| Ok(Syllable::new(s.vertex.clone(), delta.invert(&s.value)?)))
        .collect::<Result<Vec<_>, GroupError>>()?;
    canonical_form(graph, delta, &Word { syllables })
}

/// Letters of the normal form; the element lies in the subgroup they generate.
pub fn support<V, G>(graph: &G, delta: &GroupSpec, w: &Word<V>) -> Result<BTreeSet<V>, ProductError>
where
    V: Ord + Clone + fmt::Display,
    G: SimplicialGraph<V> + ?Sized,
{
    Ok(canonical_form(graph, delta, w)?.vertices())
}

/// Kills every vertex copy outside `keep`.
pub fn retract<V, G>(graph: &G, delta: &GroupSpec, w: &Word<V>, keep: &BTreeSet<V>) -> Result<Word<V>, ProductError>
where
    V: Ord + Clone + fmt::Display,
    G: SimplicialGraph<V> + ?Sized,
{
    let syllables = w.syllables.iter().filter(|s| keep.contains(&s.vertex)).cloned().collect();
    canonical_form(graph, delta, &Word { syllables })
}

/// Maps `Δ₍ᵥ₎ → Δ'₍map(v)₎` through `delta_hom`, normalising in `dst`.
///
/// A loop at an image vertex means two adjacent vertices were identified; that
/// only respects the commutation relations when `Δ` is abelian.
pub fn push_forward<V, W, G, H, F>(
    src: &G,
    w: &Word<V>,
    vertex_map: F,
    delta_hom: &Homomorphism,
    dst: &H,
) -> Result<Word<W>, ProductError>
where
    V: Ord + Clone + fmt::Display,
    W: Ord + Clone + fmt::Display,
    G: SimplicialGraph<V> + ?Sized,
    H: SimplicialGraph<W> + ?Sized,
    F: Fn(&V) -> Option<W>,
{
    let source = canonical_form(src, delta_hom.source(), w)?;
    let abelian = delta_hom.source().is_abelian();
    let mut syllables = Vec::with_capacity(source.len());
    for s in source.syllables {
        let image = vertex_map(&s.vertex).ok_or_else(|| ProductError::UnmappedVertex(s.vertex.to_string()))?;
        if !abelian && dst.has_loop(&image) {
            return Err(ProductError::LoopObstruction(image.to_string()));
        }
        syllables.push(Syllable::new(image, delta_hom.apply(&s.value)?));
    }
    canonical_form(dst, delta_hom.target(), &Word { syllables })
}
