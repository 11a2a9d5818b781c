//! A rewriting oracle for words over the path `0 - 1 - 2` with cyclic vertex groups.
//!
//! It explores every word reachable by swapping adjacent letters on adjacent
//! vertices and merging adjacent letters on the same vertex. A word is trivial
//! exactly when the empty word is reachable.

use std::collections::{BTreeSet, VecDeque};

use graphwreath::gamma_graph::SimplicialGraph;
use graphwreath::graph_product::{Syllable, Word};
use graphwreath::groups::{GroupElement, GroupSpec};

/// The path `0 - 1 - 2`.
pub struct Path3;

impl SimplicialGraph<usize> for Path3 {
    fn has_vertex(&self, v: &usize) -> bool {
        *v < 3
    }

    fn adjacent(&self, v: &usize, w: &usize) -> bool {
        v.abs_diff(*w) == 1
    }
}

pub type Letters = Vec<(usize, u64)>;

pub fn reachable_empty(start: &Letters, order: u64) -> bool {
    let mut seen: BTreeSet<Letters> = BTreeSet::new();
    let mut queue = VecDeque::from([start.clone()]);
    seen.insert(start.clone());
    while let Some(w) = queue.pop_front() {
        if w.is_empty() {
            return true;
        }
        for i in 0..w.len().saturating_sub(1) {
            let ((v, a), (u, b)) = (w[i], w[i + 1]);
            let mut next = Vec::new();
            if v.abs_diff(u) == 1 {
                let mut s = w.clone();
                s.swap(i, i + 1);
                next.push(s);
            }
            if v == u {
                let mut s = w.clone();
                let c = (a + b) % order;
                s.remove(i + 1);
                if c == 0 {
                    s.remove(i);
                } else {
                    s[i].1 = c;
                }
                next.push(s);
            }
            for s in next {
                if seen.insert(s.clone()) {
                    queue.push_back(s);
                }
            }
        }
    }
    false
}

pub fn all_words(len: usize, order: u64) -> Vec<Letters> {
    let letters: Vec<(usize, u64)> = (0..3).flat_map(|v| (1..order).map(move |a| (v, a))).collect();
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..len {
        layer = layer
            .iter()
            .flat_map(|w: &Letters| {
                letters.iter().map(move |&l| {
                    let mut w = w.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

pub fn to_word(delta: &GroupSpec, letters: &Letters) -> Word<usize> {
    let syllables = letters.iter().map(|&(v, a)| Syllable::new(v, GroupElement::Residue(a))).collect();
    Word::new(delta, syllables).unwrap()
}

pub fn to_letters(w: &Word<usize>) -> Letters {
    w.syllables()
        .iter()
        .map(|s| match s.value {
            GroupElement::Residue(a) => (s.vertex, a),
            ref other => panic!("unexpected value {other}"),
        })
        .collect()
}
