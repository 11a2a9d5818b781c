use std::collections::BTreeSet;

use graphwreath::gamma_graph::{DifferenceFamily, SimplicialGraph, TranslationGraph, Vertex};

pub fn pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Largest offset that has to be tried before every residue class of the
/// family's differences mod `m` has appeared.
fn reach(family: &DifferenceFamily, m: u64) -> i64 {
    match family {
        DifferenceFamily::Finite { offsets } => offsets.iter().map(|d| d.abs()).max().unwrap_or(0),
        DifferenceFamily::Factorial { shift } => *shift as i64 + (1..=m.max(2) as i64).product::<i64>(),
        DifferenceFamily::Arithmetic { start, step } => (*start + *step * m) as i64,
    }
}

/// Edges and loops of `mℤ \ G`, vertex `c·m + r`, found by testing lifts.
pub fn brute_translation(t: &TranslationGraph, m: u64) -> (BTreeSet<(usize, usize)>, BTreeSet<usize>) {
    let n = t.labels().len();
    let span = t.family_table().values().flatten().map(|f| reach(f, m)).max().unwrap_or(0);
    let (mut edges, mut loops) = (BTreeSet::new(), BTreeSet::new());
    let mi = m as i64;
    for c in 0..n {
        for r in 0..mi {
            let v = Vertex::at(c, r);
            for c2 in 0..n {
                for q in r - span..=r + span {
                    if t.adjacent(&v, &Vertex::at(c2, q)) {
                        let (a, b) = (c * m as usize + r as usize, c2 * m as usize + q.rem_euclid(mi) as usize);
                        if a == b {
                            loops.insert(a);
                        } else {
                            edges.insert(pair(a, b));
                        }
                    }
                }
            }
        }
    }
    (edges, loops)
}

