#![allow(dead_code)]

pub mod brute;
pub mod rewriting;

use graphwreath::gamma_graph::{DifferenceFamily, FiniteGraph, GammaElement, GammaGraph, TranslationGraph, Vertex};
use graphwreath::graph_product::{Syllable, Word};
use graphwreath::groups::{GroupElement, GroupSpec};
use graphwreath::wreath::{Instance, WreathElement};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn line(delta: GroupSpec) -> Instance {
    Instance::new(delta, GammaGraph::line()).unwrap()
}

pub fn single(family: DifferenceFamily, delta: GroupSpec) -> Instance {
    Instance::new(delta, GammaGraph::single_family(family).unwrap()).unwrap()
}

pub fn factorial(shift: u64, delta: GroupSpec) -> Instance {
    single(DifferenceFamily::factorial(shift), delta)
}

pub fn complete_line(delta: GroupSpec) -> Instance {
    single(DifferenceFamily::arithmetic(1, 1).unwrap(), delta)
}

pub fn edgeless(delta: GroupSpec) -> Instance {
    Instance::new(delta, GammaGraph::Translation(TranslationGraph::new(vec!["a"]).unwrap())).unwrap()
}

/// Two orbits `a`, `b` with `a ~ a±1`, `a ~ b±2` and `b ~ b±3`.
pub fn two_labels(delta: GroupSpec) -> Instance {
    let t = TranslationGraph::new(vec!["a", "b"])
        .unwrap()
        .with_family(0, 0, DifferenceFamily::finite([1, -1]).unwrap())
        .unwrap()
        .with_family(0, 1, DifferenceFamily::finite([2, -2]).unwrap())
        .unwrap()
        .with_family(1, 1, DifferenceFamily::finite([3, -3]).unwrap())
        .unwrap();
    Instance::new(delta, GammaGraph::Translation(t)).unwrap()
}

pub fn rotation(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| (i + k) % n).collect()
}

pub fn cycle(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

pub fn finite_cycle(n: usize, delta: GroupSpec) -> Instance {
    let g = FiniteGraph::new(n, cycle(n), vec![rotation(n, 1)]).unwrap();
    Instance::new(delta, GammaGraph::Finite(g)).unwrap()
}

/// The 6-cycle with `ℤ²` acting through rotations by one and by three steps.
pub fn finite_cycle_rank2(delta: GroupSpec) -> Instance {
    let g = FiniteGraph::new(6, cycle(6), vec![rotation(6, 1), rotation(6, 3)]).unwrap();
    Instance::new(delta, GammaGraph::Finite(g)).unwrap()
}

pub fn finite_complete(n: usize, delta: GroupSpec) -> Instance {
    let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let g = FiniteGraph::new(n, edges, vec![rotation(n, 1)]).unwrap();
    Instance::new(delta, GammaGraph::Finite(g)).unwrap()
}

pub fn c2() -> GroupSpec {
    GroupSpec::cyclic(2).unwrap()
}

pub fn s3() -> GroupSpec {
    GroupSpec::symmetric(3).unwrap()
}

/// Instance classes for the algebra suites, with a short name for messages.
pub fn classes() -> Vec<(&'static str, Instance)> {
    vec![
        ("line/C2", line(c2())),
        ("line/S3", line(s3())),
        ("factorial/S3", factorial(0, s3())),
        ("two-labels/C3", two_labels(GroupSpec::cyclic(3).unwrap())),
        ("complete/Z2", complete_line(GroupSpec::free_abelian(2))),
        ("cycle5/S3", finite_cycle(5, s3())),
        ("cycle6-rank2/C2", finite_cycle_rank2(c2())),
    ]
}

pub fn labels(instance: &Instance) -> usize {
    match &instance.graph {
        GammaGraph::Translation(t) => t.labels().len(),
        GammaGraph::Finite(_) => 0,
    }
}

pub fn random_vertex<R: Rng>(rng: &mut R, instance: &Instance, window: i64) -> Vertex {
    match &instance.graph {
        GammaGraph::Translation(t) => Vertex::at(rng.gen_range(0..t.labels().len()), rng.gen_range(-window..=window)),
        GammaGraph::Finite(f) => Vertex::Finite(rng.gen_range(0..f.vertex_count())),
    }
}

pub fn random_nontrivial<R: Rng>(rng: &mut R, delta: &GroupSpec) -> GroupElement {
    match delta {
        GroupSpec::FreeAbelian { rank } => loop {
            let v: Vec<i64> = (0..*rank).map(|_| rng.gen_range(-2..=2)).collect();
            if v.iter().any(|&x| x != 0) {
                return GroupElement::Vector(v);
            }
        },
        _ => {
            let all = delta.elements().unwrap();
            all.into_iter().filter(|g| !delta.is_identity(g)).collect::<Vec<_>>().choose(rng).unwrap().clone()
        }
    }
}

pub fn random_word<R: Rng>(rng: &mut R, instance: &Instance, max_len: usize, window: i64) -> Word<Vertex> {
    let n = rng.gen_range(0..=max_len);
    let syllables = (0..n)
        .map(|_| Syllable::new(random_vertex(rng, instance, window), random_nontrivial(rng, &instance.delta)))
        .collect();
    Word::new(&instance.delta, syllables).unwrap()
}

pub fn random_gamma<R: Rng>(rng: &mut R, instance: &Instance, range: i64) -> GammaElement {
    GammaElement((0..instance.graph.rank()).map(|_| rng.gen_range(-range..=range)).collect())
}

pub fn random_element<R: Rng>(rng: &mut R, instance: &Instance, max_len: usize, window: i64) -> WreathElement {
    let word = random_word(rng, instance, max_len, window);
    let gamma = random_gamma(rng, instance, window);
    instance.element(word, gamma).unwrap()
}
