mod common;

use graphwreath::gamma_graph::{DifferenceFamily, GammaGraph, TranslationGraph, Vertex};
use graphwreath::rf::{
    check_finitely_presented, check_neighbourhood, check_pairs, classify, classify_wreath, recheck_verdict, Evidence,
    Outcome, Rule, Verdict, WreathReason,
};
use graphwreath::wreath::{verify_witness, Instance, Obstruction, WitnessKind};
use rand::Rng;

fn verdict(instance: &Instance) -> Verdict {
    let v = classify(instance, 64, None);
    if !matches!(v, Verdict::Unknown { .. }) {
        assert!(recheck_verdict(instance, &v), "recheck failed for {v}");
    }
    v
}

fn witness_kind(v: &Verdict) -> WitnessKind {
    match v {
        Verdict::NotResiduallyFinite { witness } => witness.kind,
        other => panic!("expected a witness, got {other}"),
    }
}

#[test]
fn line_graph_is_residually_finite() {
    for delta in [common::c2(), common::s3()] {
        let instance = common::line(delta);
        let Verdict::ResiduallyFinite { evidence: Evidence::Conditions { neighbourhood, pair } } = verdict(&instance) else {
            panic!("expected RF with condition evidence");
        };
        if !instance.delta.is_abelian() {
            assert_eq!(neighbourhood.labels[0].loop_free_modulus, Some(2));
        }
        assert_eq!(pair.pairs[0].rule, Some(Rule::AbsPlusOffset { max_offset: 1 }));
        for t in 2..30 {
            assert_eq!(pair.pairs[0].modulus(t), Some(t as u64 + 2));
        }
    }
}

#[test]
fn factorial_examples_are_not_residually_finite() {
    let ex12 = common::factorial(0, common::s3());
    let v = verdict(&ex12);
    assert_eq!(witness_kind(&v), WitnessKind::VertexCommutator);
    let Verdict::NotResiduallyFinite { witness } = &v else { unreachable!() };
    assert_eq!(witness.vertices, vec![Vertex::at(0, 0)]);
    assert!(verify_witness(&ex12, witness));

    let ex13 = common::factorial(1, common::c2());
    let v = verdict(&ex13);
    assert_eq!(witness_kind(&v), WitnessKind::PairCommutator);
    let Verdict::NotResiduallyFinite { witness } = &v else { unreachable!() };
    assert_eq!(witness.obstruction.offset(), 1);
    assert!(verify_witness(&ex13, witness));
    assert_eq!(check_neighbourhood(&ex13, 64).labels[0].loop_free_modulus, Some(4));
}

/// For every `m ≤ 100` some `1 + n!` is `±1` mod `m`, found by direct arithmetic.
#[test]
fn shifted_factorial_meets_one_for_every_small_modulus() {
    for m in 1..=100i64 {
        let mut fact = 1i64;
        let hit = (1..=m + 1).any(|n| {
            fact = fact * n % m;
            let d = (1 + fact).rem_euclid(m);
            d == 1 % m || d == (m - 1) % m
        });
        assert!(hit, "m = {m}");
    }
    let GammaGraph::Translation(t) = GammaGraph::single_family(DifferenceFamily::factorial(1)).unwrap() else {
        unreachable!()
    };
    let obstruction = Obstruction::find(&t, 0, 0, 1).unwrap();
    assert!(obstruction.check_up_to(&t, 100).unwrap());
}

#[test]
fn complete_graphs() {
    let c2 = common::complete_line(common::c2());
    assert!(verdict(&c2).is_rf());
    assert!(classify_wreath(&c2).unwrap().is_rf());

    let s3 = common::complete_line(common::s3());
    assert_eq!(witness_kind(&verdict(&s3)), WitnessKind::VertexCommutator);
    assert!(classify_wreath(&s3).unwrap().is_not_rf());

    let k5 = common::finite_complete(5, common::s3());
    assert!(verdict(&k5).is_rf());
    assert_eq!(
        classify_wreath(&k5).unwrap(),
        Verdict::ResiduallyFinite { evidence: Evidence::Wreath { reason: WreathReason::FiniteIndexStabilisers } }
    );
    assert!(classify_wreath(&common::line(common::c2())).is_err());
}

#[test]
fn edgeless_graph_is_residually_finite() {
    assert!(verdict(&common::edgeless(common::s3())).is_rf());
}

#[test]
fn finite_graphs_are_residually_finite() {
    for instance in [common::finite_cycle(5, common::s3()), common::finite_cycle_rank2(common::s3())] {
        assert!(verdict(&instance).is_rf());
    }
}

#[test]
fn verdicts_are_stable_in_the_bound() {
    for (_, instance) in common::classes() {
        let small = classify(&instance, 64, None);
        let large = classify(&instance, 256, None);
        assert_eq!(small.is_rf(), large.is_rf());
        assert_eq!(small.is_not_rf(), large.is_not_rf());
    }
}

/// Members of the family up to `limit` in absolute value.
fn members(family: &DifferenceFamily, limit: i64) -> Vec<i64> {
    (-limit..=limit).filter(|&d| family.contains(d)).collect()
}

/// Every non-adjacent offset `t` is moved off `N(v) ∪ {v}` by the reported modulus.
fn check_pair_rules(t: &TranslationGraph) {
    let instance = Instance::new(common::s3(), GammaGraph::Translation(t.clone())).unwrap();
    let report = check_pairs(&instance, 64, None);
    assert_eq!(report.outcome, Outcome::Holds, "{t:?}");
    for pair in &report.pairs {
        let (c, c2) = pair.labels;
        let all: Vec<i64> = t.families(c, c2).iter().flat_map(|f| members(f, 5000)).collect();
        for off in -40i64..=40 {
            if (c == c2 && off == 0) || all.contains(&off) {
                continue;
            }
            let m = pair.modulus(off).unwrap_or_else(|| panic!("no modulus for {off} on {:?}", pair.labels)) as i64;
            assert!(c != c2 || off.rem_euclid(m) != 0, "{off} collapses onto 0 mod {m}");
            assert!(all.iter().all(|d| (d - off).rem_euclid(m) != 0), "{off} meets a neighbour mod {m}");
        }
    }
}

#[test]
fn pair_rules_separate_by_direct_enumeration() {
    let mut rng = common::rng(17);
    for _ in 0..25 {
        let offsets: Vec<i64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..8)).collect();
        let t = TranslationGraph::new(vec!["a"]).unwrap().with_family(0, 0, DifferenceFamily::finite(offsets).unwrap()).unwrap();
        check_pair_rules(&t);
    }
    let arithmetic = [(2, 2), (2, 4), (3, 6), (4, 8), (3, 4), (5, 6), (4, 3)];
    let mut checked = 0;
    for (a, b) in arithmetic {
        let family = DifferenceFamily::arithmetic(a, b).unwrap();
        let t = TranslationGraph::new(vec!["a"]).unwrap().with_family(0, 0, family).unwrap();
        let instance = Instance::new(common::s3(), GammaGraph::Translation(t.clone())).unwrap();
        if check_pairs(&instance, 64, None).outcome == Outcome::Holds {
            check_pair_rules(&t);
            checked += 1;
        }
    }
    assert!(checked >= 3, "only {checked} arithmetic families hold");
    let two = TranslationGraph::new(vec!["a", "b"])
        .unwrap()
        .with_family(0, 0, DifferenceFamily::finite([1]).unwrap())
        .unwrap()
        .with_family(0, 1, DifferenceFamily::arithmetic(2, 4).unwrap())
        .unwrap()
        .with_family(1, 1, DifferenceFamily::finite([3]).unwrap())
        .unwrap();
    check_pair_rules(&two);
}

#[test]
fn larger_offset_alone_does_not_separate() {
    // On the line, t = 2 with m = max(|t|, 1) + 1 = 3 puts 2 ≡ -1 next to 0.
    let GammaGraph::Translation(t) = GammaGraph::line() else { unreachable!() };
    assert!(t.residues(0, 0, 3).unwrap().contains(&2));
    assert!(!t.residues(0, 0, 4).unwrap().contains(&2));
}

#[test]
fn finite_presentation() {
    assert!(check_finitely_presented(&common::line(common::c2())).finitely_presented);
    assert!(check_finitely_presented(&common::two_labels(common::c2())).finitely_presented);
    assert!(check_finitely_presented(&common::finite_complete(5, common::s3())).finitely_presented);
    assert!(check_finitely_presented(&common::edgeless(common::s3())).finitely_presented);
    for instance in [common::factorial(0, common::s3()), common::complete_line(common::c2())] {
        let report = check_finitely_presented(&instance);
        assert!(!report.finitely_presented);
        assert_eq!(report.conditions.iter().filter(|c| !c.holds).count(), 1);
    }
}
