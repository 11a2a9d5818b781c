mod common;

use std::collections::BTreeSet;

use graphwreath::gamma_graph::{SimplicialGraph, Vertex};
use graphwreath::graph_product::{canonical_form, gp_compose, gp_invert, retract, support, Word};
use graphwreath::wreath::{act_word, gw_compose, gw_invert, Instance};
use proptest::prelude::*;
use rand::Rng;

fn cn(instance: &Instance, w: &Word<Vertex>) -> Word<Vertex> {
    canonical_form(&instance.graph, &instance.delta, w).unwrap()
}

fn mul(instance: &Instance, a: &Word<Vertex>, b: &Word<Vertex>) -> Word<Vertex> {
    gp_compose(&instance.graph, &instance.delta, a, b).unwrap()
}

fn act(instance: &Instance, gamma: &graphwreath::gamma_graph::GammaElement, w: &Word<Vertex>) -> Word<Vertex> {
    act_word(&instance.graph, &instance.delta, gamma, w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn product_group_laws(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for (name, instance) in common::classes() {
            let a = common::random_word(&mut rng, &instance, 6, 3);
            let b = common::random_word(&mut rng, &instance, 6, 3);
            let c = common::random_word(&mut rng, &instance, 6, 3);
            let e = Word::empty();
            prop_assert_eq!(mul(&instance, &mul(&instance, &a, &b), &c), mul(&instance, &a, &mul(&instance, &b, &c)), "{}", name);
            prop_assert_eq!(mul(&instance, &e, &a), cn(&instance, &a), "{}", name);
            prop_assert_eq!(mul(&instance, &a, &e), cn(&instance, &a), "{}", name);
            let inv = gp_invert(&instance.graph, &instance.delta, &a).unwrap();
            prop_assert!(mul(&instance, &a, &inv).is_empty(), "{}", name);
            prop_assert!(mul(&instance, &inv, &a).is_empty(), "{}", name);
        }
    }

    #[test]
    fn semidirect_group_laws(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for (name, instance) in common::classes() {
            let x = common::random_element(&mut rng, &instance, 5, 3);
            let y = common::random_element(&mut rng, &instance, 5, 3);
            let z = common::random_element(&mut rng, &instance, 5, 3);
            let id = instance.identity();
            let xy = gw_compose(&instance, &x, &y).unwrap();
            let yz = gw_compose(&instance, &y, &z).unwrap();
            prop_assert_eq!(gw_compose(&instance, &xy, &z).unwrap(), gw_compose(&instance, &x, &yz).unwrap(), "{}", name);
            prop_assert_eq!(&gw_compose(&instance, &id, &x).unwrap(), &x, "{}", name);
            prop_assert_eq!(&gw_compose(&instance, &x, &id).unwrap(), &x, "{}", name);
            let inv = gw_invert(&instance, &x).unwrap();
            prop_assert!(gw_compose(&instance, &x, &inv).unwrap().is_identity(), "{}", name);
            prop_assert!(gw_compose(&instance, &inv, &x).unwrap().is_identity(), "{}", name);
            // (w, γ)(w', γ') = (w · γw', γ + γ')
            let expected = cn(&instance, &x.word.concat(&act(&instance, &x.gamma, &y.word)));
            prop_assert_eq!(&xy.word, &expected, "{}", name);
            prop_assert_eq!(&xy.gamma, &x.gamma.add(&y.gamma), "{}", name);
        }
    }

    #[test]
    fn action_by_automorphisms(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for (name, instance) in common::classes() {
            let a = common::random_word(&mut rng, &instance, 5, 3);
            let b = common::random_word(&mut rng, &instance, 5, 3);
            let g = common::random_gamma(&mut rng, &instance, 4);
            let h = common::random_gamma(&mut rng, &instance, 4);
            let zero = graphwreath::gamma_graph::GammaElement::zero(instance.graph.rank());
            prop_assert_eq!(act(&instance, &g, &mul(&instance, &a, &b)), mul(&instance, &act(&instance, &g, &a), &act(&instance, &g, &b)), "{}", name);
            prop_assert_eq!(act(&instance, &g.add(&h), &a), act(&instance, &g, &act(&instance, &h, &a)), "{}", name);
            prop_assert_eq!(act(&instance, &zero, &a), cn(&instance, &a), "{}", name);
            prop_assert!(act(&instance, &g, &act(&instance, &g.neg(), &a)) == cn(&instance, &a), "{}", name);

            let v = common::random_vertex(&mut rng, &instance, 6);
            let w = common::random_vertex(&mut rng, &instance, 6);
            let (gv, gw) = (instance.graph.act(&g, &v).unwrap(), instance.graph.act(&g, &w).unwrap());
            prop_assert_eq!(instance.graph.adjacent(&v, &w), instance.graph.adjacent(&gv, &gw), "{}", name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn retraction_fixes_the_subgroup(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for (name, instance) in common::classes() {
            let keep: BTreeSet<Vertex> = (0..rng.gen_range(1..6)).map(|_| common::random_vertex(&mut rng, &instance, 3)).collect();
            let inside: Vec<Vertex> = keep.iter().cloned().collect();
            let syllables = (0..rng.gen_range(0..6))
                .map(|_| {
                    let v = inside[rng.gen_range(0..inside.len())].clone();
                    graphwreath::graph_product::Syllable::new(v, common::random_nontrivial(&mut rng, &instance.delta))
                })
                .collect();
            let w = Word::new(&instance.delta, syllables).unwrap();
            prop_assert_eq!(retract(&instance.graph, &instance.delta, &w, &keep).unwrap(), cn(&instance, &w), "{}", name);

            let a = common::random_word(&mut rng, &instance, 6, 3);
            let b = common::random_word(&mut rng, &instance, 6, 3);
            let ra = retract(&instance.graph, &instance.delta, &a, &keep).unwrap();
            let rb = retract(&instance.graph, &instance.delta, &b, &keep).unwrap();
            let rab = retract(&instance.graph, &instance.delta, &mul(&instance, &a, &b), &keep).unwrap();
            prop_assert_eq!(rab, mul(&instance, &ra, &rb), "{}", name);
            let s = support(&instance.graph, &instance.delta, &ra).unwrap();
            prop_assert!(s.is_subset(&keep), "{}", name);
        }
    }
}
