//! Property tests for axes, projections and buffering sequences.

use growthlab_core::buffering::{
    behrstock_audit, build_axis_chain, chain_separation, check_buffering, condition_values, judge, BufferingParams,
    BufferingSequence,
};
use growthlab_core::geometry::audit::{constriction_audit, default_delta_grid};
use growthlab_core::geometry::lemmas::translation_length_check;
use growthlab_core::geometry::{axis, ProjectionMap};
use growthlab_core::group::{Ball, MarkedGroup, Step, Word};
use growthlab_core::subgroup::CoreGraph;
use proptest::prelude::*;

fn f2() -> MarkedGroup {
    MarkedGroup::parse("free:2").unwrap()
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0u16..2, any::<bool>()).prop_map(|(g, i)| Step::new(g, i)), 0..max_len)
        .prop_map(|s| f2().reduce_steps(&s))
}

fn nontrivial(max_len: usize) -> impl Strategy<Value = Word> {
    word(max_len).prop_filter("nontrivial", |w| f2().length(w) > 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_a_nearest_point(gw in nontrivial(5), x in word(7)) {
        let g = f2();
        let ax = axis(&g, &gw).unwrap();
        let pm = ProjectionMap::to_axis(ax.clone());
        let p = pm.project(&x);
        let w = 4 * (g.length(&x) + g.length(&gw)) as i64 + 8;
        let brute = ax.vertices(-w, w).iter().map(|v| g.distance(&x, v)).min().unwrap();
        prop_assert_eq!(g.distance(&x, &p), brute);
        // axis vertices are fixed
        for v in ax.vertices(-6, 6) {
            prop_assert_eq!(pm.project(&v), v);
        }
    }

    #[test]
    fn projection_is_one_lipschitz(gw in nontrivial(5), x in word(7), y in word(7)) {
        let g = f2();
        let pm = ProjectionMap::to_axis(axis(&g, &gw).unwrap());
        prop_assert!(pm.projected_distance(&x, &y) <= g.distance(&x, &y));
    }

    #[test]
    fn translation_length_is_cyclic_core_length(gw in nontrivial(8)) {
        let g = f2();
        let rec = translation_length_check(&g, &gw, 8).unwrap();
        prop_assert_eq!(rec.translation_length, g.length(&g.cyclic_reduce(&gw).1));
        prop_assert!(rec.lower_ok && rec.upper_ok);
        prop_assert_eq!(rec.last_increment, rec.translation_length);
        prop_assert!(rec.min_ratio >= rec.translation_length as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tree_axes_are_zero_constricting(gw in nontrivial(4)) {
        let g = f2();
        let pm = ProjectionMap::to_axis(axis(&g, &gw).unwrap());
        let rep = constriction_audit(&pm, 3, &default_delta_grid()).unwrap();
        prop_assert_eq!(rep.delta_cs1, 0);
        prop_assert_eq!(rep.delta_cs2, 0);
        prop_assert!(rep.violations.is_empty());
    }
}

/// Chains `h_1 k_1 ... h_n k_n` with `H = <a>`, `g = b`.
fn chain() -> impl Strategy<Value = BufferingSequence> {
    let letter = (1i64..=3, any::<bool>(), 1i64..=4, any::<bool>());
    prop::collection::vec(letter, 1..=3).prop_map(|ls| {
        let g = f2();
        let core = CoreGraph::from_generators(&g, &["a"]).unwrap();
        let (a, b) = (g.reduce("a").unwrap(), g.reduce("b").unwrap());
        let mut word = Vec::new();
        for (h, hs, k, ks) in ls {
            word.push(("h", g.pow(&a, if hs { h } else { -h })));
            word.push(("k", g.pow(&b, if ks { k } else { -k })));
        }
        build_axis_chain(&core, &b, &word, 3).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn buffering_is_monotone_in_parameters(seq in chain(), eps in 0u32..4, l in 1u32..6) {
        let vals = condition_values(&seq);
        if judge(&vals, BufferingParams::new(0, eps, l)).pass {
            prop_assert!(judge(&vals, BufferingParams::new(0, eps + 1, l)).pass);
            prop_assert!(judge(&vals, BufferingParams::new(0, eps, l - 1)).pass);
        }
        // one evaluation serves every parameter choice
        prop_assert_eq!(check_buffering(&seq, BufferingParams::new(0, eps, l)), judge(&vals, BufferingParams::new(0, eps, l)));
    }

    #[test]
    fn separation_holds_above_threshold(seq in chain(), l in 3u32..6) {
        let p = BufferingParams::new(0, 0, l);
        prop_assume!(check_buffering(&seq, p).pass);
        let v = chain_separation(&seq, p, 2).unwrap();
        prop_assert!(v.is_pass(), "{:?}", v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn behrstock_constant_is_stable(u in word(3), v in word(3)) {
        let g = f2();
        let a = axis(&g, &g.conjugate(&u, &g.reduce("a").unwrap())).unwrap();
        let b = axis(&g, &g.conjugate(&v, &g.reduce("b").unwrap())).unwrap();
        let y = vec![g.identity()];
        let triple = BufferingSequence::new(&g, vec![vec![], y.clone(), vec![]], vec![a.clone(), b.clone()]).unwrap();
        let vals = condition_values(&triple);
        let eps = (0..=8).find(|&e| judge(&vals, BufferingParams::new(0, e, 0)).pass);
        prop_assume!(eps.is_some());
        let p = BufferingParams::new(0, eps.unwrap(), 0);
        let r4 = behrstock_audit(&a, &y, &b, p, 4).unwrap();
        let r5 = behrstock_audit(&a, &y, &b, p, 5).unwrap();
        prop_assert_eq!(r5.theta, r4.theta);
    }
}

#[test]
fn ball_points_project_into_window() {
    let g = f2();
    let ax = axis(&g, &g.reduce("ab").unwrap()).unwrap();
    let pm = ProjectionMap::to_axis(ax.clone());
    for x in Ball::new(&g, 4).elements().unwrap() {
        assert!(ax.param_of(&pm.project(&x)).is_some());
    }
}
