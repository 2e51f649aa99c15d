//! Property tests for elementary closures, selectors, intersections and the
//! experiment verdicts.

use std::collections::HashSet;

use growthlab_core::closure::{
    conjugation_sign, elementary_closure, separation_selector, short_intersection_element, SubgroupRef,
};
use growthlab_core::lab::{amalgam_injectivity, assess_growth_gap, AmalgamOptions, ExperimentConfig, Verdict};
use growthlab_core::group::{Ball, MarkedGroup, Step, Word};
use growthlab_core::subgroup::{stallings_fold, CoreGraph};
use proptest::prelude::*;

fn word_in(desc: &'static str, max_len: usize) -> impl Strategy<Value = Word> {
    let g = MarkedGroup::parse(desc).unwrap();
    let rank = g.rank() as u16;
    prop::collection::vec((0..rank, any::<bool>()).prop_map(|(g, i)| Step::new(g, i)), 0..max_len)
        .prop_map(move |s| MarkedGroup::parse(desc).unwrap().reduce_steps(&s))
}

fn infinite_order(desc: &'static str, max_len: usize) -> impl Strategy<Value = Word> {
    word_in(desc, max_len).prop_filter("infinite order", move |w| MarkedGroup::parse(desc).unwrap().has_infinite_order(w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certificates_recheck(g in infinite_order("product:2,3", 6)) {
        let grp = MarkedGroup::parse("product:2,3").unwrap();
        let cl = elementary_closure(&grp, &g, 5, 12).unwrap();
        prop_assert!(cl.elements.contains(&g));
        prop_assert_eq!(cl.elements.len(), cl.certificates.len());
        for (u, c) in cl.elements.iter().zip(&cl.certificates) {
            prop_assert_eq!(conjugation_sign(&grp, u, &g, cl.m), Some(c.sign));
        }
        prop_assert!(cl.e_plus_index == 1 || cl.e_plus_index == 2);
        // two orientation-reversing elements compose to a preserving one
        let neg: Vec<&Word> = cl.elements.iter().zip(&cl.certificates).filter(|(_, c)| c.sign < 0).map(|(u, _)| u).collect();
        for x in &neg {
            for y in &neg {
                prop_assert_eq!(conjugation_sign(&grp, &grp.mul_unchecked(x, y), &g, cl.m), Some(1));
            }
        }
    }

    #[test]
    fn free_closure_is_the_centralizer(g in infinite_order("free:2", 6)) {
        let grp = MarkedGroup::parse("free:2").unwrap();
        let cl = elementary_closure(&grp, &g, 5, 12).unwrap();
        // oracle: in a free group E(g) is the centralizer, i.e. commuting elements
        let oracle: HashSet<Word> = Ball::new(&grp, 5)
            .elements()
            .unwrap()
            .into_iter()
            .filter(|u| grp.mul_unchecked(u, &g) == grp.mul_unchecked(&g, u))
            .collect();
        let got: HashSet<Word> = cl.elements.iter().cloned().collect();
        prop_assert_eq!(got, oracle);
        prop_assert_eq!(cl.m, 1);
        prop_assert_eq!(cl.e_plus_index, 1);
        prop_assert!(cl.closed_in_ball);
    }

    #[test]
    fn selector_separates_and_is_stable(g in infinite_order("free:2", 4), y in word_in("free:2", 3)) {
        let grp = MarkedGroup::parse("free:2").unwrap();
        let sel = separation_selector(&grp, &g, 0, 1, 0, &y, 3, 256).unwrap();
        prop_assert!(sel.all_rows_pass());
        prop_assert!(sel.stable_at_double);
        prop_assert_eq!(sel.rows.len(), 53);
    }
}

fn small_subgroup() -> impl Strategy<Value = Vec<Word>> {
    prop::collection::vec(word_in("free:2", 5).prop_filter("nontrivial", |w| !w.is_identity()), 1..3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn intersection_witness_is_sound_and_shortest(hs in small_subgroup(), ks in small_subgroup()) {
        let grp = MarkedGroup::parse("free:2").unwrap();
        let h = stallings_fold(&grp, &hs).unwrap();
        let k = stallings_fold(&grp, &ks).unwrap();
        let r = 6;
        let shortest = Ball::new(&grp, r)
            .elements()
            .unwrap()
            .into_iter()
            .filter(|w| !w.is_identity() && h.contains(w) && k.contains(w))
            .map(|w| grp.length(&w))
            .min();
        match short_intersection_element(&h, &k, r) {
            Some(wit) => {
                prop_assert!(!wit.word.is_identity());
                prop_assert!(h.contains(&wit.word) && k.contains(&wit.word));
                prop_assert_eq!(Some(wit.length), shortest);
            }
            None => prop_assert_eq!(shortest, None),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn verdict_follows_hypotheses(gens in small_subgroup()) {
        let grp = MarkedGroup::parse("free:2").unwrap();
        let cfg = ExperimentConfig {
            generators: gens.iter().map(|w| grp.format_word(w)).collect(),
            rmax: Some(8),
            audit_radius: 3,
            ..ExperimentConfig::default()
        };
        let rep = assess_growth_gap(&cfg).unwrap();
        let all_hold = rep.hypotheses.iter().all(|h| h.holds);
        match rep.verdict {
            Verdict::Pass => {
                prop_assert!(all_hold);
                prop_assert!(rep.omega_h.unwrap().rate + rep.margin < rep.omega_g.rate);
            }
            Verdict::Inapplicable => prop_assert!(!all_hold),
            Verdict::Fail => prop_assert!(all_hold),
        }
    }
}

#[test]
fn distinct_normal_forms_give_distinct_elements() {
    let grp = MarkedGroup::parse("free:2").unwrap();
    let core = CoreGraph::from_generators(&grp, &["a"]).unwrap();
    let b = grp.reduce("b").unwrap();
    let opts = AmalgamOptions {
        syllables: 3,
        ..AmalgamOptions::default()
    };
    let rep = amalgam_injectivity(&SubgroupRef::Core(core), &b, 1, &opts).unwrap();
    // independent enumeration: a^i and b^j letters, |i|, |j| <= 4, alternating
    let pool = |x: &str| -> Vec<Word> {
        let w = grp.reduce(x).unwrap();
        (1..=4).flat_map(|i| [grp.pow(&w, i), grp.pow(&w, -i)]).collect()
    };
    let (hp, gp) = (pool("a"), pool("b"));
    let grp = &grp;
    let mut images = HashSet::new();
    let mut count = 0u64;
    for start in 0..2 {
        let mut layer = vec![grp.identity()];
        for s in 0..3 {
            let letters = if (s + start) % 2 == 0 { &hp } else { &gp };
            let next: Vec<Word> = layer
                .iter()
                .flat_map(|x| letters.iter().map(move |l| grp.mul_unchecked(x, l)))
                .collect();
            count += next.len() as u64;
            images.extend(next.iter().cloned());
            layer = next;
        }
    }
    assert_eq!(rep.words_checked, count);
    assert_eq!(images.len() as u64, count);
    assert!(!images.contains(&grp.identity()));
}
