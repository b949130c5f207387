use std::f64::consts::PI;

use ch_apparatus::check::relabel;
use ch_apparatus::exact::closed_form_staggered;
use ch_apparatus::lhv::{
    ch_battery, enumerate_strategies, feasible_joint, no_signaling_deviation, pr_box, singlet_table, witness_error,
    BehaviorTable, SingletAngles, DEFAULT_TOL,
};
use proptest::prelude::*;

fn mixture(w: &[f64]) -> BehaviorTable {
    let s: f64 = w.iter().sum();
    let mut e = [0.0; 16];
    for (wi, strat) in w.iter().zip(enumerate_strategies()) {
        for (acc, v) in e.iter_mut().zip(strat.table().entries()) {
            *acc += wi / s * v;
        }
    }
    BehaviorTable::from_entries(e).unwrap()
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], 16).prop_filter("nonzero", |w| w.iter().sum::<f64>() > 1e-3)
}

fn pr_variant() -> impl Strategy<Value = BehaviorTable> {
    (any::<bool>(), any::<bool>(), any::<[bool; 2]>(), any::<[bool; 2]>())
        .prop_map(|(sl, sr, fl, fr)| BehaviorTable::from_entries(relabel(pr_box().entries(), sl, sr, fl, fr)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mixtures_are_feasible_with_witness(w in weights()) {
        let t = mixture(&w);
        let f = feasible_joint(&t, DEFAULT_TOL).unwrap();
        prop_assert!(f.feasible);
        let witness = f.witness.unwrap();
        prop_assert!(witness.iter().all(|&x| x >= 0.0));
        prop_assert!((witness.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(witness_error(&t, &witness) < 1e-9);
        prop_assert!(no_signaling_deviation(&t) <= DEFAULT_TOL);
        prop_assert!(ch_battery(&t, DEFAULT_TOL).passes);
    }

    #[test]
    fn convex_combinations_stay_feasible(w1 in weights(), w2 in weights(), lambda in 0.0..=1.0f64) {
        let t = mixture(&w1).mix(&mixture(&w2), lambda).unwrap();
        prop_assert!(feasible_joint(&t, DEFAULT_TOL).unwrap().feasible);
    }

    #[test]
    fn feasibility_matches_battery(w in weights(), pr in pr_variant(), eps in 0.0..=1.0f64) {
        let t = mixture(&w).mix(&pr, eps).unwrap();
        let f = feasible_joint(&t, DEFAULT_TOL).unwrap();
        let b = ch_battery(&t, DEFAULT_TOL);
        // skip tables sitting on the facet where both tests are tolerance-limited
        prop_assume!((b.max_value).abs() > 1e-7 && (b.min_value + 1.0).abs() > 1e-7);
        prop_assert_eq!(f.feasible, b.passes, "battery max {}", b.max_value);
        if f.feasible {
            prop_assert!(no_signaling_deviation(&t) <= DEFAULT_TOL);
        }
    }
}

#[test]
fn demo_behavior_is_signaling_and_infeasible() {
    let t = BehaviorTable::from_conditionals(&closed_form_staggered(PI / 3.0, PI / 6.0).unwrap()).unwrap();
    assert!(no_signaling_deviation(&t) >= 1.0 / 12.0 - 1e-9);
    let f = feasible_joint(&t, DEFAULT_TOL).unwrap();
    assert!(!f.feasible);
    assert!(f.witness.is_none());
    assert!(f.l1_residual > 0.1);
}

#[test]
fn boxes_fail_the_battery() {
    let pr = ch_battery(&pr_box(), DEFAULT_TOL);
    assert!(!pr.passes);
    assert!((pr.max_value - 0.5).abs() < 1e-9);
    assert_eq!(pr.entries.len(), 8);
    let s = ch_battery(&singlet_table(SingletAngles::default()), DEFAULT_TOL);
    assert!(!s.passes);
    assert!((s.max_value - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-9);
    assert!(!feasible_joint(&pr_box(), DEFAULT_TOL).unwrap().feasible);
}
