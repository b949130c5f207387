use std::f64::consts::{PI, TAU};

use ch_apparatus::apparatus::{Apparatus, ApparatusConfig, EngravedLines, Setup, StopPlacement};
use ch_apparatus::geometry::Angle;
use proptest::prelude::*;

fn device(a: [f64; 4], gamma: f64, setup: usize) -> Option<Apparatus> {
    let lines = EngravedLines::new(a[0], a[1], a[2], a[3]).ok()?;
    ApparatusConfig::with_setup(lines, gamma, Setup::ALL[setup]).validate().ok()
}

fn angles() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0..TAU)
}

proptest! {
    #[test]
    fn rotation_budget_is_respected(a in angles(), gamma in 0.01..TAU - 0.01, setup in 0usize..8, phi in 0.0..TAU) {
        let Some(app) = device(a, gamma, setup) else { return Ok(()) };
        let o = app.run_trial(Angle::new(phi).unwrap());
        prop_assert!(o.r1 >= 0.0 && o.r2 >= 0.0);
        prop_assert!(o.r1 + o.r2 <= gamma + 1e-12);
        if !(o.reached_left_stop && o.reached_right_stop) {
            prop_assert!((o.r1 + o.r2 - gamma).abs() <= 1e-12, "{o:?}");
        }
    }

    #[test]
    fn removing_right_stop_never_increases_r1(a in angles(), gamma in 0.01..TAU - 0.01, phi in 0.0..TAU, primed in any::<(bool, bool)>()) {
        let Ok(lines) = EngravedLines::new(a[0], a[1], a[2], a[3]) else { return Ok(()) };
        let left = if primed.0 { lines.a_prime } else { lines.a };
        let right = if primed.1 { lines.b_prime } else { lines.b };
        let both = ApparatusConfig::modified(lines, gamma, StopPlacement { left: Some(left), right: Some(right) }).validate();
        let only_left = ApparatusConfig::modified(lines, gamma, StopPlacement { left: Some(left), right: None }).validate();
        let (Ok(both), Ok(only_left)) = (both, only_left) else { return Ok(()) };
        let phi = Angle::new(phi).unwrap();
        prop_assert!(only_left.run_trial(phi).r1 <= both.run_trial(phi).r1 + 1e-15);
    }

    #[test]
    fn trials_are_deterministic(a in angles(), gamma in 0.01..TAU - 0.01, setup in 0usize..8, phi in 0.0..TAU) {
        let Some(app) = device(a, gamma, setup) else { return Ok(()) };
        let phi = Angle::new(phi).unwrap();
        let (x, y) = (app.run_trial(phi), app.run_trial(phi));
        prop_assert_eq!(x.r1.to_bits(), y.r1.to_bits());
        prop_assert_eq!(x.r2.to_bits(), y.r2.to_bits());
        prop_assert_eq!(x, y);
    }

    #[test]
    fn staggered_two_stop_setups_stay_within_budget(gamma in 0.05..3.0f64, frac in 0.05..0.95f64, setup in 0usize..4, phi in 0.0..TAU) {
        let theta = gamma * frac;
        let lines = EngravedLines::staggered(gamma, theta).unwrap();
        let app = ApparatusConfig::with_setup(lines, gamma, Setup::TWO_STOP[setup]).validate().unwrap();
        let o = app.run_trial(Angle::new(phi).unwrap());
        prop_assert!(o.r1 + o.r2 <= gamma + 1e-12);
    }
}

#[test]
fn stops_at_budget_separation_are_perfectly_correlated() {
    let (gamma, theta) = (PI / 3.0, PI / 6.0);
    let lines = EngravedLines::staggered(gamma, theta).unwrap();
    let app = ApparatusConfig::with_setup(lines, gamma, Setup::Ab).validate().unwrap();
    let m = 1_000_000;
    let mut both = 0usize;
    for k in 0..m {
        let phi = Angle::new(TAU * (k as f64 + 0.5) / m as f64).unwrap();
        let o = app.run_trial(phi);
        assert_eq!(o.reached_left_stop, o.reached_right_stop, "phi = {}", phi.radians());
        both += o.reached_left_stop as usize;
    }
    assert!((both as f64 / m as f64 - gamma / TAU).abs() < 1e-5);
}

#[test]
fn invalid_configs_list_every_problem() {
    let lines = EngravedLines::new(0.0, 0.0, 1.0, 1.0).unwrap();
    let err = ApparatusConfig::modified(lines, -1.0, StopPlacement::none()).validate().unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("A and A'"), "{msg}");
    assert!(msg.contains("B and B'"), "{msg}");
    assert!(msg.contains("gamma"), "{msg}");
}
