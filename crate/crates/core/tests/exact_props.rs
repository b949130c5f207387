use std::f64::consts::{PI, TAU};

use ch_apparatus::analysis::fixed_lambda_check;
use ch_apparatus::apparatus::{Apparatus, ApparatusConfig, EngravedLines, Line, Setup};
use ch_apparatus::exact::{
    closed_form_staggered, critical_angles, event_probability, exact_conditional_table, grid_oracle, EventPredicate,
};
use ch_apparatus::geometry::partition_circle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_device(rng: &mut ChaCha8Rng) -> Apparatus {
    loop {
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
        let Ok(lines) = EngravedLines::new(a[0], a[1], a[2], a[3]) else { continue };
        let cfg = if rng.random_bool(0.25) {
            ApparatusConfig::unmodified(lines, rng.random_range(0.05..TAU))
        } else {
            let setup = Setup::ALL[rng.random_range(0..8)];
            ApparatusConfig::with_setup(lines, rng.random_range(0.05..TAU - 0.05), setup)
        };
        if let Ok(app) = cfg.validate() {
            return app;
        }
    }
}

fn predicates() -> Vec<EventPredicate> {
    let c = EventPredicate::crossed;
    vec![
        c(Line::A),
        c(Line::BPrime),
        c(Line::A).and(&c(Line::B)),
        c(Line::APrime).or(&c(Line::BPrime)),
        EventPredicate::reached_left().and(&EventPredicate::reached_right()),
        c(Line::A).and(&c(Line::B).not()),
    ]
}

#[test]
fn engine_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..6 {
        let app = random_device(&mut rng);
        for e in predicates() {
            let exact = event_probability(&app, &e).unwrap();
            let grid = grid_oracle(&app, &e, 1_000_000);
            assert!((exact - grid).abs() <= 1e-5, "{} on {:?}: {exact} vs {grid}", e.name(), app.config());
        }
    }
}

#[test]
fn closed_form_matches_engine_on_random_layouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let g = rng.random_range(0.02..TAU - 0.04);
        let t = rng.random_range(0.01..g.min(TAU - g));
        let Ok(closed) = closed_form_staggered(g, t) else { continue };
        let exact = exact_conditional_table(&EngravedLines::staggered(g, t).unwrap(), g).unwrap();
        for (x, y) in closed.entries().iter().zip(exact.entries()) {
            assert!((x - y).abs() <= 1e-12, "gamma={g} theta={t}: {x} vs {y}");
        }
        for ((_, x), (_, y)) in closed.full_tables.iter().zip(exact.full_tables.iter()) {
            for (p, q) in x.cells().iter().zip(y.cells()) {
                assert!((p - q).abs() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complement_sums_to_one(seed in any::<u64>(), k in 0usize..6) {
        let app = random_device(&mut ChaCha8Rng::seed_from_u64(seed));
        let e = &predicates()[k];
        let p = event_probability(&app, e).unwrap();
        let q = event_probability(&app, &e.not()).unwrap();
        prop_assert!((p + q - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn implication_is_monotone(seed in any::<u64>(), k in 0usize..6, j in 0usize..6) {
        let app = random_device(&mut ChaCha8Rng::seed_from_u64(seed));
        let ps = predicates();
        let narrow = ps[k].and(&ps[j]);
        let wide = ps[k].or(&ps[j]);
        let pn = event_probability(&app, &narrow).unwrap();
        let pk = event_probability(&app, &ps[k]).unwrap();
        let pw = event_probability(&app, &wide).unwrap();
        prop_assert!(pn <= pk + 1e-12 && pk <= pw + 1e-12);
    }

    #[test]
    fn honest_device_factorises_on_every_arc(a in prop::array::uniform4(0.0..TAU), gamma1 in 0.05..TAU) {
        let Ok(lines) = EngravedLines::new(a[0], a[1], a[2], a[3]) else { return Ok(()) };
        let Ok(app) = ApparatusConfig::unmodified(lines, gamma1).validate() else { return Ok(()) };
        for arc in partition_circle(&critical_angles(&app)) {
            let c = fixed_lambda_check(&app, arc.point_at(0.5)).unwrap();
            prop_assert_eq!(c.factorisability_residual, 0.0);
            prop_assert!(!c.value.violated());
        }
    }
}

#[test]
fn demo_single_stop_entries() {
    let t = exact_conditional_table(&EngravedLines::staggered(PI / 3.0, PI / 6.0).unwrap(), PI / 3.0).unwrap();
    for l in Line::ALL {
        assert!((t.singles.get(l) - 1.0 / 12.0).abs() < 1e-12);
    }
}
