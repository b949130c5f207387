//! Internal cross-validation suite behind the `check` command.
//!
//! Every check is deterministic: random inputs come from a fixed-seed
//! ChaCha8 stream, so repeated runs print identical output.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    bayes_conditionals, ch_primed_value, ch_sum_value, ch_value, corrected_probabilities, fixed_lambda_check,
    naive_plug, reduced_ch_value, SettingFrequencies,
};
use crate::apparatus::{Apparatus, ApparatusConfig, EngravedLines, Line, PerSetting, Setup};
use crate::exact::{closed_form_staggered, exact_conditional_table, grid_oracle, single_system_probabilities, ConditionalTable, EventPredicate};
use crate::geometry::Angle;
use crate::lhv::{
    ch_battery, enumerate_strategies, feasible_joint, no_signaling_deviation, pr_box, singlet_table, witness_error,
    BehaviorTable, SingletAngles, DEFAULT_TOL,
};
use crate::monte_carlo::{estimate, run_campaign_with_workers, run_sequence, CampaignPlan, SequenceSpec};
use crate::Result;

const SUITE_SEED: u64 = 0x5eed_c4ec;
const TIGHT: f64 = 1e-12;
const DEMO_GAMMA: f64 = PI / 3.0;
const DEMO_THETA: f64 = PI / 6.0;

/// Deliberate faults for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Shifts the closed-form `p(A,B|a,b)` by 1e-6.
    PerturbClosedForm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckOptions {
    pub fault: Option<Fault>,
    /// Trials per sequence for the statistical checks.
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn outcome(name: &'static str, r: Result<(bool, String)>) -> CheckOutcome {
    match r {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome { name, passed: false, detail: format!("error: {e}") },
    }
}

/// Uniform random staggered layout with `0 < θ < γ`, `γ + θ < 2π`,
/// kept away from the boundaries.
pub fn random_layout(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let g = rng.random_range(0.01..TAU - 0.02);
        let t = rng.random_range(0.005..g);
        if g - t > 1e-3 && g + t < TAU - 1e-3 {
            return (g, t);
        }
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn full_entries(t: &ConditionalTable) -> Vec<f64> {
    let mut v = t.entries().to_vec();
    for (_, tab) in t.full_tables.iter() {
        v.extend(tab.cells());
    }
    v
}

fn demo_app(setup: Setup) -> Result<Apparatus> {
    ApparatusConfig::with_setup(EngravedLines::staggered(DEMO_GAMMA, DEMO_THETA)?, DEMO_GAMMA, setup).validate()
}

pub fn check_closed_form(fault: Option<Fault>) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut layouts = vec![(DEMO_GAMMA, DEMO_THETA)];
    layouts.extend((0..100).map(|_| random_layout(&mut rng)));
    let mut worst = 0.0f64;
    for (g, t) in layouts {
        let mut closed = closed_form_staggered(g, t)?;
        if fault == Some(Fault::PerturbClosedForm) {
            closed.joint.ab += 1e-6;
        }
        let exact = exact_conditional_table(&EngravedLines::staggered(g, t)?, g)?;
        worst = worst.max(max_diff(&full_entries(&closed), &full_entries(&exact)));
    }
    Ok((worst <= TIGHT, format!("101 layouts, max |closed form - engine| = {worst:.3e}")))
}

pub fn check_demo_values() -> Result<(bool, String)> {
    let t = exact_conditional_table(&EngravedLines::staggered(DEMO_GAMMA, DEMO_THETA)?, DEMO_GAMMA)?;
    let want = [1.0 / 6.0, 0.0, 1.0 / 12.0, 1.0 / 6.0];
    let got = [t.joint.ab, t.joint.ab_prime, t.joint.a_prime_b, t.joint.a_prime_b_prime];
    let d = max_diff(&got, &want);
    Ok((d <= TIGHT, format!("two-stop joints {got:.6?}, max deviation {d:.3e}")))
}

pub fn check_grid_oracle(m: usize) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for setup in Setup::TWO_STOP {
        let app = demo_app(setup)?;
        let (l, r) = setup.stop_lines();
        let ev = EventPredicate::crossed(l.expect("left stop")).and(&EventPredicate::crossed(r.expect("right stop")));
        let exact = crate::exact::event_probability(&app, &ev)?;
        worst = worst.max((grid_oracle(&app, &ev, m) - exact).abs());
    }
    Ok((worst <= 1e-5, format!("{m}-point grid, max deviation {worst:.3e}")))
}

pub fn check_single_stop(trials: u64) -> Result<(bool, String)> {
    let t = exact_conditional_table(&EngravedLines::staggered(DEMO_GAMMA, DEMO_THETA)?, DEMO_GAMMA)?;
    let want = DEMO_GAMMA / (4.0 * PI);
    let exact_dev = Line::ALL.iter().map(|&l| (t.singles.get(l) - want).abs()).fold(0.0, f64::max);
    let mut worst_z = 0.0f64;
    for (k, line) in Line::ALL.into_iter().enumerate() {
        let setup = crate::exact::single_setup(line);
        let app = demo_app(setup)?;
        let spec = SequenceSpec { setup, n_trials: trials, seed: CampaignPlan::derive_seed(SUITE_SEED, setup) ^ k as u64 };
        let counts = run_sequence(&app, &spec);
        let e = estimate(*counts.crossed.get(line), counts.n)?;
        let exact_stderr = (want * (1.0 - want) / trials as f64).sqrt();
        worst_z = worst_z.max((e.p - want).abs() / exact_stderr);
    }
    Ok((
        exact_dev <= TIGHT && worst_z <= 5.0,
        format!("exact deviation {exact_dev:.3e}, worst Monte Carlo |z| = {worst_z:.2} at n={trials}"),
    ))
}

pub fn check_naive_values(samples: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED + 1);
    let mut worst = 0.0f64;
    let mut flagged = true;
    for _ in 0..samples {
        let (g, t) = random_layout(&mut rng);
        let s = naive_plug(&closed_form_staggered(g, t)?);
        let ch = ch_value(&s);
        let primed = ch_primed_value(&s);
        let sum = ch_sum_value(&s);
        worst = worst
            .max((ch.value - (2.0 * g - t) / TAU).abs())
            .max((primed.value - t / TAU).abs())
            .max((sum.value - g / PI).abs());
        flagged &= ch.violated() && primed.violated() && sum.positive;
    }
    Ok((worst <= TIGHT && flagged, format!("{samples} layouts, max deviation {worst:.3e}, all flagged: {flagged}")))
}

pub fn check_bayes(samples: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED + 2);
    let mut worst = 0.0f64;
    let mut flagged = true;
    for _ in 0..samples {
        let (g, t) = random_layout(&mut rng);
        let b = bayes_conditionals(&naive_plug(&closed_form_staggered(g, t)?));
        for c in b.all() {
            worst = worst.max(c.value.map_or(f64::INFINITY, |v| (v - 2.0).abs()));
            flagged &= c.exceeds_one;
        }
    }
    Ok((worst <= TIGHT && flagged, format!("{samples} layouts, max |ratio - 2| = {worst:.3e}, all flagged: {flagged}")))
}

pub fn check_corrected(samples: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED + 3);
    let demo = reduced_ch_value(&closed_form_staggered(DEMO_GAMMA, DEMO_THETA)?, &SettingFrequencies::uniform())?;
    let mut worst_formula = (demo.value + 1.0 / 48.0).abs();
    let mut worst_residual = 0.0f64;
    let mut in_range = true;
    for _ in 0..samples {
        let (g, t) = random_layout(&mut rng);
        let table = closed_form_staggered(g, t)?;
        let r = reduced_ch_value(&table, &SettingFrequencies::uniform())?;
        worst_formula = worst_formula.max((r.value + (g - t) / (8.0 * PI)).abs());

        // arbitrary tables and frequencies
        let mut any = ConditionalTable::zero();
        any.joint = PerSetting::from_fn(|_| rng.random::<f64>());
        let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() + 1e-3);
        let total: f64 = w.iter().sum();
        let f = SettingFrequencies::new(w[0] / total, w[1] / total, w[2] / total, w[3] / total)?;
        let r = reduced_ch_value(&any, &f)?;
        let direct = ch_value(&corrected_probabilities(&any, &f)).value;
        worst_residual = worst_residual.max((r.value - direct).abs());
        in_range &= (-1.0..=0.0).contains(&r.value);
    }
    Ok((
        worst_formula <= TIGHT && worst_residual < TIGHT && in_range,
        format!("demo {:.6}, max formula deviation {worst_formula:.3e}, max identity residual {worst_residual:.3e}, in [-1,0]: {in_range}", demo.value),
    ))
}

fn random_unmodified(rng: &mut ChaCha8Rng) -> Result<Apparatus> {
    loop {
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
        let gamma1 = TAU * (1.0 - rng.random::<f64>());
        if let Ok(app) = ApparatusConfig::unmodified(EngravedLines::new(a[0], a[1], a[2], a[3])?, gamma1).validate() {
            return Ok(app);
        }
    }
}

pub fn check_honest(configs: usize, grid: usize, grid_configs: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED + 4);
    let mut lo = 0.0f64;
    let mut hi = -1.0f64;
    for _ in 0..configs {
        let v = ch_value(&single_system_probabilities(&random_unmodified(&mut rng)?)?).value;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mut fixed_ok = true;
    for _ in 0..grid_configs {
        let app = random_unmodified(&mut rng)?;
        for k in 0..grid {
            let phi = Angle::new(TAU * (k as f64 + 0.5) / grid as f64)?;
            let c = fixed_lambda_check(&app, phi)?;
            fixed_ok &= c.factorisability_residual == 0.0 && !c.value.violated();
        }
    }
    let ch_ok = lo >= -1.0 - TIGHT && hi <= TIGHT;
    Ok((
        ch_ok && fixed_ok,
        format!("{configs} devices, CH range [{lo:.6}, {hi:.6}]; fixed-angle checks on {grid_configs}x{grid} grid: {fixed_ok}"),
    ))
}

pub fn check_reproducibility(trials: u64) -> Result<(bool, String)> {
    let plan = CampaignPlan::uniform(EngravedLines::staggered(DEMO_GAMMA, DEMO_THETA)?, DEMO_GAMMA, trials, 7);
    let mut renders = Vec::new();
    for workers in [1, 4, 8] {
        let r = run_campaign_with_workers(&plan, workers)?;
        renders.push(serde_json::to_string(&r).map_err(|e| crate::Error::Io(e.to_string()))?);
    }
    let same = renders.windows(2).all(|w| w[0] == w[1]);
    Ok((same, format!("{trials} trials per sequence on 1, 4, 8 workers, identical: {same}")))
}

/// Applies a local relabeling to a 16-entry behavior: optional swap of each
/// party's settings, and outcome flips per party and setting.
pub fn relabel(e: [f64; 16], swap_left: bool, swap_right: bool, flip_left: [bool; 2], flip_right: [bool; 2]) -> [f64; 16] {
    let mut out = [0.0; 16];
    for x in 0..2 {
        for y in 0..2 {
            let src = 2 * (x ^ swap_left as usize) + (y ^ swap_right as usize);
            for cell in 0..4 {
                // cell index: 0 = (1,1), 1 = (1,0), 2 = (0,1), 3 = (0,0)
                let (l, r) = (cell < 2, cell % 2 == 0);
                let l2 = l ^ flip_left[x];
                let r2 = r ^ flip_right[y];
                let dst = (!l2 as usize) * 2 + (!r2 as usize);
                out[4 * (2 * x + y) + dst] = e[4 * src + cell];
            }
        }
    }
    out
}

fn random_local(rng: &mut ChaCha8Rng) -> (BehaviorTable, Vec<f64>) {
    let mut w: Vec<f64> = (0..16).map(|_| if rng.random_bool(0.5) { rng.random::<f64>() } else { 0.0 }).collect();
    w[rng.random_range(0..16)] += 0.1;
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let mut e = [0.0; 16];
    for (wi, s) in w.iter().zip(enumerate_strategies()) {
        for (acc, v) in e.iter_mut().zip(s.table().entries()) {
            *acc += wi * v;
        }
    }
    (BehaviorTable::from_entries(e).expect("mixture of strategies is a behavior"), w)
}

fn random_pr_variant(rng: &mut ChaCha8Rng) -> BehaviorTable {
    let e = relabel(
        pr_box().entries(),
        rng.random_bool(0.5),
        rng.random_bool(0.5),
        [rng.random_bool(0.5), rng.random_bool(0.5)],
        [rng.random_bool(0.5), rng.random_bool(0.5)],
    );
    BehaviorTable::from_entries(e).expect("relabeling preserves normalization")
}

pub fn check_feasibility(samples: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED + 5);
    let mut notes = Vec::new();

    let mut mixtures_ok = true;
    let mut worst_witness = 0.0f64;
    for _ in 0..100 {
        let (t, _) = random_local(&mut rng);
        let f = feasible_joint(&t, DEFAULT_TOL)?;
        mixtures_ok &= f.feasible;
        if let Some(w) = &f.witness {
            worst_witness = worst_witness.max(witness_error(&t, w));
        }
    }
    mixtures_ok &= worst_witness < 1e-9;
    notes.push(format!("mixtures feasible: {mixtures_ok} (witness error {worst_witness:.1e})"));

    let demo = BehaviorTable::from_conditionals(&closed_form_staggered(DEMO_GAMMA, DEMO_THETA)?)?;
    let nsd = no_signaling_deviation(&demo);
    let demo_ok = !feasible_joint(&demo, DEFAULT_TOL)?.feasible && nsd >= 1.0 / 12.0 - 1e-9;
    notes.push(format!("demo infeasible: {demo_ok} (signaling {nsd:.6})"));

    let pr = ch_battery(&pr_box(), DEFAULT_TOL);
    let singlet = ch_battery(&singlet_table(SingletAngles::default()), DEFAULT_TOL);
    let boxes_ok = !pr.passes
        && (pr.max_value - 0.5).abs() <= 1e-9
        && !singlet.passes
        && (singlet.max_value - (2f64.sqrt() - 1.0) / 2.0).abs() <= 1e-9;
    notes.push(format!("battery max PR {:.6}, singlet {:.6}", pr.max_value, singlet.max_value));

    let mut agree = 0;
    let mut feasible_count = 0;
    for i in 0..samples {
        let (local, _) = random_local(&mut rng);
        let t = if i % 2 == 0 { local } else { local.mix(&random_pr_variant(&mut rng), rng.random::<f64>())? };
        let f = feasible_joint(&t, DEFAULT_TOL)?.feasible;
        let b = ch_battery(&t, DEFAULT_TOL).passes;
        feasible_count += f as usize;
        agree += (f == b) as usize;
    }
    let fine_ok = agree == samples;
    notes.push(format!("equivalence {agree}/{samples} ({feasible_count} feasible)"));

    Ok((mixtures_ok && demo_ok && boxes_ok && fine_ok, notes.join("; ")))
}

/// Runs the whole suite in a fixed order.
pub fn run_check(opts: CheckOptions) -> Vec<CheckOutcome> {
    let trials = opts.trials.unwrap_or(1_000_000);
    vec![
        outcome("closed_form_vs_engine", check_closed_form(opts.fault)),
        outcome("demo_two_stop_values", check_demo_values()),
        outcome("grid_oracle", check_grid_oracle(1_000_000)),
        outcome("single_stop", check_single_stop(trials)),
        outcome("naive_inequalities", check_naive_values(1000)),
        outcome("bayes_conditionals", check_bayes(1000)),
        outcome("corrected_and_identity", check_corrected(1000)),
        outcome("honest_apparatus", check_honest(10_000, 100_000, 4)),
        outcome("mc_reproducibility", check_reproducibility(trials / 4)),
        outcome("feasibility", check_feasibility(1000)),
    ]
}
