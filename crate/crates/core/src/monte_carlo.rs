//! Simulated trial sequences with uniformly random start angles.
//!
//! The start angle of trial `i` in a sequence is drawn from a ChaCha8
//! stream keyed by the sequence seed at word position `2i`, so every trial
//! has a fixed random value no matter how trials are split across
//! workers. Counts are reduced in chunk order.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::SettingFrequencies;
use crate::apparatus::{run_trial, Apparatus, ApparatusConfig, EngravedLines, Line, PerLine, PerSetting, Setup};
use crate::error::{Error, Result};
use crate::geometry::normalize;

/// Trials per work unit. Fixed so the reduction tree does not depend on
/// the worker count.
const CHUNK: u64 = 1 << 16;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub setup: Setup,
    pub n_trials: u64,
    pub seed: u64,
}

/// Start angle of trial `index` in the stream keyed by `seed`.
pub fn trial_angle(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * index as u128);
    unit_to_angle(rng.next_u64())
}

fn unit_to_angle(bits: u64) -> f64 {
    let u = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    u * TAU
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub n: u64,
    pub left_stop: u64,
    pub right_stop: u64,
    pub both_stops: u64,
    pub crossed: PerLine<u64>,
}

impl EventCounts {
    fn add(mut self, o: &EventCounts) -> Self {
        self.n += o.n;
        self.left_stop += o.left_stop;
        self.right_stop += o.right_stop;
        self.both_stops += o.both_stops;
        self.crossed.a += o.crossed.a;
        self.crossed.a_prime += o.crossed.a_prime;
        self.crossed.b += o.crossed.b;
        self.crossed.b_prime += o.crossed.b_prime;
        self
    }
}

fn count_chunk(app: &Apparatus, seed: u64, start: u64, end: u64) -> EventCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * start as u128);
    let mut c = EventCounts::default();
    for _ in start..end {
        let phi = normalize(unit_to_angle(rng.next_u64())).expect("finite angle");
        let out = run_trial(app, phi);
        c.n += 1;
        c.left_stop += out.reached_left_stop as u64;
        c.right_stop += out.reached_right_stop as u64;
        c.both_stops += (out.reached_left_stop && out.reached_right_stop) as u64;
        c.crossed.a += out.crossed.contains(Line::A) as u64;
        c.crossed.a_prime += out.crossed.contains(Line::APrime) as u64;
        c.crossed.b += out.crossed.contains(Line::B) as u64;
        c.crossed.b_prime += out.crossed.contains(Line::BPrime) as u64;
    }
    c
}

/// Runs one sequence of trials on the global rayon pool.
pub fn run_sequence(app: &Apparatus, spec: &SequenceSpec) -> EventCounts {
    let chunks: Vec<(u64, u64)> = (0..spec.n_trials.div_ceil(CHUNK))
        .map(|k| (k * CHUNK, ((k + 1) * CHUNK).min(spec.n_trials)))
        .collect();
    let partial: Vec<EventCounts> =
        chunks.par_iter().map(|&(s, e)| count_chunk(app, spec.seed, s, e)).collect();
    partial.iter().fold(EventCounts::default(), |acc, c| acc.add(c))
}

/// Point estimate, standard error and Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub count: u64,
    pub n: u64,
    pub p: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
}

pub fn estimate(count: u64, n: u64) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::UndefinedEstimate("no trials".into()));
    }
    if count > n {
        return Err(Error::InvalidArgument(format!("count {count} exceeds trials {n}")));
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let stderr = (p * (1.0 - p) / nf).sqrt();
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if count == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if count == n { 1.0 } else { (center + half).min(1.0) };
    Ok(Estimate { count, n, p, stderr, ci95: (lo, hi) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignPlan {
    pub lines: EngravedLines,
    pub gamma: f64,
    pub sequences: Vec<SequenceSpec>,
    pub master_seed: u64,
}

impl CampaignPlan {
    /// Sequence seed for `setup`, derived from the master seed.
    pub fn derive_seed(master_seed: u64, setup: Setup) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(1 + setup as u64);
        rng.next_u64()
    }

    /// All eight setups with the given trial counts and derived seeds.
    pub fn new(lines: EngravedLines, gamma: f64, trials: &BTreeMap<Setup, u64>, master_seed: u64) -> Self {
        let sequences = Setup::ALL
            .iter()
            .map(|&setup| SequenceSpec {
                setup,
                n_trials: trials.get(&setup).copied().unwrap_or(0),
                seed: Self::derive_seed(master_seed, setup),
            })
            .collect();
        CampaignPlan { lines, gamma, sequences, master_seed }
    }

    pub fn uniform(lines: EngravedLines, gamma: f64, n: u64, master_seed: u64) -> Self {
        let trials = Setup::ALL.iter().map(|&s| (s, n)).collect();
        Self::new(lines, gamma, &trials, master_seed)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for s in &self.sequences {
            if seen.insert(s.setup, ()).is_some() {
                return Err(Error::InvalidPlan(format!("setup {} listed twice", s.setup)));
            }
        }
        for s in Setup::TWO_STOP {
            if !seen.contains_key(&s) {
                return Err(Error::InvalidPlan(format!("two-stop setup {s} missing")));
            }
        }
        Ok(())
    }
}

/// Estimates for one sequence; `None` entries mean the sequence was empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub spec: SequenceSpec,
    pub counts: EventCounts,
    pub left_stop: Option<Estimate>,
    pub right_stop: Option<Estimate>,
    pub both_stops: Option<Estimate>,
    pub crossed: PerLine<Option<Estimate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub sequences: Vec<SequenceReport>,
    /// Ratios of two-stop trial counts; single-stop sequences are left out.
    pub frequencies: SettingFrequencies,
}

impl EstimateReport {
    pub fn sequence(&self, setup: Setup) -> Option<&SequenceReport> {
        self.sequences.iter().find(|s| s.spec.setup == setup)
    }

    /// Estimated `p(both stops reached | setting)` for a two-stop setting.
    pub fn joint(&self, setup: Setup) -> Option<Estimate> {
        self.sequence(setup).and_then(|s| s.both_stops)
    }

    /// Estimated `p(stop reached | single stop on line)`.
    pub fn single(&self, line: Line) -> Option<Estimate> {
        let setup = crate::exact::single_setup(line);
        let s = self.sequence(setup)?;
        if line.is_left() {
            s.left_stop
        } else {
            s.right_stop
        }
    }
}

fn sequence_report(spec: SequenceSpec, counts: EventCounts) -> SequenceReport {
    let est = |c: u64| estimate(c, counts.n).ok();
    SequenceReport {
        spec,
        counts,
        left_stop: est(counts.left_stop),
        right_stop: est(counts.right_stop),
        both_stops: est(counts.both_stops),
        crossed: PerLine {
            a: est(counts.crossed.a),
            a_prime: est(counts.crossed.a_prime),
            b: est(counts.crossed.b),
            b_prime: est(counts.crossed.b_prime),
        },
    }
}

/// Runs every sequence of the plan on the global rayon pool.
pub fn run_campaign(plan: &CampaignPlan) -> Result<EstimateReport> {
    plan.validate()?;
    let mut sequences = Vec::with_capacity(plan.sequences.len());
    let mut two_stop = PerSetting::<u64>::default();
    for spec in &plan.sequences {
        let app = ApparatusConfig::with_setup(plan.lines, plan.gamma, spec.setup).validate()?;
        let counts = run_sequence(&app, spec);
        match spec.setup {
            Setup::Ab => two_stop.ab = spec.n_trials,
            Setup::AbPrime => two_stop.ab_prime = spec.n_trials,
            Setup::APrimeB => two_stop.a_prime_b = spec.n_trials,
            Setup::APrimeBPrime => two_stop.a_prime_b_prime = spec.n_trials,
            _ => {}
        }
        sequences.push(sequence_report(*spec, counts));
    }
    let frequencies = SettingFrequencies::from_counts(&two_stop)?;
    Ok(EstimateReport { sequences, frequencies })
}

/// Runs the campaign on a dedicated pool of `workers` threads.
pub fn run_campaign_with_workers(plan: &CampaignPlan, workers: usize) -> Result<EstimateReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_campaign(plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn demo_lines() -> EngravedLines {
        EngravedLines::staggered(PI / 3.0, PI / 6.0).unwrap()
    }

    #[test]
    fn estimate_examples() {
        let e = estimate(166_700, 1_000_000).unwrap();
        assert!((e.p - 0.1667).abs() < 1e-15);
        assert!((e.stderr - 3.727e-4).abs() < 1e-6, "{}", e.stderr);
        assert!(e.ci95.0 < e.p && e.p < e.ci95.1);

        let zero = estimate(0, 50).unwrap();
        assert_eq!(zero.p, 0.0);
        assert_eq!(zero.ci95.0, 0.0);
        assert!(zero.ci95.1 > 0.0);

        let all = estimate(50, 50).unwrap();
        assert_eq!(all.p, 1.0);
        assert_eq!(all.ci95.1, 1.0);

        assert!(matches!(estimate(0, 0), Err(Error::UndefinedEstimate(_))));
        assert!(estimate(3, 2).is_err());
    }

    #[test]
    fn chunked_stream_matches_keyed_angles() {
        let seed = 42;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(2 * 70_000);
        for i in 70_000..70_010 {
            assert_eq!(unit_to_angle(rng.next_u64()), trial_angle(seed, i));
        }
    }

    #[test]
    fn single_trial_counts() {
        let app = ApparatusConfig::with_setup(demo_lines(), PI / 3.0, Setup::Ab).validate().unwrap();
        let c = run_sequence(&app, &SequenceSpec { setup: Setup::Ab, n_trials: 1, seed: 9 });
        assert_eq!(c.n, 1);
        for v in [c.left_stop, c.right_stop, c.both_stops, c.crossed.a, c.crossed.b_prime] {
            assert!(v <= 1);
        }
    }

    #[test]
    fn sequences_are_deterministic() {
        let app = ApparatusConfig::with_setup(demo_lines(), PI / 3.0, Setup::APrimeB).validate().unwrap();
        let spec = SequenceSpec { setup: Setup::APrimeB, n_trials: 200_000, seed: 3 };
        assert_eq!(run_sequence(&app, &spec), run_sequence(&app, &spec));
    }

    #[test]
    fn frequencies_from_trial_counts() {
        let plan = CampaignPlan::uniform(demo_lines(), PI / 3.0, 1000, 1);
        let r = run_campaign(&plan).unwrap();
        assert_eq!(r.frequencies, SettingFrequencies::uniform());

        let mut trials = BTreeMap::new();
        trials.insert(Setup::Ab, 2);
        trials.insert(Setup::AbPrime, 1);
        trials.insert(Setup::APrimeB, 1);
        trials.insert(Setup::APrimeBPrime, 0);
        let r = run_campaign(&CampaignPlan::new(demo_lines(), PI / 3.0, &trials, 1)).unwrap();
        assert_eq!(*r.frequencies.get(), PerSetting { ab: 0.5, ab_prime: 0.25, a_prime_b: 0.25, a_prime_b_prime: 0.0 });
        assert!(r.single(Line::A).is_none());
        assert!(r.joint(Setup::APrimeBPrime).is_none());
    }

    #[test]
    fn plan_validation() {
        let mut plan = CampaignPlan::uniform(demo_lines(), PI / 3.0, 10, 1);
        plan.sequences.retain(|s| s.setup != Setup::AbPrime);
        assert!(matches!(run_campaign(&plan), Err(Error::InvalidPlan(_))));

        let mut plan = CampaignPlan::uniform(demo_lines(), PI / 3.0, 10, 1);
        let dup = plan.sequences[0];
        plan.sequences.push(dup);
        assert!(matches!(run_campaign(&plan), Err(Error::InvalidPlan(_))));
    }

    #[test]
    fn derived_seeds_differ_per_setup() {
        let seeds: std::collections::BTreeSet<u64> =
            Setup::ALL.iter().map(|&s| CampaignPlan::derive_seed(0, s)).collect();
        assert_eq!(seeds.len(), 8);
    }
}
