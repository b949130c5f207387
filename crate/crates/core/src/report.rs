//! Run reports and the command workflows that produce them.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, ch_primed_value, ch_value, AnalysisReport, InequalityValue, ProbabilitySet};
use crate::apparatus::{ApparatusConfig, Line, Mode, PerLine, PerSetting};
use crate::config::{CampaignSpec, ExperimentConfig, Format, FrequencyChoice};
use crate::error::{Error, Result};
use crate::exact::{closed_form_staggered, exact_conditional_table, single_system_probabilities, ConditionalTable};
use crate::lhv::{ch_battery, feasible_joint, no_signaling_deviation, BehaviorTable, ChBattery, Feasibility, DEFAULT_TOL};
use crate::monte_carlo::{run_campaign, CampaignPlan, Estimate, EstimateReport};

pub const SCHEMA: &str = "ch-apparatus/1";

/// Largest tolerated gap between the closed form and the arc-partition
/// engine before a report is refused.
pub const CLOSED_FORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSection {
    pub table: ConditionalTable,
    /// Largest absolute difference from the exact table, over headline
    /// entries and full tables.
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McStatus {
    Estimated,
    /// The sequence had no trials; only the exact value is available.
    ExactOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEntry {
    pub status: McStatus,
    pub exact: f64,
    pub estimate: Option<Estimate>,
    /// `(p̂ − exact) / stderr`; absent when undefined.
    pub z_score: Option<f64>,
}

impl McEntry {
    fn new(exact: f64, estimate: Option<Estimate>) -> Self {
        let z_score = estimate.and_then(|e| {
            let d = e.p - exact;
            if e.stderr > 0.0 {
                Some(d / e.stderr)
            } else if d == 0.0 {
                Some(0.0)
            } else {
                None
            }
        });
        McEntry { status: if estimate.is_some() { McStatus::Estimated } else { McStatus::ExactOnly }, exact, estimate, z_score }
    }

    /// True when the estimate lies within `k` standard errors of the exact value.
    pub fn within_sigmas(&self, k: f64) -> bool {
        match self.estimate {
            None => true,
            Some(e) => (e.p - self.exact).abs() <= k * e.stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSection {
    pub campaign: EstimateReport,
    pub joint: PerSetting<McEntry>,
    pub singles: PerLine<McEntry>,
}

impl MonteCarloSection {
    pub fn entries(&self) -> [McEntry; 8] {
        let j = &self.joint;
        let s = &self.singles;
        [j.ab, j.ab_prime, j.a_prime_b, j.a_prime_b_prime, s.a, s.a_prime, s.b, s.b_prime]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilitySection {
    pub behavior: BehaviorTable,
    pub no_signaling_deviation: f64,
    pub joint_distribution: Feasibility,
    pub ch_battery: ChBattery,
}

/// CH analysis of the passive device, where all probabilities come from a
/// single run of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSystemSection {
    pub probabilities: ProbabilitySet,
    pub ch: InequalityValue,
    pub ch_primed: InequalityValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub exact: Option<ConditionalTable>,
    pub closed_form: Option<ClosedFormSection>,
    pub monte_carlo: Option<MonteCarloSection>,
    pub analysis: Option<AnalysisReport>,
    pub feasibility: Option<FeasibilitySection>,
    pub single_system: Option<SingleSystemSection>,
}

fn max_table_diff(a: &ConditionalTable, b: &ConditionalTable) -> f64 {
    let mut m = a.entries().iter().zip(b.entries()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    for ((_, x), (_, y)) in a.full_tables.iter().zip(b.full_tables.iter()) {
        for (p, q) in x.cells().iter().zip(y.cells()) {
            m = m.max((p - q).abs());
        }
    }
    m
}

fn monte_carlo_section(cfg: &ExperimentConfig, gamma: f64, exact: &ConditionalTable) -> Result<MonteCarloSection> {
    let plan = CampaignPlan::new(cfg.apparatus.lines, gamma, &cfg.campaign.trials, cfg.campaign.seed);
    let campaign = run_campaign(&plan)?;
    let joint = PerSetting::from_fn(|s| McEntry::new(*exact.joint.get(s), campaign.joint(s)));
    let singles = PerLine::from_fn(|l| McEntry::new(*exact.singles.get(l), campaign.single(l)));
    Ok(MonteCarloSection { campaign, joint, singles })
}

/// Builds the full report for a configuration; Monte Carlo runs only when
/// `simulate` is set.
pub fn build_report(cfg: &ExperimentConfig, command: &str, simulate: bool) -> Result<RunReport> {
    let mut report = RunReport {
        schema: SCHEMA.to_string(),
        command: command.to_string(),
        config: cfg.clone(),
        exact: None,
        closed_form: None,
        monte_carlo: None,
        analysis: None,
        feasibility: None,
        single_system: None,
    };

    match cfg.apparatus.mode {
        Mode::Unmodified => {
            if simulate {
                return Err(Error::Config {
                    path: "apparatus.mode".into(),
                    message: "simulation campaigns need the modified device".into(),
                });
            }
            let gamma1 = cfg.apparatus.gamma1.unwrap_or_default();
            let app = ApparatusConfig::unmodified(cfg.apparatus.lines, gamma1).validate()?;
            let probabilities = single_system_probabilities(&app)?;
            report.single_system = Some(SingleSystemSection {
                probabilities,
                ch: ch_value(&probabilities),
                ch_primed: ch_primed_value(&probabilities),
            });
        }
        Mode::Modified => {
            let gamma = cfg.apparatus.gamma.unwrap_or_default();
            let exact = exact_conditional_table(&cfg.apparatus.lines, gamma)?;
            if let Some((g, t)) = cfg.apparatus.staggered() {
                let table = closed_form_staggered(g, t)?;
                let max_abs_diff = max_table_diff(&table, &exact);
                if max_abs_diff > CLOSED_FORM_TOL {
                    return Err(Error::Consistency(format!(
                        "closed form and arc-partition tables differ by {max_abs_diff}"
                    )));
                }
                report.closed_form = Some(ClosedFormSection { table, max_abs_diff });
            }
            if simulate {
                report.monte_carlo = Some(monte_carlo_section(cfg, gamma, &exact)?);
            }
            let freqs = match (cfg.frequencies, &report.monte_carlo) {
                (FrequencyChoice::Empirical, Some(mc)) => mc.campaign.frequencies,
                _ => cfg.resolve_frequencies()?,
            };
            report.analysis = Some(analyze(&exact, &freqs)?);
            let behavior = BehaviorTable::from_conditionals(&exact)?;
            report.feasibility = Some(FeasibilitySection {
                behavior,
                no_signaling_deviation: no_signaling_deviation(&behavior),
                joint_distribution: feasible_joint(&behavior, DEFAULT_TOL)?,
                ch_battery: ch_battery(&behavior, DEFAULT_TOL),
            });
            report.exact = Some(exact);
        }
    }
    report.check_finite()?;
    Ok(report)
}

impl RunReport {
    fn check_finite(&self) -> Result<()> {
        let v = serde_json::to_value(self).map_err(|e| Error::Consistency(e.to_string()))?;
        fn walk(v: &serde_json::Value) -> bool {
            match v {
                serde_json::Value::Number(n) => n.as_f64().is_some_and(f64::is_finite),
                serde_json::Value::Array(a) => a.iter().all(walk),
                serde_json::Value::Object(o) => o.values().all(walk),
                _ => true,
            }
        }
        if walk(&v) {
            Ok(())
        } else {
            Err(Error::Consistency("report contains a non-finite number".into()))
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Headline quantities as `key,value` lines.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![("schema".into(), self.schema.clone()), ("command".into(), self.command.clone())];
        if let Some(t) = &self.exact {
            for (setup, v) in t.joint.iter() {
                rows.push((format!("exact_joint{}", setup.label()), v.to_string()));
            }
            for line in Line::ALL {
                rows.push((format!("exact_single({line})"), t.singles.get(line).to_string()));
            }
        }
        if let Some(a) = &self.analysis {
            rows.push(("ch_naive".into(), a.naive_ch.value.to_string()));
            rows.push(("ch_primed_naive".into(), a.naive_ch_primed.value.to_string()));
            rows.push(("ch_sum_naive".into(), a.naive_ch_sum.value.to_string()));
            rows.push(("bayes_max_naive".into(), a.naive_bayes.max().map_or(String::new(), |v| v.to_string())));
            rows.push(("ch_corrected".into(), a.corrected_ch.value.to_string()));
            rows.push(("ch_reduced".into(), a.reduced_ch.value.to_string()));
            rows.push(("identity_residual".into(), a.reduced_ch.identity_residual.to_string()));
        }
        if let Some(f) = &self.feasibility {
            rows.push(("no_signaling_deviation".into(), f.no_signaling_deviation.to_string()));
            rows.push(("joint_distribution_feasible".into(), f.joint_distribution.feasible.to_string()));
        }
        if let Some(s) = &self.single_system {
            rows.push(("ch_single_system".into(), s.ch.value.to_string()));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["key", "value"]).expect("in-memory write");
        for (k, v) in rows {
            w.write_record([k, v]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Staggered-layout demo with a full Monte Carlo campaign and empirical
/// setting frequencies.
pub fn cmd_demo(gamma: f64, theta: f64, seed: u64, trials: u64) -> Result<RunReport> {
    let mut cfg = ExperimentConfig::staggered(gamma, theta)?;
    cfg.campaign = CampaignSpec::uniform(trials, seed);
    cfg.frequencies = FrequencyChoice::Empirical;
    build_report(&cfg, "demo", true)
}

pub fn cmd_exact(cfg: &ExperimentConfig) -> Result<RunReport> {
    build_report(cfg, "exact", false)
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<RunReport> {
    build_report(cfg, "simulate", true)
}

/// Inclusive parameter range sampled at `steps` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn points(&self, steps: usize) -> Vec<f64> {
        if steps <= 1 {
            return vec![self.lo];
        }
        (0..steps).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (steps - 1) as f64).collect()
    }
}

impl std::str::FromStr for Range {
    type Err = String;

    /// `lo:hi` or a single value.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad number `{x}`: {e}"));
        let (lo, hi) = match s.split_once(':') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if !lo.is_finite() || !hi.is_finite() {
            return Err("range bounds must be finite".into());
        }
        Ok(Range { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub theta: f64,
    pub ch_naive: f64,
    pub ch_primed: f64,
    pub ch_sum: f64,
    pub bayes_max: Option<f64>,
    pub ch_corrected: f64,
    pub naive_violated: bool,
    pub corrected_violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub skipped: usize,
}

pub const SWEEP_HEADER: [&str; 9] =
    ["gamma", "theta", "ch_naive", "ch_primed", "ch_sum", "bayes_max", "ch_corrected", "naive_violated", "corrected_violated"];

/// Evaluates the naive and corrected analyses (uniform frequencies) on a
/// `steps × steps` grid; points outside `0 < theta < gamma`,
/// `gamma + theta < 2π` are skipped.
pub fn sweep(gamma: Range, theta: Range, steps: usize) -> Result<SweepResult> {
    let grid: Vec<(f64, f64)> =
        gamma.points(steps).into_iter().flat_map(|g| theta.points(steps).into_iter().map(move |t| (g, t))).collect();
    let rows: Vec<Option<SweepRow>> = grid
        .par_iter()
        .map(|&(g, t)| -> Result<Option<SweepRow>> {
            if crate::apparatus::check_staggered(g, t).is_err() {
                return Ok(None);
            }
            let cfg = ExperimentConfig::staggered(g, t)?;
            let exact = exact_conditional_table(&cfg.apparatus.lines, g)?;
            let a = analyze(&exact, &cfg.resolve_frequencies()?)?;
            Ok(Some(SweepRow {
                gamma: g,
                theta: t,
                ch_naive: a.naive_ch.value,
                ch_primed: a.naive_ch_primed.value,
                ch_sum: a.naive_ch_sum.value,
                bayes_max: a.naive_bayes.max(),
                ch_corrected: a.corrected_ch.value,
                naive_violated: a.naive_ch.violated(),
                corrected_violated: a.corrected_ch.violated(),
            }))
        })
        .collect::<Result<_>>()?;
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    Ok(SweepResult { rows: rows.into_iter().flatten().collect(), skipped })
}

/// Writes the sweep as CSV with a `#` footer line counting skipped points.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for r in &result.rows {
        w.write_record([
            r.gamma.to_string(),
            r.theta.to_string(),
            r.ch_naive.to_string(),
            r.ch_primed.to_string(),
            r.ch_sum.to_string(),
            r.bayes_max.map_or(String::new(), |v| v.to_string()),
            r.ch_corrected.to_string(),
            r.naive_violated.to_string(),
            r.corrected_violated.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    let mut inner = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    writeln!(inner, "# skipped {} invalid grid points (need 0 < theta < gamma, gamma + theta < 2pi)", result.skipped)?;
    Ok(())
}

pub fn cmd_sweep(gamma: Range, theta: Range, steps: usize, out_csv: &Path) -> Result<SweepResult> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let result = sweep(gamma, theta, steps)?;
    let file = std::fs::File::create(out_csv).map_err(|e| Error::Io(format!("{}: {e}", out_csv.display())))?;
    write_sweep_csv(&result, std::io::BufWriter::new(file))?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn demo_headline_values() {
        let r = cmd_demo(PI / 3.0, PI / 6.0, 0, 20_000).unwrap();
        let a = r.analysis.unwrap();
        assert!((a.naive_ch.value - 0.25).abs() < 1e-12);
        assert!((a.naive_ch_primed.value - 1.0 / 12.0).abs() < 1e-12);
        assert!((a.naive_ch_sum.value - 1.0 / 3.0).abs() < 1e-12);
        assert!((a.naive_bayes.b_given_a.value.unwrap() - 2.0).abs() < 1e-12);
        assert!((a.corrected_ch.value + 1.0 / 48.0).abs() < 1e-12);
        assert!(!r.feasibility.unwrap().joint_distribution.feasible);
        assert!(r.closed_form.unwrap().max_abs_diff < 1e-12);
    }

    #[test]
    fn demo_rejects_boundary() {
        assert!(cmd_demo(PI / 3.0, PI / 3.0, 0, 10).is_err());
    }

    #[test]
    fn range_parsing() {
        assert_eq!("0.5:1.5".parse::<Range>().unwrap(), Range { lo: 0.5, hi: 1.5 });
        assert_eq!("2".parse::<Range>().unwrap(), Range { lo: 2.0, hi: 2.0 });
        assert!("a:b".parse::<Range>().is_err());
        assert_eq!(Range { lo: 0.0, hi: 1.0 }.points(3), vec![0.0, 0.5, 1.0]);
        assert_eq!(Range { lo: 0.3, hi: 1.0 }.points(1), vec![0.3]);
    }

    #[test]
    fn sweep_skips_invalid_points() {
        let r = sweep(Range { lo: 1.0, hi: 1.0 }, Range { lo: 1.0, hi: 1.0 }, 1).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.skipped, 1);
        let mut buf = Vec::new();
        write_sweep_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER.join(","));
        assert!(lines[1].starts_with("# skipped 1 "));
        assert!(!text.contains('\r'));
    }
}
