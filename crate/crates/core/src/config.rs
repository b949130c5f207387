//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "apparatus": { "mode": "modified", "gamma": 1.0471975511965976, "theta": 0.5235987755982988 },
//!   "campaign": { "trials": 1000000, "per_setup": { "left_a": 0 }, "seed": 0 },
//!   "frequencies": "uniform",
//!   "output": { "format": "json", "path": "report.json" }
//! }
//! ```
//!
//! The apparatus takes either explicit `lines` (`a`, `a_prime`, `b`,
//! `b_prime`, radians) or the `gamma`/`theta` shorthand for the staggered
//! layout. `frequencies` is `"uniform"`, `"empirical"` or an object with
//! keys `ab`, `ab_prime`, `a_prime_b`, `a_prime_b_prime`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::SettingFrequencies;
use crate::apparatus::{check_staggered, ApparatusConfig, EngravedLines, Mode, PerSetting, Setup};
use crate::error::{Error, Result};
use crate::monte_carlo::DEFAULT_TRIALS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyChoice {
    Uniform,
    /// Ratios of the planned two-stop trial counts.
    Empirical,
    Explicit(SettingFrequencies),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApparatusSpec {
    pub mode: Mode,
    pub gamma: Option<f64>,
    pub theta: Option<f64>,
    pub gamma1: Option<f64>,
    pub lines: EngravedLines,
}

impl ApparatusSpec {
    /// `(gamma, theta)` when the lines came from the staggered shorthand.
    pub fn staggered(&self) -> Option<(f64, f64)> {
        match (self.mode, self.gamma, self.theta) {
            (Mode::Modified, Some(g), Some(t)) => Some((g, t)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub trials: BTreeMap<Setup, u64>,
    pub seed: u64,
}

impl CampaignSpec {
    pub fn uniform(n: u64, seed: u64) -> Self {
        CampaignSpec { trials: Setup::ALL.iter().map(|&s| (s, n)).collect(), seed }
    }

    pub fn two_stop_counts(&self) -> PerSetting<u64> {
        PerSetting::from_fn(|s| self.trials.get(&s).copied().unwrap_or(0))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    pub format: Format,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub apparatus: ApparatusSpec,
    pub campaign: CampaignSpec,
    pub frequencies: FrequencyChoice,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// Staggered-layout device with default campaign and uniform frequencies.
    pub fn staggered(gamma: f64, theta: f64) -> Result<Self> {
        let lines = EngravedLines::staggered(gamma, theta)?;
        Ok(ExperimentConfig {
            apparatus: ApparatusSpec { mode: Mode::Modified, gamma: Some(gamma), theta: Some(theta), gamma1: None, lines },
            campaign: CampaignSpec::uniform(DEFAULT_TRIALS, 0),
            frequencies: FrequencyChoice::Uniform,
            output: OutputSpec::default(),
        })
    }

    pub fn resolve_frequencies(&self) -> Result<SettingFrequencies> {
        match self.frequencies {
            FrequencyChoice::Uniform => Ok(SettingFrequencies::uniform()),
            FrequencyChoice::Explicit(f) => Ok(f),
            FrequencyChoice::Empirical => SettingFrequencies::from_counts(&self.campaign.two_stop_counts()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    apparatus: RawApparatus,
    #[serde(default)]
    campaign: RawCampaign,
    #[serde(default)]
    frequencies: Option<RawFrequencies>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApparatus {
    mode: Mode,
    gamma: Option<f64>,
    theta: Option<f64>,
    gamma1: Option<f64>,
    lines: Option<RawLines>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLines {
    a: f64,
    a_prime: f64,
    b: f64,
    b_prime: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCampaign {
    trials: Option<u64>,
    #[serde(default)]
    per_setup: BTreeMap<Setup, u64>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawFrequencies {
    Keyword(String),
    Explicit(PerSetting<f64>),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default)]
    format: Format,
    path: Option<PathBuf>,
}

fn at(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| at("<file>", format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let kind = match e.inner().classify() {
            serde_json::error::Category::Syntax | serde_json::error::Category::Eof => "syntax error",
            _ => "invalid value",
        };
        at(&e.path().to_string(), format!("{kind}: {}", e.inner()))
    })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let ra = raw.apparatus;
    let lines = match (&ra.lines, ra.theta) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(at("apparatus", "give exactly one of `lines` or the `gamma`/`theta` shorthand"))
        }
        (Some(l), None) => EngravedLines::new(l.a, l.a_prime, l.b, l.b_prime).map_err(|e| at("apparatus.lines", e.to_string()))?,
        (None, Some(theta)) => {
            let gamma = ra.gamma.ok_or_else(|| at("apparatus.gamma", "required with `theta`"))?;
            check_staggered(gamma, theta).map_err(|_| {
                at("apparatus.theta", format!("the staggered layout needs 0 < theta < gamma and gamma + theta < 2π (gamma={gamma}, theta={theta})"))
            })?;
            EngravedLines::staggered(gamma, theta)?
        }
    };

    let device = match ra.mode {
        Mode::Modified => {
            let gamma = ra.gamma.ok_or_else(|| at("apparatus.gamma", "required in modified mode"))?;
            ApparatusConfig::with_setup(lines, gamma, Setup::Ab)
        }
        Mode::Unmodified => {
            let gamma1 = ra.gamma1.ok_or_else(|| at("apparatus.gamma1", "required in unmodified mode"))?;
            ApparatusConfig::unmodified(lines, gamma1)
        }
    };
    device.validate().map_err(|e| at("apparatus", e.to_string()))?;

    let default_n = raw.campaign.trials.unwrap_or(DEFAULT_TRIALS);
    let mut trials: BTreeMap<Setup, u64> = Setup::ALL.iter().map(|&s| (s, default_n)).collect();
    trials.extend(raw.campaign.per_setup);
    let campaign = CampaignSpec { trials, seed: raw.campaign.seed.unwrap_or(0) };

    let frequencies = match raw.frequencies {
        None => FrequencyChoice::Uniform,
        Some(RawFrequencies::Keyword(k)) => match k.as_str() {
            "uniform" => FrequencyChoice::Uniform,
            "empirical" => FrequencyChoice::Empirical,
            other => return Err(at("frequencies", format!("expected \"uniform\", \"empirical\" or an object, got \"{other}\""))),
        },
        Some(RawFrequencies::Explicit(f)) => {
            FrequencyChoice::Explicit(SettingFrequencies::from_per_setting(f).map_err(|e| at("frequencies", e.to_string()))?)
        }
    };

    let cfg = ExperimentConfig {
        apparatus: ApparatusSpec { mode: ra.mode, gamma: ra.gamma, theta: ra.theta, gamma1: ra.gamma1, lines },
        campaign,
        frequencies,
        output: OutputSpec { format: raw.output.format, path: raw.output.path },
    };
    if cfg.frequencies == FrequencyChoice::Empirical {
        cfg.resolve_frequencies().map_err(|e| at("campaign.per_setup", e.to_string()))?;
    }
    Ok(cfg)
}
