//! Clauser-Horne expressions and the two ways of feeding them.
//!
//! The *naive* route copies the per-setup conditional probabilities
//! straight into the inequality, as if they all described one physical
//! system. The *corrected* route weights each two-stop conditional by the
//! frequency with which that setting was used, giving absolute
//! probabilities for the whole experiment.

use serde::{Deserialize, Serialize};

use crate::apparatus::{crossed_events, Apparatus, Line, Mode, PerLine, PerSetting};
use crate::error::{Error, Result};
use crate::exact::ConditionalTable;
use crate::geometry::Angle;

/// Slack applied to every bound before a value is flagged.
pub const FLAG_TOL: f64 = 1e-9;

/// Conditional probabilities with a denominator below this are undefined.
pub const MIN_DENOMINATOR: f64 = 1e-15;

/// Tolerance on `reduced_ch_value − ch_value(corrected)` before it counts
/// as a bug.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Arguments of a Clauser-Horne expression.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProbabilitySet {
    pub joint: PerSetting<f64>,
    pub single: PerLine<f64>,
}

impl ProbabilitySet {
    pub fn zero() -> Self {
        ProbabilitySet::default()
    }

    pub fn values(&self) -> [f64; 8] {
        let j = &self.joint;
        let s = &self.single;
        [j.ab, j.ab_prime, j.a_prime_b, j.a_prime_b_prime, s.a, s.a_prime, s.b, s.b_prime]
    }
}

/// Retrospective frequencies of the four two-stop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SettingFrequencies(PerSetting<f64>);

impl SettingFrequencies {
    pub fn new(ab: f64, ab_prime: f64, a_prime_b: f64, a_prime_b_prime: f64) -> Result<Self> {
        Self::from_per_setting(PerSetting { ab, ab_prime, a_prime_b, a_prime_b_prime })
    }

    pub fn from_per_setting(f: PerSetting<f64>) -> Result<Self> {
        let vals = [f.ab, f.ab_prime, f.a_prime_b, f.a_prime_b_prime];
        if vals.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(format!("setting frequencies must lie in [0,1], got {vals:?}")));
        }
        let sum: f64 = vals.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("setting frequencies must sum to 1, got {sum}")));
        }
        Ok(SettingFrequencies(f))
    }

    pub fn uniform() -> Self {
        SettingFrequencies(PerSetting { ab: 0.25, ab_prime: 0.25, a_prime_b: 0.25, a_prime_b_prime: 0.25 })
    }

    /// Ratios of per-setting trial counts to their total.
    pub fn from_counts(counts: &PerSetting<u64>) -> Result<Self> {
        let total = counts.ab + counts.ab_prime + counts.a_prime_b + counts.a_prime_b_prime;
        if total == 0 {
            return Err(Error::InvalidPlan("no two-stop trials to infer setting frequencies from".into()));
        }
        let t = total as f64;
        Self::from_per_setting(counts.map(|&c| c as f64 / t))
    }

    pub fn get(&self) -> &PerSetting<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Satisfied,
    /// Above the upper bound (0).
    ViolatedUpper,
    /// Below the lower bound (−1).
    ViolatedLower,
}

/// A value checked against `[−1, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityValue {
    pub value: f64,
    pub status: BoundStatus,
}

impl InequalityValue {
    pub fn new(value: f64) -> Self {
        let status = if value > FLAG_TOL {
            BoundStatus::ViolatedUpper
        } else if value < -1.0 - FLAG_TOL {
            BoundStatus::ViolatedLower
        } else {
            BoundStatus::Satisfied
        };
        InequalityValue { value, status }
    }

    pub fn violated(&self) -> bool {
        self.status != BoundStatus::Satisfied
    }
}

/// A value that should be non-positive; flagged when positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedSum {
    pub value: f64,
    pub positive: bool,
}

impl SignedSum {
    pub fn new(value: f64) -> Self {
        SignedSum { value, positive: value > FLAG_TOL }
    }
}

/// `p(A,B) − p(A,B') + p(A',B) + p(A',B') − p(A') − p(B)`.
pub fn ch_value(s: &ProbabilitySet) -> InequalityValue {
    let j = &s.joint;
    InequalityValue::new(j.ab - j.ab_prime + j.a_prime_b + j.a_prime_b_prime - s.single.a_prime - s.single.b)
}

/// The same expression with primed and unprimed angles exchanged.
pub fn ch_primed_value(s: &ProbabilitySet) -> InequalityValue {
    let j = &s.joint;
    InequalityValue::new(j.a_prime_b_prime - j.a_prime_b + j.ab_prime + j.ab - s.single.a - s.single.b_prime)
}

/// Sum of the CH expression and its primed twin.
pub fn ch_sum_value(s: &ProbabilitySet) -> SignedSum {
    let j = &s.joint;
    let p = &s.single;
    SignedSum::new(2.0 * j.ab + 2.0 * j.a_prime_b_prime - p.a - p.a_prime - p.b - p.b_prime)
}

/// A ratio that may be undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditional {
    pub value: Option<f64>,
    pub exceeds_one: bool,
}

impl Conditional {
    fn ratio(num: f64, den: f64) -> Self {
        if den.abs() < MIN_DENOMINATOR {
            Conditional { value: None, exceeds_one: false }
        } else {
            let v = num / den;
            Conditional { value: Some(v), exceeds_one: v > 1.0 + FLAG_TOL }
        }
    }
}

/// Conditionals implied by `p(A,B) = p(A) p(B|A) = p(B) p(A|B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesConditionals {
    pub b_given_a: Conditional,
    pub a_given_b: Conditional,
    pub b_prime_given_a_prime: Conditional,
    pub a_prime_given_b_prime: Conditional,
}

impl BayesConditionals {
    pub fn all(&self) -> [Conditional; 4] {
        [self.b_given_a, self.a_given_b, self.b_prime_given_a_prime, self.a_prime_given_b_prime]
    }

    pub fn any_exceeds_one(&self) -> bool {
        self.all().iter().any(|c| c.exceeds_one)
    }

    pub fn max(&self) -> Option<f64> {
        self.all().iter().filter_map(|c| c.value).reduce(f64::max)
    }
}

pub fn bayes_conditionals(s: &ProbabilitySet) -> BayesConditionals {
    let j = &s.joint;
    let p = &s.single;
    BayesConditionals {
        b_given_a: Conditional::ratio(j.ab, p.a),
        a_given_b: Conditional::ratio(j.ab, p.b),
        b_prime_given_a_prime: Conditional::ratio(j.a_prime_b_prime, p.a_prime),
        a_prime_given_b_prime: Conditional::ratio(j.a_prime_b_prime, p.b_prime),
    }
}

/// The fallacy made explicit: conditionals from eight different setups
/// copied verbatim as if they were absolute probabilities of one system.
pub fn naive_plug(t: &ConditionalTable) -> ProbabilitySet {
    ProbabilitySet { joint: t.joint, single: t.singles }
}

/// Absolute probabilities for the whole experiment: each two-stop joint
/// weighted by its setting frequency, singles from the sum rules.
pub fn corrected_probabilities(t: &ConditionalTable, f: &SettingFrequencies) -> ProbabilitySet {
    let f = f.get();
    let j = PerSetting {
        ab: t.joint.ab * f.ab,
        ab_prime: t.joint.ab_prime * f.ab_prime,
        a_prime_b: t.joint.a_prime_b * f.a_prime_b,
        a_prime_b_prime: t.joint.a_prime_b_prime * f.a_prime_b_prime,
    };
    let single = PerLine {
        a: j.ab + j.ab_prime,
        a_prime: j.a_prime_b + j.a_prime_b_prime,
        b: j.ab + j.a_prime_b,
        b_prime: j.ab_prime + j.a_prime_b_prime,
    };
    ProbabilitySet { joint: j, single }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCh {
    pub value: f64,
    /// `|value − ch_value(corrected_probabilities(t, f))|`.
    pub identity_residual: f64,
}

/// What the CH expression collapses to on corrected probabilities:
/// `−p(A,B'|a,b') p(a,b') − p(A',B|a',b) p(a',b)`.
pub fn reduced_ch_value(t: &ConditionalTable, f: &SettingFrequencies) -> Result<ReducedCh> {
    let fr = f.get();
    let value = -t.joint.ab_prime * fr.ab_prime - t.joint.a_prime_b * fr.a_prime_b;
    let direct = ch_value(&corrected_probabilities(t, f)).value;
    let identity_residual = (value - direct).abs();
    if identity_residual > IDENTITY_TOL {
        return Err(Error::Consistency(format!(
            "reduced CH value {value} differs from direct evaluation {direct}"
        )));
    }
    Ok(ReducedCh { value, identity_residual })
}

/// Fixed start-angle check on the passive device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedLambdaCheck {
    /// `|1{A∧B} − 1{A}·1{B}|`, zero for a deterministic local model.
    pub factorisability_residual: f64,
    /// `xy − xy' + x'y + x'y' − x' − y` from the four crossing indicators.
    pub value: InequalityValue,
}

pub fn fixed_lambda_check(app: &Apparatus, phi: Angle) -> Result<FixedLambdaCheck> {
    if app.mode() != Mode::Unmodified {
        return Err(Error::InvalidArgument("fixed-angle check applies to the unmodified device".into()));
    }
    let out = app.run_trial(phi);
    let c = crossed_events(&out);
    let ind = |b: bool| -> f64 { if b { 1.0 } else { 0.0 } };
    let (x, xp, y, yp) = (ind(c.a), ind(c.a_prime), ind(c.b), ind(c.b_prime));
    let joint = ind(out.crossed.contains(Line::A) && out.crossed.contains(Line::B));
    Ok(FixedLambdaCheck {
        factorisability_residual: (joint - x * y).abs(),
        value: fixed_lambda_value(x, xp, y, yp),
    })
}

/// The fixed-angle CH combination for indicator (or probability) values.
pub fn fixed_lambda_value(x: f64, x_prime: f64, y: f64, y_prime: f64) -> InequalityValue {
    InequalityValue::new(x * y - x * y_prime + x_prime * y + x_prime * y_prime - x_prime - y)
}

/// Everything derived from one conditional table and one set of
/// frequencies, naive and corrected side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub naive: ProbabilitySet,
    pub naive_ch: InequalityValue,
    pub naive_ch_primed: InequalityValue,
    pub naive_ch_sum: SignedSum,
    pub naive_bayes: BayesConditionals,
    pub frequencies: SettingFrequencies,
    pub corrected: ProbabilitySet,
    pub corrected_ch: InequalityValue,
    pub corrected_ch_primed: InequalityValue,
    pub corrected_ch_sum: SignedSum,
    pub corrected_bayes: BayesConditionals,
    pub reduced_ch: ReducedCh,
}

pub fn analyze(t: &ConditionalTable, f: &SettingFrequencies) -> Result<AnalysisReport> {
    let naive = naive_plug(t);
    let corrected = corrected_probabilities(t, f);
    Ok(AnalysisReport {
        naive,
        naive_ch: ch_value(&naive),
        naive_ch_primed: ch_primed_value(&naive),
        naive_ch_sum: ch_sum_value(&naive),
        naive_bayes: bayes_conditionals(&naive),
        frequencies: *f,
        corrected,
        corrected_ch: ch_value(&corrected),
        corrected_ch_primed: ch_primed_value(&corrected),
        corrected_ch_sum: ch_sum_value(&corrected),
        corrected_bayes: bayes_conditionals(&corrected),
        reduced_ch: reduced_ch_value(t, f)?,
    })
}
