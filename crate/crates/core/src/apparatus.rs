//! The two-body device: engraved lines, optional stops, and the kinematics
//! of a single trial.
//!
//! Body 1 turns counterclockwise and its mark is tested against the left
//! lines `A`, `A'`; body 2 turns clockwise and is tested against `B`, `B'`.
//! In the unmodified device each body simply sweeps `gamma1`. In the
//! modified device the bodies share a rotation budget `gamma` (the mutual
//! constraint), split evenly while both move, and a stop freezes its body
//! the moment the mark reaches it.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ccw_delta, normalize, Angle, EPS_ANGLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Line {
    A,
    APrime,
    B,
    BPrime,
}

impl Line {
    pub const ALL: [Line; 4] = [Line::A, Line::APrime, Line::B, Line::BPrime];

    pub fn is_left(self) -> bool {
        matches!(self, Line::A | Line::APrime)
    }

    fn bit(self) -> u8 {
        match self {
            Line::A => 1,
            Line::APrime => 2,
            Line::B => 4,
            Line::BPrime => 8,
        }
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Line::A => "A",
            Line::APrime => "A'",
            Line::B => "B",
            Line::BPrime => "B'",
        })
    }
}

/// Set of engraved lines, stored as a 4-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LineSet(u8);

impl LineSet {
    pub const EMPTY: LineSet = LineSet(0);

    pub fn insert(&mut self, line: Line) {
        self.0 |= line.bit();
    }

    pub fn contains(self, line: Line) -> bool {
        self.0 & line.bit() != 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Self {
        LineSet(bits & 0x0f)
    }

    pub fn iter(self) -> impl Iterator<Item = Line> {
        Line::ALL.into_iter().filter(move |l| self.contains(*l))
    }
}

impl FromIterator<Line> for LineSet {
    fn from_iter<I: IntoIterator<Item = Line>>(iter: I) -> Self {
        let mut s = LineSet::EMPTY;
        for l in iter {
            s.insert(l);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngravedLines {
    pub a: Angle,
    pub a_prime: Angle,
    pub b: Angle,
    pub b_prime: Angle,
}

impl EngravedLines {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Result<Self> {
        Ok(EngravedLines {
            a: normalize(a)?,
            a_prime: normalize(a_prime)?,
            b: normalize(b)?,
            b_prime: normalize(b_prime)?,
        })
    }

    /// The layout `B' = 0`, `B = theta`, `A' = gamma`, `A = gamma + theta`,
    /// which requires `0 < theta < gamma` and `gamma + theta < 2π`.
    pub fn staggered(gamma: f64, theta: f64) -> Result<Self> {
        check_staggered(gamma, theta)?;
        EngravedLines::new(gamma + theta, gamma, theta, 0.0)
    }

    pub fn get(&self, line: Line) -> Angle {
        match line {
            Line::A => self.a,
            Line::APrime => self.a_prime,
            Line::B => self.b,
            Line::BPrime => self.b_prime,
        }
    }

    pub fn all(&self) -> [Angle; 4] {
        [self.a, self.a_prime, self.b, self.b_prime]
    }
}

/// Checks the staggered-layout constraints `0 < theta < gamma`, `gamma + theta < 2π`.
pub fn check_staggered(gamma: f64, theta: f64) -> Result<()> {
    if !gamma.is_finite() || !theta.is_finite() {
        return Err(Error::InvalidArgument("gamma and theta must be finite".into()));
    }
    if !(0.0 < theta && theta < gamma) {
        return Err(Error::InvalidArgument(format!(
            "staggered layout requires 0 < theta < gamma (got gamma={gamma}, theta={theta})"
        )));
    }
    if gamma + theta >= TAU {
        return Err(Error::InvalidArgument(format!(
            "staggered layout requires gamma + theta < 2π (got {})",
            gamma + theta
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StopPlacement {
    pub left: Option<Angle>,
    pub right: Option<Angle>,
}

impl StopPlacement {
    pub fn none() -> Self {
        StopPlacement::default()
    }
}

/// The eight stop arrangements used in a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    Ab,
    AbPrime,
    APrimeB,
    APrimeBPrime,
    LeftA,
    LeftAPrime,
    RightB,
    RightBPrime,
}

impl Setup {
    pub const ALL: [Setup; 8] = [
        Setup::Ab,
        Setup::AbPrime,
        Setup::APrimeB,
        Setup::APrimeBPrime,
        Setup::LeftA,
        Setup::LeftAPrime,
        Setup::RightB,
        Setup::RightBPrime,
    ];

    pub const TWO_STOP: [Setup; 4] = [Setup::Ab, Setup::AbPrime, Setup::APrimeB, Setup::APrimeBPrime];

    /// Lines carrying the left and right stop, if any.
    pub fn stop_lines(self) -> (Option<Line>, Option<Line>) {
        use Line::*;
        match self {
            Setup::Ab => (Some(A), Some(B)),
            Setup::AbPrime => (Some(A), Some(BPrime)),
            Setup::APrimeB => (Some(APrime), Some(B)),
            Setup::APrimeBPrime => (Some(APrime), Some(BPrime)),
            Setup::LeftA => (Some(A), None),
            Setup::LeftAPrime => (Some(APrime), None),
            Setup::RightB => (None, Some(B)),
            Setup::RightBPrime => (None, Some(BPrime)),
        }
    }

    pub fn is_two_stop(self) -> bool {
        let (l, r) = self.stop_lines();
        l.is_some() && r.is_some()
    }

    pub fn label(self) -> &'static str {
        match self {
            Setup::Ab => "(a,b)",
            Setup::AbPrime => "(a,b')",
            Setup::APrimeB => "(a',b)",
            Setup::APrimeBPrime => "(a',b')",
            Setup::LeftA => "a",
            Setup::LeftAPrime => "a'",
            Setup::RightB => "b",
            Setup::RightBPrime => "b'",
        }
    }

    pub fn placement(self, lines: &EngravedLines) -> StopPlacement {
        let (l, r) = self.stop_lines();
        StopPlacement {
            left: l.map(|l| lines.get(l)),
            right: r.map(|r| lines.get(r)),
        }
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One value per two-stop setting, in the order `(a,b)`, `(a,b')`, `(a',b)`, `(a',b')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerSetting<T> {
    pub ab: T,
    pub ab_prime: T,
    pub a_prime_b: T,
    pub a_prime_b_prime: T,
}

impl<T> PerSetting<T> {
    pub fn from_fn(mut f: impl FnMut(Setup) -> T) -> Self {
        PerSetting {
            ab: f(Setup::Ab),
            ab_prime: f(Setup::AbPrime),
            a_prime_b: f(Setup::APrimeB),
            a_prime_b_prime: f(Setup::APrimeBPrime),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(Setup) -> std::result::Result<T, E>) -> std::result::Result<Self, E> {
        Ok(PerSetting {
            ab: f(Setup::Ab)?,
            ab_prime: f(Setup::AbPrime)?,
            a_prime_b: f(Setup::APrimeB)?,
            a_prime_b_prime: f(Setup::APrimeBPrime)?,
        })
    }

    /// Panics if `setup` is a single-stop setup.
    pub fn get(&self, setup: Setup) -> &T {
        match setup {
            Setup::Ab => &self.ab,
            Setup::AbPrime => &self.ab_prime,
            Setup::APrimeB => &self.a_prime_b,
            Setup::APrimeBPrime => &self.a_prime_b_prime,
            s => panic!("{s} is not a two-stop setting"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Setup, &T)> {
        [
            (Setup::Ab, &self.ab),
            (Setup::AbPrime, &self.ab_prime),
            (Setup::APrimeB, &self.a_prime_b),
            (Setup::APrimeBPrime, &self.a_prime_b_prime),
        ]
        .into_iter()
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerSetting<U> {
        PerSetting {
            ab: f(&self.ab),
            ab_prime: f(&self.ab_prime),
            a_prime_b: f(&self.a_prime_b),
            a_prime_b_prime: f(&self.a_prime_b_prime),
        }
    }
}

/// One value per engraved line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerLine<T> {
    pub a: T,
    pub a_prime: T,
    pub b: T,
    pub b_prime: T,
}

impl<T> PerLine<T> {
    pub fn from_fn(mut f: impl FnMut(Line) -> T) -> Self {
        PerLine { a: f(Line::A), a_prime: f(Line::APrime), b: f(Line::B), b_prime: f(Line::BPrime) }
    }

    pub fn get(&self, line: Line) -> &T {
        match line {
            Line::A => &self.a,
            Line::APrime => &self.a_prime,
            Line::B => &self.b,
            Line::BPrime => &self.b_prime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Passive device: each body sweeps `gamma1` freely.
    Unmodified,
    /// Mutual-rotation constraint plus optional stops.
    Modified,
}

/// Raw description of a device. Turn it into an [`Apparatus`] with
/// [`ApparatusConfig::validate`] before running trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparatusConfig {
    pub mode: Mode,
    pub lines: EngravedLines,
    /// Free rotation of each body; only used in unmodified mode.
    pub gamma1: f64,
    /// Mutual-rotation budget; only used in modified mode.
    pub gamma: f64,
    pub stops: StopPlacement,
}

impl ApparatusConfig {
    pub fn unmodified(lines: EngravedLines, gamma1: f64) -> Self {
        ApparatusConfig { mode: Mode::Unmodified, lines, gamma1, gamma: 0.0, stops: StopPlacement::none() }
    }

    pub fn modified(lines: EngravedLines, gamma: f64, stops: StopPlacement) -> Self {
        ApparatusConfig { mode: Mode::Modified, lines, gamma1: 0.0, gamma, stops }
    }

    /// Modified device with stops arranged as in `setup`.
    pub fn with_setup(lines: EngravedLines, gamma: f64, setup: Setup) -> Self {
        Self::modified(lines, gamma, setup.placement(&lines))
    }

    /// Checks every invariant and reports all violations together.
    pub fn validate(self) -> Result<Apparatus> {
        let mut errs = Vec::new();
        let l = &self.lines;
        if ccw_delta(l.a, l.a_prime).min(ccw_delta(l.a_prime, l.a)) <= EPS_ANGLE {
            errs.push("lines A and A' coincide".to_string());
        }
        if ccw_delta(l.b, l.b_prime).min(ccw_delta(l.b_prime, l.b)) <= EPS_ANGLE {
            errs.push("lines B and B' coincide".to_string());
        }
        match self.mode {
            Mode::Unmodified => {
                if !(self.gamma1.is_finite() && self.gamma1 > 0.0 && self.gamma1 <= TAU) {
                    errs.push(format!("gamma1 must lie in (0, 2π], got {}", self.gamma1));
                }
                if self.stops.left.is_some() || self.stops.right.is_some() {
                    errs.push("stops are only allowed in modified mode".to_string());
                }
            }
            Mode::Modified => {
                if !(self.gamma.is_finite() && self.gamma > 0.0 && self.gamma < TAU) {
                    errs.push(format!("gamma must lie in (0, 2π), got {}", self.gamma));
                }
                if let Some(s) = self.stops.left {
                    if !(same_angle(s, l.a) || same_angle(s, l.a_prime)) {
                        errs.push(format!("left stop {} is not at A or A'", s.radians()));
                    }
                }
                if let Some(s) = self.stops.right {
                    if !(same_angle(s, l.b) || same_angle(s, l.b_prime)) {
                        errs.push(format!("right stop {} is not at B or B'", s.radians()));
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(Apparatus(self))
        } else {
            Err(Error::InvalidConfig(errs))
        }
    }
}

fn same_angle(x: Angle, y: Angle) -> bool {
    ccw_delta(x, y).min(ccw_delta(y, x)) <= EPS_ANGLE
}

/// A validated device description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Apparatus(ApparatusConfig);

impl Apparatus {
    pub fn config(&self) -> &ApparatusConfig {
        &self.0
    }

    pub fn mode(&self) -> Mode {
        self.0.mode
    }

    pub fn lines(&self) -> &EngravedLines {
        &self.0.lines
    }

    pub fn stops(&self) -> &StopPlacement {
        &self.0.stops
    }

    /// Rotation parameters relevant to this mode (`gamma` or `gamma1`).
    pub fn rotation_scales(&self) -> Vec<f64> {
        match self.0.mode {
            Mode::Unmodified => vec![self.0.gamma1],
            Mode::Modified => vec![self.0.gamma],
        }
    }

    pub fn run_trial(&self, phi: Angle) -> TrialOutcome {
        run_trial(self, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockCause {
    Stop,
    MutualConstraint,
    FreeRotationEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// Counterclockwise rotation of body 1.
    pub r1: f64,
    /// Clockwise rotation of body 2.
    pub r2: f64,
    pub blocked1: BlockCause,
    pub blocked2: BlockCause,
    pub reached_left_stop: bool,
    pub reached_right_stop: bool,
    pub crossed: LineSet,
}

/// Resolves one trial with the marks starting together at `phi`.
pub fn run_trial(app: &Apparatus, phi: Angle) -> TrialOutcome {
    let cfg = app.config();
    let (r1, r2, blocked1, blocked2, reached_left, reached_right) = match cfg.mode {
        Mode::Unmodified => {
            (cfg.gamma1, cfg.gamma1, BlockCause::FreeRotationEnd, BlockCause::FreeRotationEnd, false, false)
        }
        Mode::Modified => {
            let gamma = cfg.gamma;
            let half = gamma / 2.0;
            let d1 = cfg.stops.left.map_or(f64::INFINITY, |s| ccw_delta(phi, s));
            let d2 = cfg.stops.right.map_or(f64::INFINITY, |s| ccw_delta(s, phi));
            if d1 > half + EPS_ANGLE && d2 > half + EPS_ANGLE {
                (half, half, BlockCause::MutualConstraint, BlockCause::MutualConstraint, false, false)
            } else if d1 <= d2 {
                // body 1 freezes first; body 2 may spend the rest of the budget
                let rest = gamma - d1;
                if d2 <= rest + EPS_ANGLE {
                    (d1, d2, BlockCause::Stop, BlockCause::Stop, true, true)
                } else {
                    (d1, rest, BlockCause::Stop, BlockCause::MutualConstraint, true, false)
                }
            } else {
                let rest = gamma - d2;
                if d1 <= rest + EPS_ANGLE {
                    (d1, d2, BlockCause::Stop, BlockCause::Stop, true, true)
                } else {
                    (rest, d2, BlockCause::MutualConstraint, BlockCause::Stop, false, true)
                }
            }
        }
    };

    let lines = &cfg.lines;
    let crossed = Line::ALL
        .into_iter()
        .filter(|&l| {
            if l.is_left() {
                ccw_delta(phi, lines.get(l)) <= r1 + EPS_ANGLE
            } else {
                ccw_delta(lines.get(l), phi) <= r2 + EPS_ANGLE
            }
        })
        .collect();

    TrialOutcome { r1, r2, blocked1, blocked2, reached_left_stop: reached_left, reached_right_stop: reached_right, crossed }
}

/// Which of the four lines a trial crossed.
pub fn crossed_events(outcome: &TrialOutcome) -> PerLine<bool> {
    PerLine::from_fn(|l| outcome.crossed.contains(l))
}
