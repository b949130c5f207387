//! Exact event probabilities under a uniform start angle.
//!
//! An event's probability is the measure of the start angles for which the
//! trial outcome satisfies it, divided by 2π. Outcomes are piecewise
//! constant in the start angle, so the circle is cut at every angle where
//! something could change and each piece is classified by sampling it.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc as Shared;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apparatus::{
    check_staggered, run_trial, Apparatus, ApparatusConfig, EngravedLines, Line, PerLine, PerSetting, Setup,
    TrialOutcome,
};
use crate::analysis::ProbabilitySet;
use crate::error::{Error, Result};
use crate::geometry::{partition_circle, Angle};

/// Arcs narrower than this are classified by their midpoint alone; the
/// inclusive boundary tolerance makes interior sampling ambiguous there.
const MIN_CHECKED_EXTENT: f64 = 1e-9;

/// A named boolean function of a trial outcome.
#[derive(Clone)]
pub struct EventPredicate {
    name: String,
    test: Shared<dyn Fn(&TrialOutcome) -> bool + Send + Sync>,
}

impl EventPredicate {
    pub fn new(name: impl Into<String>, test: impl Fn(&TrialOutcome) -> bool + Send + Sync + 'static) -> Self {
        EventPredicate { name: name.into(), test: Shared::new(test) }
    }

    pub fn crossed(line: Line) -> Self {
        Self::new(line.to_string(), move |o| o.crossed.contains(line))
    }

    pub fn reached_left() -> Self {
        Self::new("left stop", |o| o.reached_left_stop)
    }

    pub fn reached_right() -> Self {
        Self::new("right stop", |o| o.reached_right_stop)
    }

    pub fn always() -> Self {
        Self::new("true", |_| true)
    }

    pub fn never() -> Self {
        Self::new("false", |_| false)
    }

    pub fn and(&self, other: &EventPredicate) -> Self {
        let (a, b) = (self.test.clone(), other.test.clone());
        Self::new(format!("{}∧{}", self.name, other.name), move |o| a(o) && b(o))
    }

    pub fn or(&self, other: &EventPredicate) -> Self {
        let (a, b) = (self.test.clone(), other.test.clone());
        Self::new(format!("({}∨{})", self.name, other.name), move |o| a(o) || b(o))
    }

    pub fn not(&self) -> Self {
        let a = self.test.clone();
        Self::new(format!("¬{}", self.name), move |o| !a(o))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, outcome: &TrialOutcome) -> bool {
        (self.test)(outcome)
    }
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("EventPredicate").field(&self.name).finish()
    }
}

/// Every angle where a trial outcome can change: lines and stops, each
/// shifted by 0, ±s and ±s/2 for the active rotation scale s.
pub fn critical_angles(app: &Apparatus) -> Vec<Angle> {
    let mut base: Vec<Angle> = app.lines().all().to_vec();
    base.extend(app.stops().left);
    base.extend(app.stops().right);
    let mut shifts = vec![0.0];
    for s in app.rotation_scales() {
        shifts.extend([s, -s, s / 2.0, -s / 2.0]);
    }
    base.iter().flat_map(|&a| shifts.iter().map(move |&d| a.offset(d))).collect()
}

/// Probability of `event` under a uniform start angle.
///
/// Fails with [`Error::Consistency`] if the event is not constant on some
/// piece of the partition, which would mean the critical-angle set is
/// incomplete.
pub fn event_probability(app: &Apparatus, event: &EventPredicate) -> Result<f64> {
    let arcs = partition_circle(&critical_angles(app));
    let mut measure = 0.0;
    for arc in &arcs {
        let mid = event.eval(&run_trial(app, arc.point_at(0.5)));
        if arc.extent > MIN_CHECKED_EXTENT {
            for t in [0.25, 0.75] {
                if event.eval(&run_trial(app, arc.point_at(t))) != mid {
                    return Err(Error::Consistency(format!(
                        "event {} not constant on arc starting at {} with extent {}",
                        event.name(),
                        arc.start.radians(),
                        arc.extent
                    )));
                }
            }
        }
        if mid {
            measure += arc.extent;
        }
    }
    // arc extents can sum a few ulps past the full circle
    Ok((measure / TAU).clamp(0.0, 1.0))
}

/// Outcome distribution over (left event, right event).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeTable {
    /// Both events.
    pub p11: f64,
    /// Left only.
    pub p10: f64,
    /// Right only.
    pub p01: f64,
    /// Neither.
    pub p00: f64,
}

impl OutcomeTable {
    pub fn cells(&self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }

    pub fn from_cells(c: [f64; 4]) -> Self {
        OutcomeTable { p11: c[0], p10: c[1], p01: c[2], p00: c[3] }
    }

    pub fn total(&self) -> f64 {
        self.cells().iter().sum()
    }

    pub fn left_marginal(&self) -> f64 {
        self.p11 + self.p10
    }

    pub fn right_marginal(&self) -> f64 {
        self.p11 + self.p01
    }
}

/// Full 2×2 table of stop-reach events for a device with both stops placed.
pub fn joint_probability_table(app: &Apparatus) -> Result<OutcomeTable> {
    if app.stops().left.is_none() || app.stops().right.is_none() {
        return Err(Error::InvalidArgument("joint table needs both stops placed".into()));
    }
    let l = EventPredicate::reached_left();
    let r = EventPredicate::reached_right();
    Ok(OutcomeTable {
        p11: event_probability(app, &l.and(&r))?,
        p10: event_probability(app, &l.and(&r.not()))?,
        p01: event_probability(app, &l.not().and(&r))?,
        p00: event_probability(app, &l.not().and(&r.not()))?,
    })
}

/// Conditional probabilities per stop setup.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionalTable {
    /// Both marks reach their stops, per two-stop setting.
    pub joint: PerSetting<f64>,
    /// The mark reaches the single active stop.
    pub singles: PerLine<f64>,
    pub full_tables: PerSetting<OutcomeTable>,
}

impl ConditionalTable {
    pub fn zero() -> Self {
        ConditionalTable::default()
    }

    /// Flat list of the eight headline entries: four joints then four singles.
    pub fn entries(&self) -> [f64; 8] {
        let j = &self.joint;
        let s = &self.singles;
        [j.ab, j.ab_prime, j.a_prime_b, j.a_prime_b_prime, s.a, s.a_prime, s.b, s.b_prime]
    }
}

/// Single-stop setup carrying a stop on `line`.
pub fn single_setup(line: Line) -> Setup {
    match line {
        Line::A => Setup::LeftA,
        Line::APrime => Setup::LeftAPrime,
        Line::B => Setup::RightB,
        Line::BPrime => Setup::RightBPrime,
    }
}

/// All conditionals for a modified device with the given lines, computed by
/// arc partition.
pub fn exact_conditional_table(lines: &EngravedLines, gamma: f64) -> Result<ConditionalTable> {
    let full_tables = PerSetting::try_from_fn(|s| {
        let app = ApparatusConfig::with_setup(*lines, gamma, s).validate()?;
        joint_probability_table(&app)
    })?;
    let singles = [Line::A, Line::APrime, Line::B, Line::BPrime].map(|line| -> Result<f64> {
        let app = ApparatusConfig::with_setup(*lines, gamma, single_setup(line)).validate()?;
        event_probability(&app, &EventPredicate::crossed(line))
    });
    let [a, a_prime, b, b_prime] = singles;
    Ok(ConditionalTable {
        joint: full_tables.map(|t| t.p11),
        singles: PerLine { a: a?, a_prime: a_prime?, b: b?, b_prime: b_prime? },
        full_tables,
    })
}

/// Closed-form conditionals for the staggered layout
/// (`B' = 0`, `B = theta`, `A' = gamma`, `A = gamma + theta`).
pub fn closed_form_staggered(gamma: f64, theta: f64) -> Result<ConditionalTable> {
    check_staggered(gamma, theta)?;
    let joint_full = gamma / TAU;
    let single = gamma / (2.0 * TAU);
    let near = (gamma - theta) / TAU;
    // (a',b): stops gamma − theta apart; a lone reach needs theta > gamma/2
    let lone = (theta - gamma / 2.0).max(0.0) / TAU;

    let separated = OutcomeTable { p11: joint_full, p10: 0.0, p01: 0.0, p00: 1.0 - joint_full };
    let full_tables = PerSetting {
        ab: separated,
        ab_prime: OutcomeTable { p11: 0.0, p10: single, p01: single, p00: 1.0 - 2.0 * single },
        a_prime_b: OutcomeTable { p11: near, p10: lone, p01: lone, p00: 1.0 - near - 2.0 * lone },
        a_prime_b_prime: separated,
    };
    Ok(ConditionalTable {
        joint: full_tables.map(|t| t.p11),
        singles: PerLine { a: single, a_prime: single, b: single, b_prime: single },
        full_tables,
    })
}

/// Crossing probabilities of one device, every event measured on the
/// same start-angle distribution: `p(X,Y) = P(X and Y crossed)`,
/// `p(X) = P(X crossed)`.
pub fn single_system_probabilities(app: &Apparatus) -> Result<ProbabilitySet> {
    let c = |l: Line| EventPredicate::crossed(l);
    let both = |l: Line, r: Line| event_probability(app, &c(l).and(&c(r)));
    Ok(ProbabilitySet {
        joint: PerSetting {
            ab: both(Line::A, Line::B)?,
            ab_prime: both(Line::A, Line::BPrime)?,
            a_prime_b: both(Line::APrime, Line::B)?,
            a_prime_b_prime: both(Line::APrime, Line::BPrime)?,
        },
        single: PerLine {
            a: event_probability(app, &c(Line::A))?,
            a_prime: event_probability(app, &c(Line::APrime))?,
            b: event_probability(app, &c(Line::B))?,
            b_prime: event_probability(app, &c(Line::BPrime))?,
        },
    })
}

/// Midpoint-grid brute force: fraction of `m` evenly spaced start angles
/// (offset by half a step) for which `event` holds.
pub fn grid_oracle(app: &Apparatus, event: &EventPredicate, m: usize) -> f64 {
    assert!(m >= 1, "grid needs at least one point");
    let step = TAU / m as f64;
    let hits: usize = (0..m)
        .into_par_iter()
        .filter(|&k| {
            let phi = Angle::new(step * k as f64 + step / 2.0).expect("finite");
            event.eval(&run_trial(app, phi))
        })
        .count();
    hits as f64 / m as f64
}
