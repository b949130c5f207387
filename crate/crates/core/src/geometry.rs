//! Angles, directed arcs and arc partitions on the unit circle.
//!
//! Every probability in this crate is the normalized measure of a set of
//! start angles, so everything downstream is built on these few helpers.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when classifying a point as lying on an arc boundary.
pub const EPS_ANGLE: f64 = 1e-12;

/// An angle in radians, normalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Normalizes `x` into `[0, 2π)`.
    pub fn new(x: f64) -> Result<Self> {
        normalize(x)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// `self + delta`, renormalized.
    pub fn offset(self, delta: f64) -> Self {
        normalize(self.0 + delta).expect("finite angle offset by finite delta")
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

/// Reduces `x` modulo 2π into `[0, 2π)`.
pub fn normalize(x: f64) -> Result<Angle> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("angle must be finite, got {x}")));
    }
    let mut r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        r = 0.0;
    }
    Ok(Angle(r))
}

/// Counterclockwise rotation needed to carry `from` onto `to`, in `[0, 2π)`.
///
/// The clockwise distance from `a` to `b` is `ccw_delta(b, a)`.
pub fn ccw_delta(from: Angle, to: Angle) -> f64 {
    let d = to.0 - from.0;
    if d >= 0.0 {
        d
    } else {
        let r = d + TAU;
        if r >= TAU {
            0.0
        } else {
            r
        }
    }
}

/// A closed arc swept counterclockwise from `start` through `extent` radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: Angle,
    pub extent: f64,
}

impl Arc {
    pub fn new(start: Angle, extent: f64) -> Result<Self> {
        if !(0.0..=TAU).contains(&extent) {
            return Err(Error::InvalidArgument(format!(
                "arc extent must lie in [0, 2π], got {extent}"
            )));
        }
        Ok(Arc { start, extent })
    }

    pub fn full() -> Self {
        Arc { start: Angle::ZERO, extent: TAU }
    }

    /// Point at fraction `t ∈ [0, 1]` along the arc.
    pub fn point_at(&self, t: f64) -> Angle {
        self.start.offset(self.extent * t)
    }

    pub fn contains(&self, x: Angle) -> bool {
        arc_contains(self, x)
    }
}

/// Closed-arc membership with inclusive boundaries.
pub fn arc_contains(arc: &Arc, x: Angle) -> bool {
    if arc.extent >= TAU {
        return true;
    }
    let d = ccw_delta(arc.start, x);
    // the start point may come back as 2π − tiny
    d <= arc.extent + EPS_ANGLE || TAU - d <= EPS_ANGLE
}

/// Splits the circle at the given critical angles.
///
/// Angles closer than [`EPS_ANGLE`] (including across the 0/2π seam) are
/// merged. The returned arcs are listed counterclockwise from the smallest
/// critical angle and their extents sum to 2π.
pub fn partition_circle(critical: &[Angle]) -> Vec<Arc> {
    let mut pts: Vec<f64> = critical.iter().map(|a| a.0).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| *b - *a <= EPS_ANGLE);
    if pts.len() > 1 && pts[0] + TAU - pts[pts.len() - 1] <= EPS_ANGLE {
        pts.pop();
    }
    match pts.len() {
        0 => vec![Arc::full()],
        1 => vec![Arc { start: Angle(pts[0]), extent: TAU }],
        n => {
            let mut arcs = Vec::with_capacity(n);
            for w in pts.windows(2) {
                arcs.push(Arc { start: Angle(w[0]), extent: w[1] - w[0] });
            }
            arcs.push(Arc { start: Angle(pts[n - 1]), extent: pts[0] + TAU - pts[n - 1] });
            arcs
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ang(x: f64) -> Angle {
        normalize(x).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(ang(0.0).radians(), 0.0);
        assert_abs_diff_eq!(ang(5.0 * PI / 2.0).radians(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ang(-PI / 6.0).radians(), 11.0 * PI / 6.0, epsilon = 1e-15);
        assert!(normalize(f64::NAN).is_err());
        assert!(normalize(f64::INFINITY).is_err());
        assert!(ang(-1e-300).radians() < TAU);
    }

    #[test]
    fn ccw_delta_examples() {
        assert_abs_diff_eq!(ccw_delta(ang(PI / 4.0), ang(PI / 2.0)), PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ccw_delta(ang(PI / 2.0), ang(PI / 4.0)), 7.0 * PI / 4.0, epsilon = 1e-15);
        assert_eq!(ccw_delta(ang(1.3), ang(1.3)), 0.0);
    }

    #[test]
    fn arc_contains_examples() {
        let arc = Arc::new(ang(PI / 6.0), PI / 3.0).unwrap();
        assert!(arc_contains(&arc, ang(PI / 4.0)));
        assert!(!arc_contains(&arc, ang(PI)));
        assert!(arc_contains(&arc, ang(PI / 6.0)));
        assert!(arc_contains(&arc, ang(PI / 2.0)));
        let full = Arc::new(ang(2.0), TAU).unwrap();
        assert!(arc_contains(&full, ang(5.0)));
        assert!(Arc::new(ang(0.0), 7.0).is_err());
    }

    #[test]
    fn partition_examples() {
        let arcs = partition_circle(&[ang(0.0), ang(PI / 2.0)]);
        assert_eq!(arcs.len(), 2);
        assert_eq!(arcs[0].start.radians(), 0.0);
        assert_abs_diff_eq!(arcs[0].extent, PI / 2.0);
        assert_abs_diff_eq!(arcs[1].extent, 3.0 * PI / 2.0);

        let arcs = partition_circle(&[]);
        assert_eq!(arcs.len(), 1);
        assert_eq!(arcs[0].extent, TAU);

        let arcs = partition_circle(&[ang(PI / 6.0), ang(PI / 6.0), ang(PI / 2.0)]);
        assert_eq!(arcs.len(), 2);
    }

    #[test]
    fn partition_merges_across_seam() {
        let arcs = partition_circle(&[ang(0.0), ang(TAU - 1e-14), ang(1.0)]);
        assert_eq!(arcs.len(), 2);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(x in -100.0f64..100.0) {
            let a = ang(x);
            prop_assert!(a.radians() >= 0.0 && a.radians() < TAU);
            prop_assert_eq!(ang(a.radians()), a);
        }

        #[test]
        fn ccw_deltas_sum_to_zero_or_full_turn(x in 0.0f64..TAU, y in 0.0f64..TAU) {
            let (x, y) = (ang(x), ang(y));
            let s = ccw_delta(x, y) + ccw_delta(y, x);
            prop_assert!(s == 0.0 || (s - TAU).abs() < 1e-12, "sum {}", s);
        }

        #[test]
        fn containment_is_periodic(start in 0.0f64..TAU, ext in 0.0f64..TAU, x in 0.0f64..TAU) {
            let arc = Arc::new(ang(start), ext).unwrap();
            prop_assert_eq!(arc_contains(&arc, ang(x)), arc_contains(&arc, ang(x + TAU)));
        }

        #[test]
        fn partition_covers_circle(pts in proptest::collection::vec(0.0f64..TAU, 0..40)) {
            let angles: Vec<Angle> = pts.iter().map(|&p| ang(p)).collect();
            let arcs = partition_circle(&angles);
            let total: f64 = arcs.iter().map(|a| a.extent).sum();
            prop_assert!((total - TAU).abs() < 1e-12);
            for w in arcs.windows(2) {
                prop_assert!(w[0].start.radians() < w[1].start.radians());
                prop_assert!(w[0].extent > 0.0);
            }
        }
    }
}
