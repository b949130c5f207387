//! Does a four-setting behavior admit a single joint distribution?
//!
//! For two parties with two settings and two outcomes each, a behavior has
//! a joint distribution over the four outcomes exactly when it is a convex
//! mixture of the 16 deterministic strategies. That is checked directly as
//! a linear feasibility problem and, independently, with the eight CH-type
//! inequalities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::apparatus::{PerSetting, Setup};
use crate::error::{Error, Result};
use crate::exact::{ConditionalTable, OutcomeTable};
use crate::simplex;

pub const DEFAULT_TOL: f64 = 1e-9;

/// One 2×2 outcome table per two-stop setting; outcome 1 is "event happened".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BehaviorTable(PerSetting<OutcomeTable>);

impl BehaviorTable {
    pub fn new(tables: PerSetting<OutcomeTable>) -> Result<Self> {
        for (setup, t) in tables.iter() {
            if t.cells().iter().any(|c| !(-1e-12..=1.0 + 1e-12).contains(c)) {
                return Err(Error::InvalidArgument(format!("{setup}: entries must lie in [0,1]")));
            }
            if (t.total() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("{setup}: entries sum to {}", t.total())));
            }
        }
        Ok(BehaviorTable(tables))
    }

    pub fn from_conditionals(t: &ConditionalTable) -> Result<Self> {
        Self::new(t.full_tables)
    }

    pub fn tables(&self) -> &PerSetting<OutcomeTable> {
        &self.0
    }

    /// The 16 entries, setting-major in the order `(a,b), (a,b'), (a',b), (a',b')`.
    pub fn entries(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (k, (_, t)) in self.0.iter().enumerate() {
            out[4 * k..4 * k + 4].copy_from_slice(&t.cells());
        }
        out
    }

    /// Convex combination `(1 − lambda)·self + lambda·other`.
    pub fn mix(&self, other: &BehaviorTable, lambda: f64) -> Result<Self> {
        let a = self.entries();
        let b = other.entries();
        let mut c = [0.0; 16];
        for i in 0..16 {
            c[i] = (1.0 - lambda) * a[i] + lambda * b[i];
        }
        Self::from_entries(c)
    }

    pub fn from_entries(e: [f64; 16]) -> Result<Self> {
        let cell = |k: usize| OutcomeTable::from_cells([e[4 * k], e[4 * k + 1], e[4 * k + 2], e[4 * k + 3]]);
        Self::new(PerSetting { ab: cell(0), ab_prime: cell(1), a_prime_b: cell(2), a_prime_b_prime: cell(3) })
    }

    /// Probability that the left party's event happens at its setting in
    /// `setup`, averaged over the right party's two settings.
    fn left_marginal(&self, primed: bool) -> f64 {
        let t = &self.0;
        if primed {
            (t.a_prime_b.left_marginal() + t.a_prime_b_prime.left_marginal()) / 2.0
        } else {
            (t.ab.left_marginal() + t.ab_prime.left_marginal()) / 2.0
        }
    }

    fn right_marginal(&self, primed: bool) -> f64 {
        let t = &self.0;
        if primed {
            (t.ab_prime.right_marginal() + t.a_prime_b_prime.right_marginal()) / 2.0
        } else {
            (t.ab.right_marginal() + t.a_prime_b.right_marginal()) / 2.0
        }
    }
}

/// Predetermined outcomes for `A`, `A'`, `B`, `B'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub a: bool,
    pub a_prime: bool,
    pub b: bool,
    pub b_prime: bool,
}

impl DeterministicStrategy {
    /// Strategy number `k` in binary counting on `(A, A', B, B')`, `A` most significant.
    pub fn from_index(k: usize) -> Self {
        DeterministicStrategy { a: k & 8 != 0, a_prime: k & 4 != 0, b: k & 2 != 0, b_prime: k & 1 != 0 }
    }

    pub fn outcomes(&self, setup: Setup) -> (bool, bool) {
        match setup {
            Setup::Ab => (self.a, self.b),
            Setup::AbPrime => (self.a, self.b_prime),
            Setup::APrimeB => (self.a_prime, self.b),
            Setup::APrimeBPrime => (self.a_prime, self.b_prime),
            s => panic!("{s} is not a two-stop setting"),
        }
    }

    pub fn table(&self) -> BehaviorTable {
        BehaviorTable(PerSetting::from_fn(|s| {
            let mut cells = [0.0; 4];
            cells[cell_index(self.outcomes(s))] = 1.0;
            OutcomeTable::from_cells(cells)
        }))
    }
}

fn cell_index((left, right): (bool, bool)) -> usize {
    match (left, right) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    }
}

pub fn enumerate_strategies() -> Vec<DeterministicStrategy> {
    (0..16).map(DeterministicStrategy::from_index).collect()
}

/// Largest change in one party's marginal caused by switching the other
/// party's setting.
pub fn no_signaling_deviation(t: &BehaviorTable) -> f64 {
    let s = t.tables();
    [
        (s.ab.left_marginal() - s.ab_prime.left_marginal()).abs(),
        (s.a_prime_b.left_marginal() - s.a_prime_b_prime.left_marginal()).abs(),
        (s.ab.right_marginal() - s.a_prime_b.right_marginal()).abs(),
        (s.ab_prime.right_marginal() - s.a_prime_b_prime.right_marginal()).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Smallest achievable sum of absolute entry residuals.
    pub l1_residual: f64,
    /// Largest entry residual of the returned weights.
    pub max_residual: f64,
    /// Weights over [`enumerate_strategies`], present when feasible.
    pub witness: Option<Vec<f64>>,
}

/// Searches for nonnegative weights on the 16 strategies reproducing `t`.
///
/// Minimizes the total absolute residual over all 16 entries plus the
/// normalization row; the table is feasible when that minimum is at most
/// `tol`.
pub fn feasible_joint(t: &BehaviorTable, tol: f64) -> Result<Feasibility> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be nonnegative, got {tol}")));
    }
    let target = t.entries();
    let strategies: Vec<[f64; 16]> = enumerate_strategies().iter().map(|s| s.table().entries()).collect();

    // columns: 16 weights, 17 positive residuals, 17 negative residuals
    let rows = 17;
    let n = 16 + 2 * rows;
    let mut a = vec![vec![0.0; n]; rows];
    let mut b = vec![0.0; rows];
    let mut basis = vec![0; rows];
    for i in 0..rows {
        let rhs = if i < 16 { target[i] } else { 1.0 };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for (k, strat) in strategies.iter().enumerate() {
            a[i][k] = sign * if i < 16 { strat[i] } else { 1.0 };
        }
        a[i][16 + i] = sign;
        a[i][16 + rows + i] = -sign;
        b[i] = sign * rhs;
        basis[i] = if sign > 0.0 { 16 + i } else { 16 + rows + i };
    }
    let mut c = vec![0.0; n];
    for v in c.iter_mut().skip(16) {
        *v = 1.0;
    }

    let sol = simplex::minimize(&a, &b, &c, &basis)?;
    let l1_residual = sol.objective;
    let mut weights: Vec<f64> = sol.x[..16].to_vec();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    let max_residual = witness_error(t, &weights);
    let feasible = l1_residual <= tol;
    Ok(Feasibility { feasible, l1_residual, max_residual, witness: feasible.then_some(weights) })
}

/// Largest absolute difference between `t` and the mixture `weights`.
pub fn witness_error(t: &BehaviorTable, weights: &[f64]) -> f64 {
    let target = t.entries();
    let mut mix = [0.0; 16];
    for (w, s) in weights.iter().zip(enumerate_strategies()) {
        for (m, e) in mix.iter_mut().zip(s.table().entries()) {
            *m += w * e;
        }
    }
    mix.iter().zip(target).map(|(m, t)| (m - t).abs()).fold(0.0, f64::max)
}

/// One member of the CH family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryEntry {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChBattery {
    pub entries: Vec<BatteryEntry>,
    pub max_value: f64,
    pub min_value: f64,
    pub passes: bool,
}

/// Evaluates `p(x,y) − p(x,y') + p(x',y) + p(x',y') − p(x') − p(y)` for
/// every role assignment: left settings swapped or not, right settings
/// swapped or not, and left outcomes relabeled or not. All eight values lie
/// in `[−1, 0]` for a behavior with a joint distribution.
pub fn ch_battery(t: &BehaviorTable, tol: f64) -> ChBattery {
    let tabs = t.tables();
    let mut entries = Vec::with_capacity(8);
    for swap_left in [false, true] {
        for swap_right in [false, true] {
            for flip_left in [false, true] {
                // joint of "left event (possibly relabeled) and right event"
                let joint = |left_primed: bool, right_primed: bool| {
                    let setup = match (left_primed ^ swap_left, right_primed ^ swap_right) {
                        (false, false) => Setup::Ab,
                        (false, true) => Setup::AbPrime,
                        (true, false) => Setup::APrimeB,
                        (true, true) => Setup::APrimeBPrime,
                    };
                    let c = tabs.get(setup);
                    if flip_left {
                        c.p01
                    } else {
                        c.p11
                    }
                };
                let left = |primed: bool| {
                    let m = t.left_marginal(primed ^ swap_left);
                    if flip_left {
                        1.0 - m
                    } else {
                        m
                    }
                };
                let right = |primed: bool| t.right_marginal(primed ^ swap_right);
                let value =
                    joint(false, false) - joint(false, true) + joint(true, false) + joint(true, true) - left(true) - right(false);
                let label = format!(
                    "{}{}{}",
                    if swap_left { "A<->A'" } else { "A" },
                    if swap_right { ",B<->B'" } else { ",B" },
                    if flip_left { ",left relabeled" } else { "" }
                );
                entries.push(BatteryEntry { label, value });
            }
        }
    }
    let max_value = entries.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    let min_value = entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let passes = max_value <= tol && min_value >= -1.0 - tol;
    ChBattery { entries, max_value, min_value, passes }
}

/// Extremal no-signaling box: outcomes perfectly correlated for
/// `(a,b)`, `(a,b')`, `(a',b)`, anticorrelated for `(a',b')`, marginals 1/2.
pub fn pr_box() -> BehaviorTable {
    let corr = OutcomeTable { p11: 0.5, p10: 0.0, p01: 0.0, p00: 0.5 };
    let anti = OutcomeTable { p11: 0.0, p10: 0.5, p01: 0.5, p00: 0.0 };
    BehaviorTable(PerSetting { ab: corr, ab_prime: corr, a_prime_b: corr, a_prime_b_prime: anti })
}

/// Measurement directions for [`singlet_table`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingletAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl Default for SingletAngles {
    /// Directions maximizing the first CH expression.
    fn default() -> Self {
        SingletAngles { a: 0.0, a_prime: 3.0 * PI / 2.0, b: 3.0 * PI / 4.0, b_prime: PI / 4.0 }
    }
}

/// Demo behavior with uniform marginals and `p(1,1) = ½ sin²((α − β)/2)`.
/// Not derived from the apparatus; it exists to exercise the battery on a
/// no-signaling table with no joint distribution.
pub fn singlet_table(angles: SingletAngles) -> BehaviorTable {
    let cell = |alpha: f64, beta: f64| {
        let p11 = 0.5 * ((alpha - beta) / 2.0).sin().powi(2);
        OutcomeTable { p11, p10: 0.5 - p11, p01: 0.5 - p11, p00: p11 }
    };
    BehaviorTable(PerSetting {
        ab: cell(angles.a, angles.b),
        ab_prime: cell(angles.a, angles.b_prime),
        a_prime_b: cell(angles.a_prime, angles.b),
        a_prime_b_prime: cell(angles.a_prime, angles.b_prime),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::closed_form_staggered;

    #[test]
    fn strategy_enumeration() {
        let s = enumerate_strategies();
        assert_eq!(s.len(), 16);
        assert_eq!(s[0], DeterministicStrategy { a: false, a_prime: false, b: false, b_prime: false });
        assert_eq!(s[1], DeterministicStrategy { a: false, a_prime: false, b: false, b_prime: true });
        assert!(s[8].a);
        for st in &s {
            for (_, t) in st.table().tables().iter() {
                assert_eq!(t.cells().iter().filter(|&&c| c == 1.0).count(), 1);
            }
        }
    }

    #[test]
    fn strategies_do_not_signal_and_pass_battery() {
        for st in enumerate_strategies() {
            let t = st.table();
            assert_eq!(no_signaling_deviation(&t), 0.0);
            assert!(ch_battery(&t, DEFAULT_TOL).passes);
        }
    }

    #[test]
    fn point_mass_witness() {
        let st = DeterministicStrategy::from_index(11);
        let f = feasible_joint(&st.table(), DEFAULT_TOL).unwrap();
        assert!(f.feasible);
        let w = f.witness.unwrap();
        assert!((w[11] - 1.0).abs() < 1e-12);
        assert!(f.max_residual < 1e-12);
    }

    #[test]
    fn staggered_tables_signal() {
        let t = BehaviorTable::from_conditionals(&closed_form_staggered(PI / 3.0, PI / 6.0).unwrap()).unwrap();
        assert!(no_signaling_deviation(&t) >= 1.0 / 12.0 - 1e-12);
        assert!(!feasible_joint(&t, DEFAULT_TOL).unwrap().feasible);
    }

    #[test]
    fn pr_box_is_infeasible() {
        let pr = pr_box();
        assert_eq!(no_signaling_deviation(&pr), 0.0);
        let b = ch_battery(&pr, DEFAULT_TOL);
        assert!((b.max_value - 0.5).abs() < 1e-12);
        assert!(!b.passes);
        let f = feasible_joint(&pr, DEFAULT_TOL).unwrap();
        assert!(!f.feasible && f.witness.is_none());
    }

    #[test]
    fn singlet_violates_by_the_known_margin() {
        let t = singlet_table(SingletAngles::default());
        assert!(no_signaling_deviation(&t) < 1e-15);
        let b = ch_battery(&t, DEFAULT_TOL);
        assert!((b.max_value - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-12, "{}", b.max_value);
        assert!(!feasible_joint(&t, DEFAULT_TOL).unwrap().feasible);
    }

    #[test]
    fn rejects_unnormalized() {
        let bad = OutcomeTable { p11: 0.5, p10: 0.5, p01: 0.5, p00: 0.0 };
        assert!(BehaviorTable::new(PerSetting { ab: bad, ab_prime: bad, a_prime_b: bad, a_prime_b_prime: bad }).is_err());
        assert!(feasible_joint(&pr_box(), -1.0).is_err());
    }
}
