//! Small dense-tableau simplex for linear feasibility problems.
//!
//! Problems here have a few dozen rows and columns, so a plain tableau with
//! Bland's pivoting rule is plenty and never cycles.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0`, starting from `basis`.
///
/// `basis[i]` must name a column of `a` equal to the i-th unit vector and
/// `b` must be nonnegative, so the starting point `x_B = b` is feasible.
/// Costs must keep the objective bounded below.
pub fn minimize(a: &[Vec<f64>], b: &[f64], c: &[f64], basis: &[usize]) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || basis.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("inconsistent LP dimensions".into()));
    }
    if b.iter().any(|&v| v.is_nan() || v < 0.0) {
        return Err(Error::InvalidArgument("right-hand side must be nonnegative".into()));
    }

    let mut tab: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let mut basis = basis.to_vec();

    let mut pivots = 0;
    loop {
        // reduced costs r_j = c_j − c_B · column_j
        let entering = (0..n).find(|&j| {
            let rj = c[j] - (0..m).map(|i| c[basis[i]] * tab[i][j]).sum::<f64>();
            rj < -PIVOT_EPS
        });
        let Some(col) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = tab[i][col];
            if coef > PIVOT_EPS {
                let ratio = tab[i][n] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && basis[i] < basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::Consistency("linear program is unbounded".into()));
        };

        pivot(&mut tab, row, col);
        basis[row] = col;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::Consistency("simplex pivot limit exceeded".into()));
        }
    }

    let mut x = vec![0.0; n];
    for (i, &j) in basis.iter().enumerate() {
        x[j] = tab[i][n].max(0.0);
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective, pivots })
}

fn pivot(tab: &mut [Vec<f64>], row: usize, col: usize) {
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = tab[row].clone();
    for (i, r) in tab.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
}

/// Phase one: looks for `x ≥ 0` with `A x = b` by minimizing the sum of
/// one artificial variable per row. Returns the original variables and
/// the remaining infeasibility (zero, up to rounding, iff feasible).
pub fn phase_one(a: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, (row, &bi)) in a.iter().zip(b).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut r: Vec<f64> = row.iter().map(|v| v * sign).collect();
        r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        rows.push(r);
        rhs.push(bi * sign);
    }
    let mut c = vec![0.0; n];
    c.extend(std::iter::repeat_n(1.0, m));
    let basis: Vec<usize> = (n..n + m).collect();
    let sol = minimize(&rows, &rhs, &c, &basis)?;
    Ok((sol.x[..n].to_vec(), sol.objective))
}
