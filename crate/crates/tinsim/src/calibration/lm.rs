//! Small-scale Levenberg–Marquardt solver.
//!
//! All fits in this crate have at most four parameters and smooth residuals,
//! so a dense solver with a numerically differenced Jacobian is exact enough
//! and keeps the dependency surface flat.  Damping follows the classic
//! multiplicative schedule on the diagonal of JᵀJ.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Final sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_PARAMS: usize = 4;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;

/// Minimize ‖r(p)‖² starting from `p0`.  The residual closure returns the
/// full residual vector; its length must not change between calls.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], max_iterations: usize) -> Result<LmFit>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = p0.len();
    if n == 0 || n > MAX_PARAMS {
        return Err(Error::FitFailed(format!(
            "solver handles 1..={MAX_PARAMS} parameters, got {n}"
        )));
    }
    let mut p = p0.to_vec();
    let mut r = residuals(&p)?;
    if r.len() < n {
        return Err(Error::InsufficientData(format!(
            "{} residuals cannot constrain {n} parameters",
            r.len()
        )));
    }
    let mut cost = norm_sq(&r);
    let mut lambda = LAMBDA_INIT;

    for iteration in 1..=max_iterations {
        let jacobian = numeric_jacobian(&residuals, &p, &r)?;
        let (jtj, jtr) = normal_equations(&jacobian, &r, n);

        let mut stepped = false;
        while lambda <= LAMBDA_MAX {
            let mut damped = jtj.clone();
            for k in 0..n {
                damped[k][k] += lambda * jtj[k][k].max(1e-300);
            }
            let Some(delta) = solve(damped, &jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&delta).map(|(pi, di)| pi - di).collect();
            let Ok(r_trial) = residuals(&trial) else {
                lambda *= 10.0;
                continue;
            };
            let cost_trial = norm_sq(&r_trial);
            if cost_trial.is_finite() && cost_trial < cost {
                let rel_drop = (cost - cost_trial) / cost.max(1e-300);
                let rel_step = p
                    .iter()
                    .zip(&delta)
                    .map(|(pi, di)| (di / pi.abs().max(1e-12)).abs())
                    .fold(0.0f64, f64::max);
                p = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda * 0.1).max(1e-12);
                stepped = true;
                if rel_drop < 1e-12 || rel_step < 1e-10 {
                    return Ok(LmFit {
                        params: p,
                        cost,
                        iterations: iteration,
                        converged: true,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // Damping saturated: we are at a (possibly flat) minimum.
            return Ok(LmFit {
                params: p,
                cost,
                iterations: iteration,
                converged: cost.is_finite(),
            });
        }
    }
    Ok(LmFit {
        params: p,
        cost,
        iterations: max_iterations,
        converged: false,
    })
}

fn norm_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Central-difference Jacobian, column-major per parameter.
fn numeric_jacobian<F>(residuals: &F, p: &[f64], r0: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut columns = Vec::with_capacity(p.len());
    for j in 0..p.len() {
        let h = 1e-6 * p[j].abs().max(1e-9);
        let mut fwd = p.to_vec();
        fwd[j] += h;
        let mut bwd = p.to_vec();
        bwd[j] -= h;
        let (rf, rb) = (residuals(&fwd)?, residuals(&bwd)?);
        if rf.len() != r0.len() || rb.len() != r0.len() {
            return Err(Error::FitFailed(
                "residual vector length changed during differentiation".into(),
            ));
        }
        columns.push(
            rf.iter()
                .zip(&rb)
                .map(|(f, b)| (f - b) / (2.0 * h))
                .collect(),
        );
    }
    Ok(columns)
}

fn normal_equations(columns: &[Vec<f64>], r: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut jtj = vec![vec![0.0; n]; n];
    let mut jtr = vec![0.0; n];
    for i in 0..n {
        jtr[i] = columns[i].iter().zip(r).map(|(a, b)| a * b).sum();
        for j in i..n {
            let v: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            jtj[i][j] = v;
            jtj[j][i] = v;
        }
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting; `None` on a singular system.
fn solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        for k in col + 1..n {
            let t = a[col][k] * x[k];
            x[col] -= t;
        }
        x[col] /= a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}
