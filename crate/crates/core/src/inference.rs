//! Plug-in scale, standard errors, t-statistics and confidence intervals for
//! the bias-corrected tail-trimmed estimator.
//!
//! With an estimated propensity model the scale accounts for the plug-in
//! through the score influence terms
//!
//! ```text
//! w_i = [ (1/n) sum_j S_j S_j' ]^{-1} S_i
//! D   = -(1/n) sum_i S_i Z_i 1{|Zc_i| < thr}
//! V^2 = 1/(n-k) sum_i ( Zc_i 1{|Zc_i| < thr} + ((n-k)/n) B + D' w_i )^2
//! ```
//!
//! where `Zc` is the mean-centered series and `thr` the trimming threshold.
//! With known probabilities the `D' w_i` term is dropped.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::estimators::{tz_keep, EstimatorError, ZSeries};
use crate::propensity::{scores, PropensityError, PropensityFit};
use crate::sample::Sample;
use crate::special::normal_quantile;

/// Information matrices with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("propensity fit did not converge")]
    NotConverged,
    #[error("score information matrix is singular (condition number {0:e})")]
    Singular(f64),
    #[error("scale estimate is zero")]
    DegenerateScale,
    #[error("confidence level {0} is not in (0, 1)")]
    Level(f64),
    #[error(transparent)]
    Propensity(#[from] PropensityError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub v_hat_sq: f64,
    /// Empty in known-propensity mode.
    pub d_hat_vec: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InferenceReport {
    pub theta_hat: f64,
    pub null_value: f64,
    pub v_hat_sq: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub level: f64,
    pub ci: (f64, f64),
    pub d_hat_vec: Vec<f64>,
}

/// Inverse of the mean outer product of the scores, guarded by condition
/// number.
pub fn inverse_information(scores: &[Vec<f64>]) -> Result<DMatrix<f64>, InferenceError> {
    let q = scores.first().map_or(0, Vec::len);
    let n = scores.len() as f64;
    let mut info = DMatrix::zeros(q, q);
    for s in scores {
        let v = DVector::from_column_slice(s);
        info.ger(1.0 / n, &v, &v, 1.0);
    }
    let eig = info.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(InferenceError::Singular(cond));
    }
    let chol = info.cholesky().ok_or(InferenceError::Singular(cond))?;
    Ok(chol.inverse())
}

/// Scale `V^2` of the trimmed estimator at fractile `k` with bias estimate
/// `b_hat`. Pass `fit = None` when the propensity scores are known.
pub fn variance_estimate(
    sample: &Sample,
    fit: Option<&PropensityFit>,
    zs: &ZSeries,
    k: usize,
    b_hat: f64,
) -> Result<VarianceEstimate, InferenceError> {
    let n = zs.n();
    if k == 0 || k >= n {
        return Err(EstimatorError::Fractile {
            k,
            n,
            reason: "need 1 <= k < n",
        }
        .into());
    }
    let threshold = zs.abs_order_stat(k);
    let keep: Vec<bool> = tz_keep(zs, threshold).collect();
    let shift = (n - k) as f64 / n as f64 * b_hat;

    let influence: Option<(Vec<f64>, Vec<f64>)> = match fit {
        None => None,
        Some(fit) => {
            if !fit.converged {
                return Err(InferenceError::NotConverged);
            }
            let s = scores(sample, fit)?;
            let j_inv = inverse_information(&s)?;
            let q = j_inv.nrows();
            let mut d_hat = DVector::zeros(q);
            for ((si, &z), &kept) in s.iter().zip(&zs.z).zip(&keep) {
                if kept {
                    d_hat.axpy(-z / n as f64, &DVector::from_column_slice(si), 1.0);
                }
            }
            // D' w_i = (J^{-1} D)' S_i since J^{-1} is symmetric.
            let a = &j_inv * &d_hat;
            let terms = s.iter().map(|si| a.iter().zip(si).map(|(x, y)| x * y).sum()).collect();
            Some((d_hat.iter().copied().collect(), terms))
        }
    };

    let sum_sq: f64 = (0..n)
        .map(|i| {
            let trimmed = if keep[i] { zs.centered[i] } else { 0.0 };
            let extra = influence.as_ref().map_or(0.0, |(_, t)| t[i]);
            let v = trimmed + shift + extra;
            v * v
        })
        .sum();
    Ok(VarianceEstimate {
        v_hat_sq: sum_sq / (n - k) as f64,
        d_hat_vec: influence.map(|(d, _)| d).unwrap_or_default(),
    })
}

/// `sqrt(n) (theta_hat - null) / sqrt(V^2)`.
pub fn t_statistic(theta_hat: f64, null_value: f64, v_hat_sq: f64, n: usize) -> Result<f64, InferenceError> {
    if !(v_hat_sq > 0.0) {
        return Err(InferenceError::DegenerateScale);
    }
    Ok((n as f64).sqrt() * (theta_hat - null_value) / v_hat_sq.sqrt())
}

/// Normal-theory interval `theta_hat -+ z sqrt(V^2 / n)`.
pub fn confidence_interval(theta_hat: f64, v_hat_sq: f64, n: usize, level: f64) -> Result<(f64, f64), InferenceError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(InferenceError::Level(level));
    }
    let half = normal_quantile(0.5 * (1.0 + level)) * (v_hat_sq.max(0.0) / n as f64).sqrt();
    Ok((theta_hat - half, theta_hat + half))
}

/// Full report for an estimate at fractile `k` with bias `b_hat`.
#[allow(clippy::too_many_arguments)]
pub fn infer(
    sample: &Sample,
    fit: Option<&PropensityFit>,
    zs: &ZSeries,
    k: usize,
    b_hat: f64,
    theta_hat: f64,
    null_value: f64,
    level: f64,
) -> Result<InferenceReport, InferenceError> {
    let n = zs.n();
    let var = variance_estimate(sample, fit, zs, k, b_hat)?;
    let t_stat = t_statistic(theta_hat, null_value, var.v_hat_sq, n).unwrap_or(f64::NAN);
    Ok(InferenceReport {
        theta_hat,
        null_value,
        v_hat_sq: var.v_hat_sq,
        std_error: (var.v_hat_sq / n as f64).sqrt(),
        t_stat,
        level,
        ci: confidence_interval(theta_hat, var.v_hat_sq, n, level)?,
        d_hat_vec: var.d_hat_vec,
    })
}
