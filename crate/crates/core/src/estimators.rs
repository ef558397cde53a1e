//! The inverse-probability-weighted series `Z_i = h_i Y_i` and the point
//! estimators built on it: untrimmed, trim-by-Z, trim-by-X (fixed and
//! adaptive threshold), trim-by-p(X) and trim-by-Y.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::propensity::{ipw_weight, PropensityFit, Propensities};
use crate::sample::Sample;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("degenerate probability at observation {0}")]
    DegenerateProbability(usize),
    #[error("fractile {k} is invalid for n = {n}: {reason}")]
    Fractile { k: usize, n: usize, reason: &'static str },
    #[error("probability vector has length {got}, sample has {expected}")]
    Length { got: usize, expected: usize },
    #[error("covariate column {col} out of range (k = {k})")]
    Column { col: usize, k: usize },
    #[error("estimator {0} needs a covariate column to trim on")]
    NoTrimColumn(String),
}

/// `Z_i`, their mean, the mean-centered values and the ordering of
/// `|centered|` from largest to smallest (ties keep index order).
#[derive(Clone, Debug, PartialEq)]
pub struct ZSeries {
    pub z: Vec<f64>,
    pub mean_z: f64,
    pub centered: Vec<f64>,
    pub abs_order: Vec<usize>,
}

impl ZSeries {
    pub fn from_values(z: Vec<f64>) -> Self {
        let n = z.len();
        let mean_z = z.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = z.iter().map(|v| v - mean_z).collect();
        let mut abs_order: Vec<usize> = (0..n).collect();
        abs_order.sort_by(|&a, &b| {
            centered[b]
                .abs()
                .partial_cmp(&centered[a].abs())
                .unwrap_or(Ordering::Equal)
        });
        Self {
            z,
            mean_z,
            centered,
            abs_order,
        }
    }

    /// Builds `Z_i = h_i Y_i` from per-observation probabilities.
    pub fn new(sample: &Sample, probs: &Propensities) -> Result<Self, EstimatorError> {
        if probs.len() != sample.n() {
            return Err(EstimatorError::Length {
                got: probs.len(),
                expected: sample.n(),
            });
        }
        if let Some(i) = probs.first_degenerate() {
            return Err(EstimatorError::DegenerateProbability(i));
        }
        let z = sample
            .observations()
            .iter()
            .zip(probs.p().iter().zip(probs.q()))
            .map(|(o, (&p, &q))| ipw_weight(o.treated, p, q) * o.y)
            .collect();
        Ok(Self::from_values(z))
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// The `j`-th largest `|centered|`, 1-based.
    pub fn abs_order_stat(&self, j: usize) -> f64 {
        self.centered[self.abs_order[j - 1]].abs()
    }
}

/// `Z` at a fitted propensity model.
pub fn compute_z(sample: &Sample, fit: &PropensityFit) -> Result<ZSeries, EstimatorError> {
    ZSeries::new(sample, &fit.propensities)
}

/// Rounds to the nearest integer; halves go away from zero.
fn round_count(v: f64) -> usize {
    v.round().max(0.0) as usize
}

/// Trimming fractile `k_n = max{1, round(lambda_k (ln n)^(1 - iota))}`,
/// capped at `n - 1`.
pub fn fractile_k(n: usize, lambda_k: f64, iota: f64) -> usize {
    let ln = (n as f64).ln();
    round_count(lambda_k * ln.powf(1.0 - iota)).max(1).min(n.saturating_sub(1).max(1))
}

/// Adaptive trim-by-X fractile `round(2n / ln n)`.
pub fn fractile_x(n: usize) -> usize {
    round_count(2.0 * n as f64 / (n as f64).ln()).clamp(1, n)
}

/// Trim-by-p(X) fractile `round(lambda_p n / ln n)`, at least 1 and at most
/// `n / 2`.
pub fn fractile_p(n: usize, lambda_p: f64) -> usize {
    round_count(lambda_p * n as f64 / (n as f64).ln()).clamp(1, (n / 2).max(1))
}

/// Fractile parameters shared by the trimmed estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FractileSchedule {
    pub lambda_k: f64,
    pub iota: f64,
    /// Range of `phi` in `m = round(phi ln n)` for tail estimation.
    pub phi_range: (f64, f64),
}

impl Default for FractileSchedule {
    fn default() -> Self {
        Self {
            lambda_k: 0.25,
            iota: 1e-10,
            phi_range: (2.0, 16.0),
        }
    }
}

impl FractileSchedule {
    pub fn k_n(&self, n: usize) -> usize {
        fractile_k(n, self.lambda_k, self.iota)
    }

    /// `m = max{2, round(ln n)}`; per-`phi` fractiles are `round(phi ln n)`.
    pub fn m_base(&self, n: usize) -> usize {
        round_count((n as f64).ln()).max(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorTag {
    Untrimmed,
    TZ,
    TZO,
    TXFixed,
    TXAdaptive,
    TP,
    TY,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimator: EstimatorTag,
    pub theta_hat: f64,
    /// Bias correction added to the trimmed estimate (0 when not applied).
    pub bias_correction: f64,
    pub trimmed_count: usize,
    pub trimmed_fraction: f64,
    pub threshold: f64,
    pub diagnostics: Vec<String>,
}

impl EstimateReport {
    pub(crate) fn new(estimator: EstimatorTag, theta_hat: f64, trimmed_count: usize, n: usize, threshold: f64) -> Self {
        Self {
            estimator,
            theta_hat,
            bias_correction: 0.0,
            trimmed_count,
            trimmed_fraction: trimmed_count as f64 / n as f64,
            threshold,
            diagnostics: Vec::new(),
        }
    }
}

pub fn estimate_untrimmed(zs: &ZSeries) -> EstimateReport {
    EstimateReport::new(EstimatorTag::Untrimmed, zs.mean_z, 0, zs.n(), f64::INFINITY)
}

/// Indicator `|centered_i| < threshold` used by the trim-by-Z estimator.
pub fn tz_keep(zs: &ZSeries, threshold: f64) -> impl Iterator<Item = bool> + '_ {
    zs.centered.iter().map(move |c| c.abs() < threshold)
}

/// Tail-trimmed estimator: drops observations whose centered value reaches
/// the `k`-th largest `|centered|` and rescales by `1/(n-k)`.
pub fn estimate_tz(zs: &ZSeries, k: usize) -> Result<EstimateReport, EstimatorError> {
    let n = zs.n();
    if k == 0 || k >= n {
        return Err(EstimatorError::Fractile {
            k,
            n,
            reason: "need 1 <= k < n",
        });
    }
    let threshold = zs.abs_order_stat(k);
    let (sum, kept) = zs
        .z
        .iter()
        .zip(tz_keep(zs, threshold))
        .filter(|(_, keep)| *keep)
        .fold((0.0, 0usize), |(s, c), (z, _)| (s + z, c + 1));
    let mut report = EstimateReport::new(EstimatorTag::TZ, sum / (n - k) as f64, n - kept, n, threshold);
    if n - kept != k {
        report
            .diagnostics
            .push(format!("ties at the threshold: {} trimmed for k = {k}", n - kept));
    }
    Ok(report)
}

fn check_column(sample: &Sample, col: usize) -> Result<(), EstimatorError> {
    if col >= sample.k() {
        return Err(EstimatorError::Column { col, k: sample.k() });
    }
    Ok(())
}

/// Keeps `Z_i` with `|x_i[col]| <= nu`, scaled by `1/n`.
pub fn estimate_tx_fixed(sample: &Sample, zs: &ZSeries, nu: f64, col: usize) -> Result<EstimateReport, EstimatorError> {
    check_column(sample, col)?;
    Ok(keep_by_magnitude(EstimatorTag::TXFixed, sample.column(col), zs, nu))
}

/// The `k`-th largest of `values` by magnitude, 1-based.
fn kth_largest_abs(values: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut abs: Vec<f64> = values.map(f64::abs).collect();
    let idx = k - 1;
    abs.select_nth_unstable_by(idx, |a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    abs[idx]
}

fn keep_by_magnitude(tag: EstimatorTag, values: impl Iterator<Item = f64>, zs: &ZSeries, threshold: f64) -> EstimateReport {
    let n = zs.n();
    let (sum, trimmed) = values
        .zip(&zs.z)
        .fold((0.0, 0usize), |(s, t), (v, z)| {
            if v.abs() <= threshold {
                (s + z, t)
            } else {
                (s, t + 1)
            }
        });
    EstimateReport::new(tag, sum / n as f64, trimmed, n, threshold)
}

/// Keeps `Z_i` with `|x_i[col]|` at most the `k_x`-th largest `|x[col]|`.
/// The threshold observation itself is kept, so `k_x - 1` are trimmed when
/// the magnitudes are distinct.
pub fn estimate_tx_adaptive(sample: &Sample, zs: &ZSeries, k_x: usize, col: usize) -> Result<EstimateReport, EstimatorError> {
    check_column(sample, col)?;
    let n = sample.n();
    if k_x == 0 || k_x > n {
        return Err(EstimatorError::Fractile {
            k: k_x,
            n,
            reason: "need 1 <= k_x <= n",
        });
    }
    let threshold = kth_largest_abs(sample.column(col), k_x);
    Ok(keep_by_magnitude(EstimatorTag::TXAdaptive, sample.column(col), zs, threshold))
}

/// Keeps `Z_i` with `p_(n-k_p+1) <= p_i <= p_(k_p)` where `p_(1) >= ... >= p_(n)`.
pub fn estimate_tp(zs: &ZSeries, probs: &[f64], k_p: usize) -> Result<EstimateReport, EstimatorError> {
    let n = zs.n();
    if probs.len() != n {
        return Err(EstimatorError::Length {
            got: probs.len(),
            expected: n,
        });
    }
    if k_p == 0 || 2 * k_p > n {
        return Err(EstimatorError::Fractile {
            k: k_p,
            n,
            reason: "need 1 <= k_p <= n/2",
        });
    }
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let upper = sorted[k_p - 1];
    let lower = sorted[n - k_p];
    let (sum, trimmed) = probs.iter().zip(&zs.z).fold((0.0, 0usize), |(s, t), (&p, z)| {
        if lower <= p && p <= upper {
            (s + z, t)
        } else {
            (s, t + 1)
        }
    });
    Ok(EstimateReport::new(EstimatorTag::TP, sum / n as f64, trimmed, n, upper))
}

/// Keeps `Z_i` with `|y_i|` at most the `k_y`-th largest `|y|`.
pub fn estimate_ty(sample: &Sample, zs: &ZSeries, k_y: usize) -> Result<EstimateReport, EstimatorError> {
    let n = sample.n();
    if k_y == 0 || k_y > n {
        return Err(EstimatorError::Fractile {
            k: k_y,
            n,
            reason: "need 1 <= k_y <= n",
        });
    }
    let threshold = kth_largest_abs(sample.y(), k_y);
    Ok(keep_by_magnitude(EstimatorTag::TY, sample.y(), zs, threshold))
}

/// An estimator together with how its fractile or threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimatorSpec {
    /// No trimming.
    Untrimmed,
    /// Trim by Z with `k_n`.
    TrimZ,
    /// Trim by Z with the optimized bias correction.
    TrimZCorrected,
    /// Trim by X with `nu = ln ln n`.
    TrimXFixed,
    /// Adaptive trim by X with `k = round(2n / ln n)`.
    TrimXAdaptive,
    /// Adaptive trim by X with `k = k_n`.
    TrimXKn,
    /// Trim by p(X) with `k_p = round(lambda_p n / ln n)`.
    TrimP(f64),
    /// Trim by p(X) with `k_p = max{1, round(k_n / 2)}`.
    TrimPHalfKn,
    /// Trim by Y with `k = k_n`.
    TrimY,
}

impl EstimatorSpec {
    /// Default comparison roster.
    pub fn roster() -> Vec<EstimatorSpec> {
        use EstimatorSpec::*;
        vec![
            Untrimmed,
            TrimZ,
            TrimZCorrected,
            TrimXFixed,
            TrimXAdaptive,
            TrimXKn,
            TrimP(0.25),
            TrimP(0.5),
            TrimP(1.0),
            TrimP(2.0),
            TrimPHalfKn,
            TrimY,
        ]
    }

    /// Table label.
    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Untrimmed => "No-Trim".into(),
            EstimatorSpec::TrimZ => "TT(Z)".into(),
            EstimatorSpec::TrimZCorrected => "TT-BC(Z)".into(),
            EstimatorSpec::TrimXFixed => "TT(X)".into(),
            EstimatorSpec::TrimXAdaptive => "TT(X,kx)".into(),
            EstimatorSpec::TrimXKn => "TT(X,kn)".into(),
            EstimatorSpec::TrimP(l) => format!("TT(p,{l})"),
            EstimatorSpec::TrimPHalfKn => "TT(p,kn/2)".into(),
            EstimatorSpec::TrimY => "TT(Y)".into(),
        }
    }

    pub fn tag(&self) -> EstimatorTag {
        match self {
            EstimatorSpec::Untrimmed => EstimatorTag::Untrimmed,
            EstimatorSpec::TrimZ => EstimatorTag::TZ,
            EstimatorSpec::TrimZCorrected => EstimatorTag::TZO,
            EstimatorSpec::TrimXFixed => EstimatorTag::TXFixed,
            EstimatorSpec::TrimXAdaptive | EstimatorSpec::TrimXKn => EstimatorTag::TXAdaptive,
            EstimatorSpec::TrimP(_) | EstimatorSpec::TrimPHalfKn => EstimatorTag::TP,
            EstimatorSpec::TrimY => EstimatorTag::TY,
        }
    }

    /// Whether the estimator needs a covariate column to trim on.
    pub fn needs_trim_column(&self) -> bool {
        matches!(
            self,
            EstimatorSpec::TrimXFixed | EstimatorSpec::TrimXAdaptive | EstimatorSpec::TrimXKn
        )
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::Untrimmed => f.write_str("untrimmed"),
            EstimatorSpec::TrimZ => f.write_str("tz"),
            EstimatorSpec::TrimZCorrected => f.write_str("tzo"),
            EstimatorSpec::TrimXFixed => f.write_str("tx"),
            EstimatorSpec::TrimXAdaptive => f.write_str("tx-kx"),
            EstimatorSpec::TrimXKn => f.write_str("tx-kn"),
            EstimatorSpec::TrimP(l) => write!(f, "tp:{l}"),
            EstimatorSpec::TrimPHalfKn => f.write_str("tp-kn"),
            EstimatorSpec::TrimY => f.write_str("ty"),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "untrimmed" | "no-trim" => EstimatorSpec::Untrimmed,
            "tz" => EstimatorSpec::TrimZ,
            "tzo" | "tt-bc" => EstimatorSpec::TrimZCorrected,
            "tx" => EstimatorSpec::TrimXFixed,
            "tx-kx" | "tx-adaptive" => EstimatorSpec::TrimXAdaptive,
            "tx-kn" => EstimatorSpec::TrimXKn,
            "tp" | "tp-kn" => EstimatorSpec::TrimPHalfKn,
            "ty" => EstimatorSpec::TrimY,
            other => match other.strip_prefix("tp:") {
                Some(l) => {
                    let l: f64 = l.parse().map_err(|_| format!("bad trim-by-p scale in '{other}'"))?;
                    if !(l > 0.0 && l.is_finite()) {
                        return Err(format!("trim-by-p scale must be positive in '{other}'"));
                    }
                    EstimatorSpec::TrimP(l)
                }
                None => return Err(format!("unknown estimator '{other}'")),
            },
        })
    }
}

impl Serialize for EstimatorSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EstimatorSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
