//! Tail-index and scale estimation on each tail of the centered Z-series,
//! the power-law bias estimate for trimmed-away tail mass, and the
//! bias-corrected trimmed estimator.
//!
//! Each tail is modeled as `P(Z > c) ~ d c^(-kappa)`. Hill's estimator gives
//! `1/kappa` as the mean log-spacing of the top `m` order statistics, Hall's
//! plug-in gives `d = (m/n) Z_(m)^kappa`, and trimming the `k` largest
//! magnitudes removes roughly
//!
//! ```text
//! (n/(n-k)) * [ d2^(1/k2) k2/(k2-1) (k/n)^(1-1/k2) - d1^(1/k1) k1/(k1-1) (k/n)^(1-1/k1) ]
//! ```
//!
//! from the mean (right tail minus left tail).

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::estimators::{estimate_tz, EstimateReport, EstimatorError, EstimatorTag, ZSeries};

#[derive(Debug, Error, PartialEq)]
pub enum TailError {
    #[error("tail has {available} observations, fractile m = {m} needs at least m and m >= 2")]
    Fractile { m: usize, available: usize },
    #[error("degenerate tail: top {0} order statistics are equal")]
    Degenerate(usize),
    #[error("tail index {0} <= 1: the fitted tail has no mean")]
    Infeasible(f64),
    #[error("non-positive tail scale {0}")]
    Scale(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailSide {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub side: TailSide,
    pub m: usize,
    pub kappa_hat: f64,
    pub d_hat: f64,
    /// The `m`-th largest tail magnitude.
    pub order_stat_m: f64,
}

/// Magnitudes of the strictly negative and strictly positive centered
/// values, each sorted in descending order. Zeros belong to neither tail.
pub fn split_tails(zs: &ZSeries) -> (Vec<f64>, Vec<f64>) {
    let mut neg: Vec<f64> = zs.centered.iter().filter(|&&c| c < 0.0).map(|c| -c).collect();
    let mut pos: Vec<f64> = zs.centered.iter().filter(|&&c| c > 0.0).copied().collect();
    let desc = |a: &f64, b: &f64| b.partial_cmp(a).unwrap_or(Ordering::Equal);
    neg.sort_by(desc);
    pos.sort_by(desc);
    (neg, pos)
}

/// Hill tail index from the top `m` of a descending positive tail.
pub fn hill_index(tail: &[f64], m: usize) -> Result<f64, TailError> {
    if m < 2 || tail.len() < m || !(tail[m - 1] > 0.0) {
        return Err(TailError::Fractile {
            m,
            available: tail.len(),
        });
    }
    let anchor = tail[m - 1];
    let inv = tail[..m - 1].iter().map(|v| (v / anchor).ln()).sum::<f64>() / (m - 1) as f64;
    if !(inv > 0.0) {
        return Err(TailError::Degenerate(m));
    }
    Ok(1.0 / inv)
}

/// Hall scale `(m/n) anchor^kappa`.
pub fn hall_scale(anchor: f64, m: usize, n: usize, kappa_hat: f64) -> f64 {
    (m as f64 / n as f64) * anchor.powf(kappa_hat)
}

/// Fits index and scale on one tail at fractile `m`; `n` is the full
/// sample size.
pub fn fit_tail(tail: &[f64], side: TailSide, m: usize, n: usize) -> Result<TailFit, TailError> {
    let kappa_hat = hill_index(tail, m)?;
    let order_stat_m = tail[m - 1];
    Ok(TailFit {
        side,
        m,
        kappa_hat,
        d_hat: hall_scale(order_stat_m, m, n, kappa_hat),
        order_stat_m,
    })
}

/// Trimmed-mass bias from tail parameters `(kappa, d)` for the left (1) and
/// right (2) tails.
pub fn bias_approximation(n: usize, k: usize, kappa1: f64, kappa2: f64, d1: f64, d2: f64) -> Result<f64, TailError> {
    for kappa in [kappa1, kappa2] {
        if !(kappa > 1.0) {
            return Err(TailError::Infeasible(kappa));
        }
    }
    for d in [d1, d2] {
        if !(d > 0.0) {
            return Err(TailError::Scale(d));
        }
    }
    let frac = k as f64 / n as f64;
    let tail_mass = |kappa: f64, d: f64| d.powf(1.0 / kappa) * (kappa / (kappa - 1.0)) * frac.powf(1.0 - 1.0 / kappa);
    Ok((n as f64 / (n - k) as f64) * (tail_mass(kappa2, d2) - tail_mass(kappa1, d1)))
}

/// Bias estimate from fitted left and right tails.
pub fn bias_estimate(n: usize, k: usize, left: &TailFit, right: &TailFit) -> Result<f64, TailError> {
    bias_approximation(n, k, left.kappa_hat, right.kappa_hat, left.d_hat, right.d_hat)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasEstimate {
    pub value: f64,
    /// `m / ln n` for the selected fractile.
    pub phi_star: f64,
    pub m_star: usize,
    pub left: Option<TailFit>,
    pub right: Option<TailFit>,
    pub feasible: bool,
}

impl BiasEstimate {
    fn infeasible() -> Self {
        Self {
            value: 0.0,
            phi_star: f64::NAN,
            m_star: 0,
            left: None,
            right: None,
            feasible: false,
        }
    }
}

/// Integer fractiles `round(phi ln n)` for `phi` over `phi_range`, at least 2.
pub fn phi_fractiles(n: usize, phi_range: (f64, f64)) -> std::ops::RangeInclusive<usize> {
    let ln = (n as f64).ln();
    let lo = ((phi_range.0 * ln).round() as usize).max(2);
    let hi = (phi_range.1 * ln).round() as usize;
    lo..=hi
}

/// Candidate bias at fractile `m`, or `None` when either tail is too short,
/// degenerate, or has a fitted index at or below 1.
fn candidate(n: usize, k: usize, neg: &[f64], pos: &[f64], m: usize) -> Option<(f64, TailFit, TailFit)> {
    let left = fit_tail(neg, TailSide::Left, m, n).ok()?;
    let right = fit_tail(pos, TailSide::Right, m, n).ok()?;
    let b = bias_estimate(n, k, &left, &right).ok()?;
    b.is_finite().then_some((b, left, right))
}

/// Chooses the tail fractile whose corrected estimate lands closest to the
/// untrimmed mean. Ties go to the smaller fractile.
pub fn select_phi(zs: &ZSeries, k: usize, phi_range: (f64, f64)) -> Result<BiasEstimate, EstimatorError> {
    let theta_tz = estimate_tz(zs, k)?.theta_hat;
    Ok(select_phi_given(zs, k, phi_range, theta_tz))
}

fn select_phi_given(zs: &ZSeries, k: usize, phi_range: (f64, f64), theta_tz: f64) -> BiasEstimate {
    let n = zs.n();
    let (neg, pos) = split_tails(zs);
    let max_m = neg.len().min(pos.len());
    let mut best: Option<(f64, usize, f64, TailFit, TailFit)> = None;
    for m in phi_fractiles(n, phi_range) {
        if m > max_m {
            break;
        }
        let Some((b, left, right)) = candidate(n, k, &neg, &pos, m) else {
            continue;
        };
        let dist = (theta_tz + b - zs.mean_z).abs();
        if best.as_ref().is_none_or(|(d, ..)| dist < *d) {
            best = Some((dist, m, b, left, right));
        }
    }
    match best {
        Some((_, m, b, left, right)) => BiasEstimate {
            value: b,
            phi_star: m as f64 / (n as f64).ln(),
            m_star: m,
            left: Some(left),
            right: Some(right),
            feasible: true,
        },
        None => BiasEstimate::infeasible(),
    }
}

/// Decides between the trimmed and the corrected estimate: the corrected
/// value is used only when strictly closer to the untrimmed mean.
pub fn switch_rule(theta_tz: f64, bias: f64, theta_untrimmed: f64) -> (f64, f64) {
    if (theta_tz + bias - theta_untrimmed).abs() < (theta_tz - theta_untrimmed).abs() {
        (theta_tz + bias, bias)
    } else {
        (theta_tz, 0.0)
    }
}

/// Bias-corrected tail-trimmed estimate together with the bias search.
pub fn estimate_tzo_with_bias(
    zs: &ZSeries,
    k: usize,
    phi_range: (f64, f64),
) -> Result<(EstimateReport, BiasEstimate), EstimatorError> {
    let tz = estimate_tz(zs, k)?;
    let bias = select_phi_given(zs, k, phi_range, tz.theta_hat);
    let (theta, applied) = switch_rule(tz.theta_hat, bias.value, zs.mean_z);
    let mut report = tz;
    report.estimator = EstimatorTag::TZO;
    report.theta_hat = theta;
    report.bias_correction = applied;
    if !bias.feasible {
        report.diagnostics.push("no feasible tail fractile; bias correction skipped".into());
    } else if applied == 0.0 && bias.value != 0.0 {
        report.diagnostics.push("bias correction rejected by switch rule".into());
    }
    Ok((report, bias))
}

pub fn estimate_tzo(zs: &ZSeries, k: usize, phi_range: (f64, f64)) -> Result<EstimateReport, EstimatorError> {
    estimate_tzo_with_bias(zs, k, phi_range).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn split() {
        let zs = ZSeries::from_values(vec![-3.0, -1.0, 0.0, 2.0, 2.0]);
        // mean 0: centered = values
        let (neg, pos) = split_tails(&zs);
        assert_eq!(neg, vec![3.0, 1.0]);
        assert_eq!(pos, vec![2.0, 2.0]);
        let zs = ZSeries::from_values(vec![-1.0, 1.0]);
        assert_eq!(split_tails(&zs), (vec![1.0], vec![1.0]));
    }

    #[test]
    fn hill_basic() {
        assert!((hill_index(&[E, 1.0], 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hill_index(&[4.0, 4.0], 2), Err(TailError::Degenerate(2)));
        assert!(matches!(hill_index(&[4.0], 2), Err(TailError::Fractile { .. })));
        assert!(matches!(hill_index(&[4.0, 3.0], 1), Err(TailError::Fractile { .. })));
    }

    #[test]
    fn hall_basic() {
        assert!((hall_scale(2.0, 10, 100, 2.0) - 0.4).abs() < 1e-15);
        assert_eq!(hall_scale(1.0, 7, 50, 3.3), 7.0 / 50.0);
    }

    #[test]
    fn bias_values() {
        assert_eq!(bias_approximation(100, 1, 1.5, 1.5, 1.0, 1.0).unwrap(), 0.0);
        let b = bias_approximation(100, 1, 2.0, 2.0, 1.0, 4.0).unwrap();
        assert!((b - (100.0 / 99.0) * 0.2).abs() < 1e-14);
        assert!((b - 0.20202).abs() < 1e-5);
        assert_eq!(bias_approximation(100, 1, 2.0, 1.0, 1.0, 1.0), Err(TailError::Infeasible(1.0)));
    }

    #[test]
    fn bias_estimate_matches_approximation() {
        let left = TailFit {
            side: TailSide::Left,
            m: 10,
            kappa_hat: 2.2,
            d_hat: 0.7,
            order_stat_m: 1.0,
        };
        let right = TailFit {
            side: TailSide::Right,
            kappa_hat: 1.7,
            d_hat: 1.3,
            ..left
        };
        assert_eq!(
            bias_estimate(250, 2, &left, &right).unwrap(),
            bias_approximation(250, 2, 2.2, 1.7, 0.7, 1.3).unwrap()
        );
    }

    #[test]
    fn switch() {
        assert_eq!(switch_rule(1.0, 0.0, 1.5), (1.0, 0.0));
        let (t, b) = switch_rule(1.0, 0.3, 1.5);
        assert!((t - 1.3).abs() < 1e-15 && b == 0.3);
        assert_eq!(switch_rule(1.0, 2.0, 1.5), (1.0, 0.0));
    }

    #[test]
    fn symmetric_series_has_zero_bias_at_smallest_m() {
        // Pairs +-v around 0: identical tails.
        let mut z = Vec::new();
        for i in 1..=60 {
            let v = (i as f64).powf(1.3);
            z.push(v);
            z.push(-v);
        }
        let zs = ZSeries::from_values(z);
        let n = zs.n();
        let b = select_phi(&zs, 1, (2.0, 16.0)).unwrap();
        assert!(b.feasible);
        assert_eq!(b.value, 0.0);
        assert_eq!(b.m_star, *phi_fractiles(n, (2.0, 16.0)).start());
        let r = estimate_tzo(&zs, 1, (2.0, 16.0)).unwrap();
        assert_eq!(r.bias_correction, 0.0);
    }

    #[test]
    fn tiny_sample_is_infeasible() {
        let zs = ZSeries::from_values(vec![1.0, -2.0, 3.0, -4.0, 5.5]);
        let b = select_phi(&zs, 1, (2.0, 16.0)).unwrap();
        assert!(!b.feasible);
        assert_eq!(b.value, 0.0);
        let tz = estimate_tz(&zs, 1).unwrap();
        let tzo = estimate_tzo(&zs, 1, (2.0, 16.0)).unwrap();
        assert_eq!(tzo.theta_hat, tz.theta_hat);
    }

    #[test]
    fn fractile_grid() {
        let r = phi_fractiles(100, (2.0, 16.0));
        assert_eq!((*r.start(), *r.end()), (9, 74));
    }
}
