//! Parametric propensity-score links and maximum-likelihood fitting.
//!
//! All three links are CDFs of distributions symmetric about zero, so the
//! complement `1 - F(t)` is evaluated as `F(-t)`. Both are carried through
//! the pipeline to keep the small tail probabilities that drive the inverse
//! weights accurate.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::Sample;
use crate::special::{normal_cdf, normal_pdf};

#[derive(Debug, Error, PartialEq)]
pub enum PropensityError {
    #[error("link index is not finite: {0}")]
    NonFiniteIndex(f64),
    #[error("initial coefficient vector has length {got}, expected {expected}")]
    InitLength { got: usize, expected: usize },
    #[error("perfect separation: |gamma|_inf exceeded {bound} at iteration {iteration}")]
    Separation { bound: f64, iteration: usize },
    #[error("information matrix is singular")]
    Singular,
    #[error("degenerate probability at observation {0}")]
    DegenerateProbability(usize),
    #[error("log-likelihood is not finite at the initial value")]
    NonFiniteLikelihood,
    #[error("probability vectors have length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFamily {
    Logit,
    Probit,
    Laplace,
}

impl fmt::Display for LinkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkFamily::Logit => "logit",
            LinkFamily::Probit => "probit",
            LinkFamily::Laplace => "laplace",
        })
    }
}

impl FromStr for LinkFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logit" => Ok(LinkFamily::Logit),
            "probit" => Ok(LinkFamily::Probit),
            "laplace" => Ok(LinkFamily::Laplace),
            other => Err(format!("unknown link '{other}' (expected logit, probit or laplace)")),
        }
    }
}

/// Derivative of a link at an index, flagging the Laplace kink at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkDerivative {
    pub value: f64,
    pub kink: bool,
}

impl LinkFamily {
    /// `(F(t), 1 - F(t))`, both computed without cancellation.
    pub fn cdf_pair(self, t: f64) -> (f64, f64) {
        match self {
            LinkFamily::Logit => (1.0 / (1.0 + (-t).exp()), 1.0 / (1.0 + t.exp())),
            LinkFamily::Probit => (normal_cdf(t), normal_cdf(-t)),
            LinkFamily::Laplace => {
                if t <= 0.0 {
                    let p = 0.5 * (SQRT_2 * t).exp();
                    (p, 1.0 - p)
                } else {
                    let q = 0.5 * (-SQRT_2 * t).exp();
                    (1.0 - q, q)
                }
            }
        }
    }

    /// Probability `F(t)` for a finite index.
    pub fn eval(self, t: f64) -> Result<f64, PropensityError> {
        if !t.is_finite() {
            return Err(PropensityError::NonFiniteIndex(t));
        }
        Ok(self.cdf_pair(t).0)
    }

    /// Density `F'(t)`; at the Laplace kink this is the right derivative.
    pub fn density(self, t: f64) -> f64 {
        match self {
            LinkFamily::Logit => {
                let (p, q) = self.cdf_pair(t);
                p * q
            }
            LinkFamily::Probit => normal_pdf(t),
            LinkFamily::Laplace => 0.5 * SQRT_2 * (-SQRT_2 * t.abs()).exp(),
        }
    }

    /// Second derivative `F''(t)`.
    fn density_slope(self, t: f64) -> f64 {
        match self {
            LinkFamily::Logit => {
                let (p, q) = self.cdf_pair(t);
                p * q * (q - p)
            }
            LinkFamily::Probit => -t * normal_pdf(t),
            LinkFamily::Laplace => {
                let f = self.density(t);
                if t < 0.0 {
                    SQRT_2 * f
                } else {
                    -SQRT_2 * f
                }
            }
        }
    }

    pub fn derivative(self, t: f64) -> Result<LinkDerivative, PropensityError> {
        if !t.is_finite() {
            return Err(PropensityError::NonFiniteIndex(t));
        }
        Ok(LinkDerivative {
            value: self.density(t),
            kink: self == LinkFamily::Laplace && t == 0.0,
        })
    }
}

/// Inverse-probability weight `h = D/p - (1-D)/(1-p)`, with `1 - p` passed
/// in separately.
pub fn ipw_weight(treated: bool, p: f64, q: f64) -> f64 {
    if treated {
        1.0 / p
    } else {
        -1.0 / q
    }
}

/// Per-observation probabilities `p_i` and complements `1 - p_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Propensities {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl Propensities {
    /// From probabilities alone; complements are `1 - p`.
    pub fn from_probs(p: Vec<f64>) -> Self {
        let q = p.iter().map(|&p| 1.0 - p).collect();
        Self { p, q }
    }

    pub fn from_pairs(p: Vec<f64>, q: Vec<f64>) -> Result<Self, PropensityError> {
        if p.len() != q.len() {
            return Err(PropensityError::Length {
                got: q.len(),
                expected: p.len(),
            });
        }
        Ok(Self { p, q })
    }

    /// Evaluates `family` at `x_i' gamma` for each observation.
    pub fn from_index(family: LinkFamily, sample: &Sample, gamma: &[f64]) -> Self {
        let (p, q) = sample
            .observations()
            .iter()
            .map(|o| family.cdf_pair(dot(&o.x, gamma)))
            .unzip();
        Self { p, q }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// First observation whose probability or complement is 0 (or not a
    /// probability at all).
    pub fn first_degenerate(&self) -> Option<usize> {
        self.p
            .iter()
            .zip(&self.q)
            .position(|(&p, &q)| !(p > 0.0 && q > 0.0 && p <= 1.0 && q <= 1.0))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    /// Convergence threshold on the max-norm of the mean score.
    pub tol: f64,
    pub max_iter: usize,
    /// Separation is declared once any coefficient exceeds this in magnitude.
    pub separation_bound: f64,
    pub max_halvings: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            separation_bound: 50.0,
            max_halvings: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropensityFit {
    pub family: LinkFamily,
    pub gamma_hat: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the mean score at `gamma_hat`.
    pub grad_norm: f64,
    #[serde(skip)]
    pub propensities: Propensities,
    pub warnings: Vec<String>,
}

impl PropensityFit {
    pub fn probs(&self) -> &[f64] {
        self.propensities.p()
    }
}

/// Log-likelihood `sum_i D ln p + (1-D) ln(1-p)` at `gamma`.
pub fn log_likelihood(sample: &Sample, family: LinkFamily, gamma: &[f64]) -> f64 {
    sample
        .observations()
        .iter()
        .map(|o| {
            let (p, q) = family.cdf_pair(dot(&o.x, gamma));
            if o.treated {
                p.ln()
            } else {
                q.ln()
            }
        })
        .sum()
}

struct Derivatives {
    gradient: DVector<f64>,
    observed: DMatrix<f64>,
    expected: DMatrix<f64>,
}

fn derivatives(sample: &Sample, family: LinkFamily, gamma: &[f64]) -> Derivatives {
    let k = sample.k();
    let mut gradient = DVector::zeros(k);
    let mut observed = DMatrix::zeros(k, k);
    let mut expected = DMatrix::zeros(k, k);
    for o in sample.observations() {
        let t = dot(&o.x, gamma);
        let (p, q) = family.cdf_pair(t);
        let f = family.density(t);
        let fp = family.density_slope(t);
        let (s, w) = if o.treated {
            (f / p, (f * f - fp * p) / (p * p))
        } else {
            (-f / q, (fp * q + f * f) / (q * q))
        };
        let e = f * f / (p * q);
        let x = DVector::from_column_slice(&o.x);
        gradient.axpy(s, &x, 1.0);
        observed.ger(w, &x, &x, 1.0);
        expected.ger(e, &x, &x, 1.0);
    }
    Derivatives {
        gradient,
        observed,
        expected,
    }
}

/// One extra Newton step once the tolerance is met, kept only if it lowers
/// the score without losing likelihood beyond rounding.
fn polish(sample: &Sample, family: LinkFamily, der: &Derivatives, gamma: &mut Vec<f64>, loglik: &mut f64, grad_norm: &mut f64) {
    let Some(chol) = der.observed.clone().cholesky() else {
        return;
    };
    let step = chol.solve(&der.gradient);
    let trial: Vec<f64> = gamma.iter().zip(step.iter()).map(|(g, s)| g + s).collect();
    let ll = log_likelihood(sample, family, &trial);
    if !(ll.is_finite() && ll >= *loglik - 1e-12 * loglik.abs()) {
        return;
    }
    let g = derivatives(sample, family, &trial).gradient.amax() / sample.n() as f64;
    if g < *grad_norm {
        *gamma = trial;
        *loglik = ll;
        *grad_norm = g;
    }
}

/// Maximizes the propensity log-likelihood by Newton-Raphson with
/// step-halving. The observed information is used when it is positive
/// definite, the expected information otherwise.
pub fn fit_mle(
    sample: &Sample,
    family: LinkFamily,
    init: &[f64],
    opts: &MleOptions,
) -> Result<PropensityFit, PropensityError> {
    let k = sample.k();
    if init.len() != k {
        return Err(PropensityError::InitLength {
            got: init.len(),
            expected: k,
        });
    }
    let n = sample.n() as f64;
    let mut gamma = init.to_vec();
    let mut loglik = log_likelihood(sample, family, &gamma);
    if !loglik.is_finite() {
        return Err(PropensityError::NonFiniteLikelihood);
    }
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm;

    loop {
        let der = derivatives(sample, family, &gamma);
        grad_norm = der.gradient.amax() / n;
        if grad_norm <= opts.tol {
            converged = true;
            polish(sample, family, &der, &mut gamma, &mut loglik, &mut grad_norm);
            break;
        }
        if iterations >= opts.max_iter {
            warnings.push(format!("no convergence after {} iterations", opts.max_iter));
            break;
        }
        iterations += 1;

        let step = der
            .observed
            .clone()
            .cholesky()
            .or_else(|| der.expected.clone().cholesky())
            .ok_or(PropensityError::Singular)?
            .solve(&der.gradient);

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = gamma.iter().zip(step.iter()).map(|(g, s)| g + scale * s).collect();
            let ll = log_likelihood(sample, family, &trial);
            // near the optimum the likelihood is flat to rounding error
            if ll.is_finite() && ll >= loglik - 1e-12 * loglik.abs() {
                accepted = Some((trial, ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, ll)) = accepted else {
            warnings.push("line search could not improve the log-likelihood".into());
            break;
        };
        if trial.iter().any(|g| g.abs() > opts.separation_bound) {
            return Err(PropensityError::Separation {
                bound: opts.separation_bound,
                iteration: iterations,
            });
        }
        gamma = trial;
        loglik = ll;
    }

    // A coefficient vector whose index signs reproduce every treatment label
    // separates the data, so the likelihood has no finite maximizer.
    if sample.observations().iter().all(|o| {
        let t = dot(&o.x, &gamma);
        if o.treated { t > 0.0 } else { t < 0.0 }
    }) {
        return Err(PropensityError::Separation {
            bound: opts.separation_bound,
            iteration: iterations,
        });
    }

    let propensities = Propensities::from_index(family, sample, &gamma);
    if let Some(i) = propensities.first_degenerate() {
        return Err(PropensityError::DegenerateProbability(i));
    }
    Ok(PropensityFit {
        family,
        gamma_hat: gamma,
        loglik,
        iterations,
        converged,
        grad_norm,
        propensities,
        warnings,
    })
}

/// Score `S_i = h_i(gamma) * F'(x_i' gamma) * x_i` at the fitted coefficients.
pub fn score(sample: &Sample, fit: &PropensityFit, i: usize) -> Result<Vec<f64>, PropensityError> {
    let o = &sample.observations()[i];
    let t = dot(&o.x, &fit.gamma_hat);
    let (p, q) = fit.family.cdf_pair(t);
    if !(p > 0.0 && q > 0.0) {
        return Err(PropensityError::DegenerateProbability(i));
    }
    let c = ipw_weight(o.treated, p, q) * fit.family.density(t);
    Ok(o.x.iter().map(|x| c * x).collect())
}

/// Scores for every observation.
pub fn scores(sample: &Sample, fit: &PropensityFit) -> Result<Vec<Vec<f64>>, PropensityError> {
    (0..sample.n()).map(|i| score(sample, fit, i)).collect()
}
