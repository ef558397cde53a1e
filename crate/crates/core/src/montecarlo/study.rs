//! Replication engine. Each replication is a pure function of the scenario
//! and its index, so results can be computed in any order and collected by
//! index.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{PropensityMode, ScenarioConfig};
use super::dgp::generate_dgp;
use super::variates::substream;
use crate::estimators::{EstimatorSpec, ZSeries};
use crate::evaluate::Evaluator;
use crate::inference::{t_statistic, variance_estimate};
use crate::propensity::{fit_mle, MleOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RepEstimate {
    pub theta: f64,
    pub trimmed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Replication {
    pub rep_index: u64,
    /// One entry per configured estimator, in configuration order.
    pub estimates: Vec<RepEstimate>,
    /// t-statistic of the bias-corrected estimate against zero using its
    /// own plug-in scale, when that estimator is configured and the scale is
    /// positive.
    pub plugin_t: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepFailure {
    pub rep_index: u64,
    pub reason: String,
}

pub type RepOutcome = Result<Replication, RepFailure>;

pub fn run_replication(config: &ScenarioConfig, rep_index: u64) -> RepOutcome {
    let fail = |reason: String| RepFailure { rep_index, reason };
    let mut rng = substream(config.seed, rep_index);
    let (sample, truth) = generate_dgp(config, &mut rng).map_err(|e| fail(e.to_string()))?;

    let fit = match config.propensity_mode {
        PropensityMode::Known => None,
        PropensityMode::Estimated => {
            let init = vec![0.0; sample.k()];
            let fit = fit_mle(&sample, config.link(), &init, &MleOptions::default()).map_err(|e| fail(e.to_string()))?;
            if !fit.converged {
                return Err(fail("propensity fit did not converge".into()));
            }
            Some(fit)
        }
    };
    let probs = fit.as_ref().map_or(&truth, |f| &f.propensities);
    let zs = ZSeries::new(&sample, probs).map_err(|e| fail(e.to_string()))?;
    let ev = Evaluator {
        sample: &sample,
        zs: &zs,
        probs: probs.p(),
        schedule: config.fractiles,
        overrides: config.overrides,
        trim_col: Some(config.case.trim_column()),
    };

    let mut estimates = Vec::with_capacity(config.estimators.len());
    let mut plugin_t = None;
    for &spec in &config.estimators {
        let report = if spec == EstimatorSpec::TrimZCorrected {
            let (report, _) = ev.tzo().map_err(|e| fail(e.to_string()))?;
            let var = variance_estimate(&sample, fit.as_ref(), &zs, ev.k_n(), report.bias_correction)
                .map_err(|e| fail(e.to_string()))?;
            plugin_t = t_statistic(report.theta_hat, 0.0, var.v_hat_sq, sample.n()).ok();
            report
        } else {
            ev.run(spec).map_err(|e| fail(format!("{spec}: {e}")))?
        };
        estimates.push(RepEstimate {
            theta: report.theta_hat,
            trimmed: report.trimmed_count,
        });
    }
    Ok(Replication {
        rep_index,
        estimates,
        plugin_t,
    })
}

/// Runs every replication, optionally on a pool capped at `threads`.
/// Results are ordered by replication index.
pub fn run_study(config: &ScenarioConfig, threads: Option<usize>) -> Result<Vec<RepOutcome>, rayon::ThreadPoolBuildError> {
    let go = || -> Vec<RepOutcome> {
        (0..config.replications as u64)
            .into_par_iter()
            .map(|r| run_replication(config, r))
            .collect()
    };
    match threads {
        Some(t) => Ok(rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(go)),
        None => Ok(go()),
    }
}
