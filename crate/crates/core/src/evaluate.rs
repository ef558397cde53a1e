//! Runs any roster estimator on one sample with shared fractile settings.

use serde::{Deserialize, Serialize};

use crate::estimators::{
    estimate_tp, estimate_tx_adaptive, estimate_tx_fixed, estimate_ty, estimate_tz, estimate_untrimmed, fractile_p,
    fractile_x, EstimateReport, EstimatorError, EstimatorSpec, FractileSchedule, ZSeries,
};
use crate::sample::Sample;
use crate::tail::{estimate_tzo_with_bias, BiasEstimate};

/// Explicit fractiles that replace the schedule defaults when set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FractileOverrides {
    pub k_n: Option<usize>,
    pub k_x: Option<usize>,
    pub nu: Option<f64>,
    pub k_p: Option<usize>,
    pub k_y: Option<usize>,
}

pub struct Evaluator<'a> {
    pub sample: &'a Sample,
    pub zs: &'a ZSeries,
    pub probs: &'a [f64],
    pub schedule: FractileSchedule,
    pub overrides: FractileOverrides,
    /// Covariate column used by the trim-by-X estimators.
    pub trim_col: Option<usize>,
}

impl Evaluator<'_> {
    pub fn n(&self) -> usize {
        self.zs.n()
    }

    pub fn k_n(&self) -> usize {
        self.overrides.k_n.unwrap_or_else(|| self.schedule.k_n(self.n()))
    }

    /// Default fixed trim-by-X threshold `ln ln n`.
    pub fn nu(&self) -> f64 {
        self.overrides.nu.unwrap_or_else(|| (self.n() as f64).ln().ln())
    }

    fn col(&self, spec: EstimatorSpec) -> Result<usize, EstimatorError> {
        self.trim_col.ok_or_else(|| EstimatorError::NoTrimColumn(spec.to_string()))
    }

    /// Bias-corrected estimate with the fractile search behind it.
    pub fn tzo(&self) -> Result<(EstimateReport, BiasEstimate), EstimatorError> {
        estimate_tzo_with_bias(self.zs, self.k_n(), self.schedule.phi_range)
    }

    pub fn run(&self, spec: EstimatorSpec) -> Result<EstimateReport, EstimatorError> {
        let n = self.n();
        match spec {
            EstimatorSpec::Untrimmed => Ok(estimate_untrimmed(self.zs)),
            EstimatorSpec::TrimZ => estimate_tz(self.zs, self.k_n()),
            EstimatorSpec::TrimZCorrected => self.tzo().map(|(r, _)| r),
            EstimatorSpec::TrimXFixed => estimate_tx_fixed(self.sample, self.zs, self.nu(), self.col(spec)?),
            EstimatorSpec::TrimXAdaptive => {
                let k = self.overrides.k_x.unwrap_or_else(|| fractile_x(n));
                estimate_tx_adaptive(self.sample, self.zs, k, self.col(spec)?)
            }
            EstimatorSpec::TrimXKn => estimate_tx_adaptive(self.sample, self.zs, self.k_n(), self.col(spec)?),
            EstimatorSpec::TrimP(lambda) => {
                let k = self.overrides.k_p.unwrap_or_else(|| fractile_p(n, lambda));
                estimate_tp(self.zs, self.probs, k)
            }
            EstimatorSpec::TrimPHalfKn => {
                let k = ((self.k_n() as f64 / 2.0).round() as usize).max(1);
                estimate_tp(self.zs, self.probs, k)
            }
            EstimatorSpec::TrimY => {
                let k = self.overrides.k_y.unwrap_or_else(|| self.k_n());
                estimate_ty(self.sample, self.zs, k)
            }
        }
    }
}
