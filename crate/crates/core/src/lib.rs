//! Tail-trimmed inverse-probability-weighted estimation of average treatment
//! effects, with tail-index bias correction, plug-in inference and a Monte
//! Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod estimators;
pub mod evaluate;
pub mod inference;
pub mod montecarlo;
pub mod propensity;
pub mod sample;
pub mod special;
pub mod tail;

pub use estimators::{EstimateReport, EstimatorError, EstimatorSpec, FractileSchedule, ZSeries};
pub use evaluate::{Evaluator, FractileOverrides};
pub use inference::{InferenceError, InferenceReport};
pub use propensity::{fit_mle, LinkFamily, MleOptions, Propensities, PropensityError, PropensityFit};
pub use sample::{CsvSchema, Sample, SampleError};
pub use tail::{BiasEstimate, TailError, TailFit};
