//! Across-replication metrics: mean, median, root mean square about zero,
//! Kolmogorov-Smirnov normality ratio, t-test rejection frequencies and the
//! average share trimmed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ScenarioConfig;
use super::study::RepOutcome;
use crate::special::{normal_cdf, two_sided_critical};

pub const SCHEMA_VERSION: u32 = 1;

/// Asymptotic 5% critical value of `sqrt(R) D_R`.
pub const KS_CRITICAL_05: f64 = 1.358;

pub const TEST_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Error, PartialEq)]
pub enum SummaryError {
    #[error("need ≥ 2 successful replications, got {0}")]
    TooFew(usize),
    #[error("scale is zero; normality ratio undefined")]
    DegenerateScale,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: String,
    pub spec: String,
    pub mean: f64,
    pub median: f64,
    pub rmse: f64,
    /// Absent when every estimate is zero.
    pub ks_ratio: Option<f64>,
    pub trim_pct: f64,
    pub rej01: f64,
    pub rej05: f64,
    pub rej10: f64,
    pub failed_reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub config: ScenarioConfig,
    pub successful_reps: usize,
    pub failed_reps: usize,
    /// Failure reasons with their counts.
    pub failures: BTreeMap<String, usize>,
    pub rows: Vec<SummaryRow>,
    /// Rejection frequencies of the bias-corrected estimator's own
    /// plug-in t-test at the 1%, 5% and 10% levels.
    pub plugin_rejections: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub schema_version: u32,
    pub scenarios: Vec<ScenarioSummary>,
}

impl SummaryFile {
    pub fn new(scenarios: Vec<ScenarioSummary>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenarios,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Kolmogorov-Smirnov distance between `estimates / s_n` and the standard
/// normal, divided by its asymptotic 5% critical value `1.358 / sqrt(R)`.
pub fn ks_normality_ratio(estimates: &[f64], s_n: f64) -> Result<f64, SummaryError> {
    let r = estimates.len();
    if r < 2 {
        return Err(SummaryError::TooFew(r));
    }
    if !(s_n > 0.0) {
        return Err(SummaryError::DegenerateScale);
    }
    let mut std: Vec<f64> = estimates.iter().map(|v| v / s_n).collect();
    std.sort_by(f64::total_cmp);
    let rf = r as f64;
    let d = std
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            ((i + 1) as f64 / rf - f).max(f - i as f64 / rf)
        })
        .fold(0.0, f64::max);
    Ok(d / (KS_CRITICAL_05 / rf.sqrt()))
}

/// Share of `|t| > z` at each level in `TEST_LEVELS`.
fn rejections(stats: impl Iterator<Item = f64> + Clone, count: usize) -> [f64; 3] {
    TEST_LEVELS.map(|a| {
        let z = two_sided_critical(a);
        stats.clone().filter(|t| t.abs() > z).count() as f64 / count as f64
    })
}

pub fn summarize(config: &ScenarioConfig, outcomes: &[RepOutcome]) -> Result<ScenarioSummary, SummaryError> {
    let ok: Vec<_> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failed = outcomes.len() - ok.len();
    if ok.len() < 2 {
        return Err(SummaryError::TooFew(ok.len()));
    }
    let mut failures = BTreeMap::new();
    for f in outcomes.iter().filter_map(|o| o.as_ref().err()) {
        *failures.entry(f.reason.clone()).or_insert(0) += 1;
    }
    let r = ok.len() as f64;
    let n = config.n as f64;
    let rows = config
        .estimators
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let mut theta: Vec<f64> = ok.iter().map(|rep| rep.estimates[j].theta).collect();
            let mean = theta.iter().sum::<f64>() / r;
            let rmse = (theta.iter().map(|t| t * t).sum::<f64>() / r).sqrt();
            let trim_pct = 100.0 * ok.iter().map(|rep| rep.estimates[j].trimmed as f64 / n).sum::<f64>() / r;
            let ks_ratio = ks_normality_ratio(&theta, rmse).ok();
            let [rej01, rej05, rej10] = if rmse > 0.0 {
                rejections(theta.iter().map(|t| t / rmse), ok.len())
            } else {
                [0.0; 3]
            };
            SummaryRow {
                estimator: spec.label(),
                spec: spec.to_string(),
                mean,
                median: median(&mut theta),
                rmse,
                ks_ratio,
                trim_pct,
                rej01,
                rej05,
                rej10,
                failed_reps: failed,
            }
        })
        .collect();
    let plugin_t: Vec<f64> = ok.iter().filter_map(|rep| rep.plugin_t).collect();
    let plugin_rejections = (!plugin_t.is_empty()).then(|| rejections(plugin_t.iter().copied(), plugin_t.len()));
    Ok(ScenarioSummary {
        name: config.name.clone(),
        config: config.clone(),
        successful_reps: ok.len(),
        failed_reps: failed,
        failures,
        rows,
        plugin_rejections,
    })
}

/// One CSV row per scenario and estimator.
pub fn write_summary_csv<W: std::io::Write>(summaries: &[ScenarioSummary], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "scenario",
        "estimator",
        "mean",
        "median",
        "rmse",
        "ks_ratio",
        "trim_pct",
        "rej01",
        "rej05",
        "rej10",
        "failed_reps",
    ])?;
    for s in summaries {
        for row in &s.rows {
            w.write_record([
                s.name.clone(),
                row.estimator.clone(),
                row.mean.to_string(),
                row.median.to_string(),
                row.rmse.to_string(),
                row.ks_ratio.map_or_else(String::new, |v| v.to_string()),
                row.trim_pct.to_string(),
                row.rej01.to_string(),
                row.rej05.to_string(),
                row.rej10.to_string(),
                row.failed_reps.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorSpec;
    use crate::montecarlo::study::{RepEstimate, RepFailure, Replication};

    fn outcomes(thetas: &[f64]) -> Vec<RepOutcome> {
        thetas
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                Ok(Replication {
                    rep_index: i as u64,
                    estimates: vec![RepEstimate { theta: t, trimmed: 1 }],
                    plugin_t: None,
                })
            })
            .collect()
    }

    fn config() -> ScenarioConfig {
        let mut c = ScenarioConfig::new("s", 1.0, 100);
        c.estimators = vec![EstimatorSpec::TrimZ];
        c
    }

    #[test]
    fn all_zero() {
        let s = summarize(&config(), &outcomes(&[0.0; 10])).unwrap();
        let row = &s.rows[0];
        assert_eq!((row.mean, row.median, row.rmse), (0.0, 0.0, 0.0));
        assert_eq!((row.rej01, row.rej05, row.rej10), (0.0, 0.0, 0.0));
        assert_eq!(row.ks_ratio, None);
        assert_eq!(row.trim_pct, 1.0);
    }

    #[test]
    fn plus_minus_one() {
        let s = summarize(&config(), &outcomes(&[-1.0, 1.0, -1.0, 1.0])).unwrap();
        let row = &s.rows[0];
        assert_eq!((row.mean, row.median, row.rmse), (0.0, 0.0, 1.0));
    }

    #[test]
    fn failures_are_counted_and_excluded() {
        let mut o = outcomes(&[1.0, 3.0]);
        o.push(Err(RepFailure {
            rep_index: 2,
            reason: "separation".into(),
        }));
        let s = summarize(&config(), &o).unwrap();
        assert_eq!((s.successful_reps, s.failed_reps), (2, 1));
        assert_eq!(s.failures["separation"], 1);
        assert_eq!(s.rows[0].mean, 2.0);
        assert_eq!(s.rows[0].median, 2.0);
        assert!(matches!(summarize(&config(), &o[1..]), Err(SummaryError::TooFew(1))));
    }

    #[test]
    fn ks_degenerate_cases() {
        let zeros = vec![0.0; 10_000];
        let ratio = ks_normality_ratio(&zeros, 1.0).unwrap();
        assert!((ratio - 0.5 / (1.358 / 100.0)).abs() < 1e-9);
        assert!((ratio - 36.82).abs() < 0.01);
        assert_eq!(ks_normality_ratio(&zeros, 0.0), Err(SummaryError::DegenerateScale));
    }

    #[test]
    fn csv_layout() {
        let s = summarize(&config(), &outcomes(&[1.0, -1.0])).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&[s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,estimator,mean,median,rmse,ks_ratio,trim_pct,rej01,rej05,rej10,failed_reps"
        );
        assert!(lines.next().unwrap().starts_with("s,TT(Z),0,0,1,"));
    }
}
