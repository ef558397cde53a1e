use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use super::{runtime, to_json, usage, CliError, FractileArgs};
use crate::estimators::{EstimateReport, EstimatorSpec, ZSeries};
use crate::evaluate::Evaluator;
use crate::inference::{infer, InferenceReport};
use crate::propensity::{fit_mle, LinkFamily, MleOptions, Propensities, PropensityFit};
use crate::sample::{load_column, load_csv, CsvSchema, Sample};
use crate::tail::BiasEstimate;

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Outcome column.
    #[arg(long)]
    pub y: String,
    /// Treatment indicator column (0/1).
    #[arg(long)]
    pub d: String,
    /// Covariate columns for the propensity model, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<String>,
    /// Prepend a constant column to the covariates.
    #[arg(long)]
    pub intercept: bool,
    #[arg(long, default_value = "logit")]
    pub link: LinkFamily,
    /// Estimators to run, comma separated (untrimmed, tz, tzo, tx, tx-kx,
    /// tx-kn, tp:LAMBDA, tp-kn, ty). Defaults to the full roster.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Vec<EstimatorSpec>,
    /// Column holding known treatment probabilities; skips the model fit.
    #[arg(long)]
    pub known_propensity: Option<String>,
    /// Covariate used by the trim-by-X estimators (default: first covariate).
    #[arg(long)]
    pub trim_col: Option<String>,
    /// Confidence level for the bias-corrected estimate's interval.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Null value for the t-statistic.
    #[arg(long, default_value_t = 0.0)]
    pub null: f64,
    /// Output JSON path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub fractiles: FractileArgs,
}

#[derive(Serialize)]
struct Propensity<'a> {
    mode: &'static str,
    column: Option<&'a str>,
    fit: Option<&'a PropensityFit>,
}

#[derive(Serialize)]
struct LabelledEstimate {
    spec: String,
    label: String,
    #[serde(flatten)]
    report: EstimateReport,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    n: usize,
    treated: usize,
    covariates: &'a [String],
    link: LinkFamily,
    propensity: Propensity<'a>,
    k_n: usize,
    mean_z: f64,
    estimates: Vec<LabelledEstimate>,
    bias: Option<BiasEstimate>,
    inference: Option<InferenceReport>,
    inference_error: Option<String>,
}

fn load(args: &EstimateArgs) -> Result<Sample, CliError> {
    let xs: Vec<&str> = args.x.iter().map(String::as_str).collect();
    let schema = CsvSchema::new(&args.y, &args.d, &xs);
    let sample = load_csv(&args.data, &schema).map_err(runtime)?;
    if !args.intercept {
        return Ok(sample);
    }
    let mut names = sample.column_names().clone();
    names.x.insert(0, "const".into());
    let obs = sample
        .observations()
        .iter()
        .map(|o| {
            let mut o = o.clone();
            o.x.insert(0, 1.0);
            o
        })
        .collect();
    Sample::new(obs, names).map_err(runtime)
}

pub fn run(args: EstimateArgs) -> Result<(), CliError> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(usage(format!("--level must be in (0, 1), got {}", args.level)));
    }
    let sample = load(&args)?;
    let n = sample.n();

    let (probs, fit) = match &args.known_propensity {
        Some(col) => {
            let p = load_column(&args.data, col).map_err(runtime)?;
            if p.len() != n {
                return Err(runtime(format!("column {col} has {} values, sample has {n}", p.len())));
            }
            if let Some(i) = p.iter().position(|v| !(*v > 0.0 && *v < 1.0)) {
                return Err(runtime(format!("known propensity at data row {} is not in (0, 1)", i + 1)));
            }
            (Propensities::from_probs(p), None)
        }
        None => {
            if sample.k() == 0 {
                return Err(usage("no covariates: pass --x and/or --intercept, or --known-propensity"));
            }
            let init = vec![0.0; sample.k()];
            let fit = fit_mle(&sample, args.link, &init, &MleOptions::default()).map_err(runtime)?;
            for w in &fit.warnings {
                eprintln!("warning: {w}");
            }
            (fit.propensities.clone(), Some(fit))
        }
    };
    let zs = ZSeries::new(&sample, &probs).map_err(runtime)?;

    let trim_col = match &args.trim_col {
        Some(name) => Some(
            sample
                .column_index(name)
                .ok_or_else(|| usage(format!("--trim-col {name} is not among the covariates")))?,
        ),
        None => (0..sample.k()).find(|&j| sample.column_names().x[j] != "const"),
    };
    let ev = Evaluator {
        sample: &sample,
        zs: &zs,
        probs: probs.p(),
        schedule: args.fractiles.schedule(),
        overrides: args.fractiles.overrides(),
        trim_col,
    };
    let k_n = ev.k_n();
    if k_n == 0 || k_n >= n {
        return Err(usage(format!("trimming fractile {k_n} is infeasible for n = {n}")));
    }

    let specs = if args.estimators.is_empty() {
        EstimatorSpec::roster()
    } else {
        args.estimators.clone()
    };
    let mut estimates = Vec::with_capacity(specs.len());
    for spec in specs {
        let report = ev.run(spec).map_err(|e| usage(format!("{spec}: {e}")))?;
        estimates.push(LabelledEstimate {
            spec: spec.to_string(),
            label: spec.label(),
            report,
        });
    }

    let (tzo, bias) = ev.tzo().map_err(usage)?;
    let (inference, inference_error) = match infer(
        &sample,
        fit.as_ref(),
        &zs,
        k_n,
        tzo.bias_correction,
        tzo.theta_hat,
        args.null,
        args.level,
    ) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let report = Report {
        schema_version: crate::montecarlo::SCHEMA_VERSION,
        n,
        treated: sample.treated_count(),
        covariates: &sample.column_names().x,
        link: fit.as_ref().map_or(args.link, |f| f.family),
        propensity: Propensity {
            mode: if fit.is_some() { "estimated" } else { "known" },
            column: args.known_propensity.as_deref(),
            fit: fit.as_ref(),
        },
        k_n,
        mean_z: zs.mean_z,
        estimates,
        bias: Some(bias),
        inference,
        inference_error,
    };
    let json = to_json(&report)?;
    match &args.out {
        Some(path) => std::fs::write(path, json).map_err(|e| runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
