//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime errors (bad data, failed fits,
//! malformed files), 2 on usage errors and infeasible configurations.

mod estimate;
mod report;
mod simulate;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::estimators::FractileSchedule;
use crate::evaluate::FractileOverrides;

pub use estimate::EstimateArgs;
pub use report::ReportArgs;
pub use simulate::SimulateArgs;

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Usage(String),
    /// Exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

pub(crate) fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub(crate) fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "tailtrim", version, about = "Tail-trimmed IPW treatment effect estimation and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the average treatment effect from a CSV file.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo scenario and write summary tables.
    Simulate(SimulateArgs),
    /// Render summary JSON as a table, optionally against reference values.
    Report(ReportArgs),
}

/// Fractile settings shared by `estimate` and `simulate`.
#[derive(Debug, Clone, Args)]
pub struct FractileArgs {
    /// Scale of the trimming fractile k_n = round(lambda_k (ln n)^(1 - iota)).
    #[arg(long, default_value_t = 0.25)]
    pub lambda_k: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub iota: f64,
    /// Range for the tail fractile search, as LO,HI in units of ln n.
    #[arg(long, default_value = "2,16", value_parser = parse_range)]
    pub phi_range: (f64, f64),
    /// Fixed trimming fractile, replacing the k_n schedule.
    #[arg(long)]
    pub k_n: Option<usize>,
    /// Adaptive trim-by-X fractile (default round(2n / ln n)).
    #[arg(long)]
    pub k_x: Option<usize>,
    /// Fixed trim-by-X threshold (default ln ln n).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Trim-by-p fractile for every tp:lambda estimator.
    #[arg(long)]
    pub k_p: Option<usize>,
    /// Trim-by-Y fractile (default k_n).
    #[arg(long)]
    pub k_y: Option<usize>,
}

impl FractileArgs {
    pub fn schedule(&self) -> FractileSchedule {
        FractileSchedule {
            lambda_k: self.lambda_k,
            iota: self.iota,
            phi_range: self.phi_range,
        }
    }

    pub fn overrides(&self) -> FractileOverrides {
        FractileOverrides {
            k_n: self.k_n,
            k_x: self.k_x,
            nu: self.nu,
            k_p: self.k_p,
            k_y: self.k_y,
        }
    }

    /// Whether any flag differs from the built-in defaults.
    pub fn is_default(&self) -> bool {
        self.schedule() == FractileSchedule::default() && self.overrides() == FractileOverrides::default()
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(format!("need 0 < LO <= HI, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(a) => estimate::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Report(a) => report::run(a),
    }
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

/// Pretty JSON with a trailing newline.
pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(runtime)?;
    s.push('\n');
    Ok(s)
}
