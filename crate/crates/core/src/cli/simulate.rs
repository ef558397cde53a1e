use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use super::{runtime, to_json, usage, CliError, FractileArgs};
use crate::montecarlo::{run_study, summarize, write_summary_csv, ScenarioFile, ScenarioSummary, SummaryFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Symmetric benchmark grid with known propensity.
    #[value(name = "table1a", alias = "1a")]
    Table1a,
    /// Intercept in the treatment index, known propensity.
    Asymmetric,
    /// Fitted propensity model.
    Estimated,
}

impl Preset {
    pub fn source(self) -> &'static str {
        match self {
            Preset::Table1a => include_str!("../../presets/table1a.toml"),
            Preset::Asymmetric => include_str!("../../presets/asymmetric.toml"),
            Preset::Estimated => include_str!("../../presets/estimated.toml"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario grid.
    #[arg(long, visible_alias = "table")]
    pub preset: Option<Preset>,
    /// Sample size for every scenario.
    #[arg(long)]
    pub n: Option<usize>,
    /// Replications per scenario.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, env = "TAILTRIM_SEED")]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, env = "TAILTRIM_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Apply the fractile flags below instead of the scenario's own settings.
    #[arg(long)]
    pub override_fractiles: bool,
    #[command(flatten)]
    pub fractiles: FractileArgs,
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn csv_bytes(summaries: &[ScenarioSummary]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_summary_csv(summaries, &mut buf).map_err(runtime)?;
    Ok(buf)
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let text = match (&args.scenario, args.preset) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?,
        (None, Some(p)) => p.source().to_string(),
        (None, None) => return Err(usage("one of --scenario or --preset is required")),
    };
    let mut file = ScenarioFile::parse(&text).map_err(runtime)?;
    if let Some(n) = args.n {
        file.set_n(n);
    }
    if let Some(r) = args.reps {
        file.set_replications(r);
    }
    if let Some(s) = args.seed {
        file.set_seed(s);
    }
    if args.override_fractiles || !args.fractiles.is_default() {
        file.scenario.fractiles = args.fractiles.schedule();
        file.scenario.overrides = args.fractiles.overrides();
    }
    if args.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let scenarios = file.expand().map_err(runtime)?;

    std::fs::create_dir_all(&args.out).map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;
    let mut all = Vec::with_capacity(scenarios.len());
    for cfg in &scenarios {
        eprintln!("{}: {} replications of n = {}", cfg.name, cfg.replications, cfg.n);
        let outcomes = run_study(cfg, args.threads).map_err(runtime)?;
        let summary = summarize(cfg, &outcomes).map_err(|e| runtime(format!("{}: {e}", cfg.name)))?;
        if summary.failed_reps > 0 {
            eprintln!("  {} replications failed and were excluded", summary.failed_reps);
        }
        let one = std::slice::from_ref(&summary);
        write(&args.out.join(format!("{}.json", cfg.name)), to_json(&SummaryFile::new(one.to_vec()))?.as_bytes())?;
        write(&args.out.join(format!("{}.csv", cfg.name)), &csv_bytes(one)?)?;
        all.push(summary);
    }
    write(&args.out.join("summary.csv"), &csv_bytes(&all)?)?;
    write(&args.out.join("summary.json"), to_json(&SummaryFile::new(all))?.as_bytes())?;
    Ok(())
}
