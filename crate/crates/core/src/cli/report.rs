use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;

use super::{runtime, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Summary JSON written by `simulate`.
    #[arg(long)]
    pub summary: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    pub format: Format,
    /// Reference values in the same layout; adds deviation columns.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Output path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct Table {
    scenarios: Vec<Scenario>,
}

#[derive(Debug, Deserialize)]
struct Scenario {
    name: String,
    rows: Vec<Row>,
}

#[derive(Debug, Default, Deserialize)]
struct Row {
    estimator: String,
    mean: Option<f64>,
    median: Option<f64>,
    rmse: Option<f64>,
    ks_ratio: Option<f64>,
    trim_pct: Option<f64>,
    rej01: Option<f64>,
    rej05: Option<f64>,
    rej10: Option<f64>,
    failed_reps: Option<f64>,
}

const METRICS: [&str; 9] = ["Mean", "Med", "RMSE", "KS", "Tr%", "Rej1%", "Rej5%", "Rej10%", "Failed"];

impl Row {
    fn metrics(&self) -> [Option<f64>; 9] {
        [
            self.mean,
            self.median,
            self.rmse,
            self.ks_ratio,
            self.trim_pct,
            self.rej01,
            self.rej05,
            self.rej10,
            self.failed_reps,
        ]
    }
}

fn read(path: &PathBuf) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cell(v: Option<f64>, col: usize) -> String {
    match v {
        None => String::new(),
        Some(v) if col == 8 => format!("{v}"),
        Some(v) if col == 4 => format!("{v:.1}"),
        Some(v) if (5..8).contains(&col) => format!("{v:.3}"),
        Some(v) => format!("{v:.4}"),
    }
}

fn render(header: &[String], rows: &[Vec<String>], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Markdown => {
            out += &format!("| {} |\n", header.join(" | "));
            out += &format!("|{}\n", "---|".repeat(header.len()));
            for r in rows {
                out += &format!("| {} |\n", r.join(" | "));
            }
        }
        Format::Text => {
            let widths: Vec<usize> = (0..header.len())
                .map(|j| rows.iter().map(|r| r[j].chars().count()).chain([header[j].chars().count()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| {
                let parts: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(j, (c, &w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                parts.join("  ").trim_end().to_string() + "\n"
            };
            out += &line(header);
            for r in rows {
                out += &line(r);
            }
        }
    }
    out
}

pub fn run(args: ReportArgs) -> Result<(), CliError> {
    let summary = read(&args.summary)?;
    if summary.scenarios.iter().all(|s| s.rows.is_empty()) {
        return Err(runtime(format!("{}: summary has no rows", args.summary.display())));
    }
    let reference: Option<HashMap<(String, String), Row>> = match &args.compare {
        Some(p) => Some(
            read(p)?
                .scenarios
                .into_iter()
                .flat_map(|s| {
                    let name = s.name;
                    s.rows.into_iter().map(move |r| ((name.clone(), r.estimator.clone()), r))
                })
                .collect(),
        ),
        None => None,
    };

    let mut header: Vec<String> = std::iter::once("Estimator".to_string())
        .chain(METRICS.iter().map(|m| m.to_string()))
        .collect();
    if reference.is_some() {
        header.extend(METRICS.iter().map(|m| format!("Δ{m}")));
    }

    let mut out = String::new();
    for s in &summary.scenarios {
        let rows: Vec<Vec<String>> = s
            .rows
            .iter()
            .map(|r| {
                let vals = r.metrics();
                let mut cells: Vec<String> = std::iter::once(r.estimator.clone())
                    .chain(vals.iter().enumerate().map(|(j, v)| cell(*v, j)))
                    .collect();
                if let Some(refs) = &reference {
                    let other = refs.get(&(s.name.clone(), r.estimator.clone())).map(Row::metrics);
                    cells.extend((0..METRICS.len()).map(|j| {
                        let d = match (vals[j], other.and_then(|o| o[j])) {
                            (Some(a), Some(b)) => Some(a - b),
                            _ => None,
                        };
                        cell(d, j)
                    }));
                }
                cells
            })
            .collect();
        match args.format {
            Format::Markdown => out += &format!("### {}\n\n", s.name),
            Format::Text => out += &format!("{}\n", s.name),
        }
        out += &render(&header, &rows, args.format);
        out += "\n";
    }
    match &args.out {
        Some(p) => std::fs::write(p, out).map_err(|e| runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}
