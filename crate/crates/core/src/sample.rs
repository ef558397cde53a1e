//! Observation data model, CSV ingestion and validation.

use std::collections::HashSet;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One unit: realized outcome, treatment indicator and covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub treated: bool,
    pub x: Vec<f64>,
}

impl Observation {
    pub fn new(y: f64, treated: bool, x: Vec<f64>) -> Self {
        Self { y, treated, x }
    }

    /// Treatment indicator as 0.0 / 1.0.
    pub fn d(&self) -> f64 {
        if self.treated {
            1.0
        } else {
            0.0
        }
    }
}

/// Column names backing a [`Sample`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColumnNames {
    pub y: String,
    pub d: String,
    pub x: Vec<String>,
}

/// Maps CSV header names onto the outcome, treatment and covariate roles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvSchema {
    pub y: String,
    pub d: String,
    pub x: Vec<String>,
}

impl CsvSchema {
    pub fn new(y: impl Into<String>, d: impl Into<String>, x: &[&str]) -> Self {
        Self {
            y: y.into(),
            d: d.into(),
            x: x.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// An ordered, immutable collection of observations.
///
/// Row order is preserved from ingestion, so observation indices are stable
/// identities.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    observations: Vec<Observation>,
    k: usize,
    column_names: ColumnNames,
}

impl Sample {
    /// Builds a sample, enforcing `n >= 2`, both arms nonempty, a common
    /// covariate dimension and finite values.
    pub fn new(observations: Vec<Observation>, column_names: ColumnNames) -> Result<Self, SampleError> {
        let sample = Self::new_unchecked(observations, column_names)?;
        if let Some(v) = validate(&sample).violations.first() {
            return Err(SampleError::Validation(format!(
                "non-finite {} at row {}",
                v.field, v.row
            )));
        }
        let n = sample.n();
        if n < 2 {
            return Err(SampleError::Validation(format!("need at least 2 observations, got {n}")));
        }
        let treated = sample.treated_count();
        if treated == 0 {
            return Err(SampleError::Validation("treated arm empty".into()));
        }
        if treated == n {
            return Err(SampleError::Validation("control arm empty".into()));
        }
        Ok(sample)
    }

    /// Builds a sample checking only the covariate dimension. Use
    /// [`validate`] to inspect everything else.
    pub fn new_unchecked(
        observations: Vec<Observation>,
        column_names: ColumnNames,
    ) -> Result<Self, SampleError> {
        let k = column_names.x.len();
        if let Some((i, o)) = observations.iter().enumerate().find(|(_, o)| o.x.len() != k) {
            return Err(SampleError::Validation(format!(
                "observation {i} has {} covariates, expected {k}",
                o.x.len()
            )));
        }
        Ok(Self {
            observations,
            k,
            column_names,
        })
    }

    /// Convenience constructor from parallel columns. `x` is row-major.
    pub fn from_columns(y: &[f64], d: &[bool], x: &[Vec<f64>], x_names: &[&str]) -> Result<Self, SampleError> {
        if y.len() != d.len() || y.len() != x.len() {
            return Err(SampleError::Validation("column lengths differ".into()));
        }
        let observations = y
            .iter()
            .zip(d)
            .zip(x)
            .map(|((&y, &d), x)| Observation::new(y, d, x.clone()))
            .collect();
        Self::new(
            observations,
            ColumnNames {
                y: "y".into(),
                d: "d".into(),
                x: x_names.iter().map(|s| s.to_string()).collect(),
            },
        )
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    /// Covariate dimension.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn column_names(&self) -> &ColumnNames {
        &self.column_names
    }

    pub fn treated_count(&self) -> usize {
        self.observations.iter().filter(|o| o.treated).count()
    }

    pub fn y(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.y)
    }

    /// Values of covariate column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(move |o| o.x[j])
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.x.iter().position(|c| c == name)
    }
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize, SampleError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| SampleError::Schema(format!("missing column '{name}'")))
}

fn parse_real(field: Option<&str>, row: usize, column: &str) -> Result<f64, SampleError> {
    let raw = field
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| SampleError::Parse {
            row,
            message: format!("missing value in column '{column}'"),
        })?;
    let value: f64 = raw.parse().map_err(|_| SampleError::Parse {
        row,
        message: format!("non-numeric value '{raw}' in column '{column}'"),
    })?;
    if !value.is_finite() {
        return Err(SampleError::Parse {
            row,
            message: format!("non-finite value '{raw}' in column '{column}'"),
        });
    }
    Ok(value)
}

/// Reads a comma-separated file with a header row.
///
/// Row numbers in errors count data rows from 1 (the header is row 0).
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Sample, SampleError> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<Sample, SampleError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let iy = header_index(&headers, &schema.y)?;
    let id = header_index(&headers, &schema.d)?;
    let ix = schema
        .x
        .iter()
        .map(|c| header_index(&headers, c))
        .collect::<Result<Vec<_>, _>>()?;

    let mut observations = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let y = parse_real(record.get(iy), row, &schema.y)?;
        let treated = match record.get(id).map(str::trim) {
            Some("1") => true,
            Some("0") => false,
            Some(other) => {
                return Err(SampleError::Parse {
                    row,
                    message: format!("treatment '{other}' is not 0 or 1"),
                })
            }
            None => {
                return Err(SampleError::Parse {
                    row,
                    message: format!("missing value in column '{}'", schema.d),
                })
            }
        };
        let x = ix
            .iter()
            .zip(&schema.x)
            .map(|(&j, name)| parse_real(record.get(j), row, name))
            .collect::<Result<Vec<_>, _>>()?;
        observations.push(Observation::new(y, treated, x));
    }
    Sample::new(
        observations,
        ColumnNames {
            y: schema.y.clone(),
            d: schema.d.clone(),
            x: schema.x.clone(),
        },
    )
}

/// Reads a single numeric column, e.g. externally supplied propensity scores.
pub fn load_column(path: impl AsRef<Path>, name: &str) -> Result<Vec<f64>, SampleError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let j = header_index(&headers, name)?;
    rdr.records()
        .enumerate()
        .map(|(r, rec)| parse_real(rec?.get(j), r + 1, name))
        .collect()
}

/// Writes the sample back out with 17 significant digits per value.
pub fn write_csv<W: std::io::Write>(sample: &Sample, writer: W) -> Result<(), SampleError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let names = sample.column_names();
    let mut header = vec![names.y.clone(), names.d.clone()];
    header.extend(names.x.iter().cloned());
    wtr.write_record(&header)?;
    for o in sample.observations() {
        let mut rec = vec![format!("{:.16e}", o.y), if o.treated { "1" } else { "0" }.to_string()];
        rec.extend(o.x.iter().map(|v| format!("{v:.16e}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub row: usize,
    pub field: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub treated: usize,
    pub control: usize,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.warnings.is_empty()
    }
}

/// Reports arm counts, non-finite values, constant covariate columns and
/// duplicate rows. Rows are 0-based observation indices.
pub fn validate(sample: &Sample) -> ValidationReport {
    let names = sample.column_names();
    let mut report = ValidationReport {
        treated: sample.treated_count(),
        control: sample.n() - sample.treated_count(),
        ..Default::default()
    };
    for (i, o) in sample.observations().iter().enumerate() {
        if !o.y.is_finite() {
            report.violations.push(Violation {
                row: i,
                field: names.y.clone(),
            });
        }
        for (v, name) in o.x.iter().zip(&names.x) {
            if !v.is_finite() {
                report.violations.push(Violation {
                    row: i,
                    field: name.clone(),
                });
            }
        }
    }

    let constant: Vec<&str> = (0..sample.k())
        .filter(|&j| {
            let mut col = sample.column(j);
            match col.next() {
                Some(first) => col.all(|v| v == first),
                None => false,
            }
        })
        .map(|j| names.x[j].as_str())
        .collect();
    if constant.len() > 1 {
        report
            .warnings
            .push(format!("collinear constant columns: {}", constant.join(", ")));
    }

    let mut seen = HashSet::new();
    let mut duplicates = 0usize;
    for o in sample.observations() {
        let mut key = vec![o.y.to_bits(), o.treated as u64];
        key.extend(o.x.iter().map(|v| v.to_bits()));
        if !seen.insert(key) {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        report.warnings.push(format!("{duplicates} duplicate rows"));
    }
    if report.treated == 0 {
        report.warnings.push("treated arm empty".into());
    }
    if report.control == 0 {
        report.warnings.push("control arm empty".into());
    }
    report
}
