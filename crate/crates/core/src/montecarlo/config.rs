//! Scenario description for the simulation study, read from TOML.
//!
//! A file holds one `[scenario]` table and an optional `[grid]` table whose
//! list-valued keys expand the base scenario into a cross product. Expanded
//! scenarios are named `<name>-<distribution label>-b<beta>-n<n>`, with a
//! part only present when that key is gridded.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::variates::Distribution;
use crate::estimators::{EstimatorSpec, FractileSchedule};
use crate::evaluate::FractileOverrides;
use crate::propensity::LinkFamily;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse scenario file: {0}")]
    Parse(String),
    #[error("invalid scenario '{name}': {reason}")]
    Invalid { name: String, reason: String },
}

/// Covariate layout and treatment index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// One covariate, index `beta x`.
    #[serde(alias = "case1")]
    Scalar,
    /// One covariate, index `alpha + beta x`.
    #[serde(alias = "case2")]
    ScalarWithConstant,
    /// Bernoulli(.3) `b`, continuous `x` and `x^2`; index `.5 b + beta x + beta/2 x^2`.
    #[serde(alias = "case3")]
    Multivariate3,
    /// As `Multivariate3` with intercept `alpha`.
    #[serde(alias = "case4")]
    Multivariate4,
}

impl Case {
    pub fn default_alpha(self) -> f64 {
        match self {
            Case::Scalar | Case::Multivariate3 => 0.0,
            Case::ScalarWithConstant | Case::Multivariate4 => 0.25,
        }
    }

    pub fn is_multivariate(self) -> bool {
        matches!(self, Case::Multivariate3 | Case::Multivariate4)
    }

    /// Design column names; a constant is always included.
    pub fn column_names(self) -> &'static [&'static str] {
        if self.is_multivariate() {
            &["const", "x1", "x2", "x3"]
        } else {
            &["const", "x"]
        }
    }

    /// Design column of the continuous covariate used for trim-by-X.
    pub fn trim_column(self) -> usize {
        if self.is_multivariate() {
            2
        } else {
            1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropensityMode {
    /// Estimators use the true treatment probabilities.
    Known,
    /// Probabilities come from a maximum likelihood fit of the correct link.
    Estimated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_case")]
    pub case: Case,
    /// Intercept of the treatment index; the case default when absent.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub beta: f64,
    #[serde(default = "default_dist")]
    pub dist_outcomes: Distribution,
    #[serde(default = "default_dist")]
    pub dist_x: Distribution,
    #[serde(default = "default_dist")]
    pub dist_u: Distribution,
    pub n: usize,
    #[serde(default = "default_mode")]
    pub propensity_mode: PropensityMode,
    /// Must match `dist_u` when given.
    #[serde(default)]
    pub link: Option<LinkFamily>,
    #[serde(default = "EstimatorSpec::roster")]
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default)]
    pub fractiles: FractileSchedule,
    #[serde(default)]
    pub overrides: FractileOverrides,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub replications: usize,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_case() -> Case {
    Case::Scalar
}
fn default_dist() -> Distribution {
    Distribution::StdNormal
}
fn default_mode() -> PropensityMode {
    PropensityMode::Known
}
fn default_reps() -> usize {
    10_000
}

impl ScenarioConfig {
    /// Gaussian scalar design with the default roster.
    pub fn new(name: impl Into<String>, beta: f64, n: usize) -> Self {
        Self {
            name: name.into(),
            case: Case::Scalar,
            alpha: None,
            beta,
            dist_outcomes: Distribution::StdNormal,
            dist_x: Distribution::StdNormal,
            dist_u: Distribution::StdNormal,
            n,
            propensity_mode: PropensityMode::Known,
            link: None,
            estimators: EstimatorSpec::roster(),
            fractiles: FractileSchedule::default(),
            overrides: FractileOverrides::default(),
            seed: 0,
            replications: default_reps(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| self.case.default_alpha())
    }

    pub fn link(&self) -> LinkFamily {
        self.link.unwrap_or_else(|| self.dist_u.link())
    }

    /// True coefficients on the design columns.
    pub fn gamma0(&self) -> Vec<f64> {
        if self.case.is_multivariate() {
            vec![self.alpha(), 0.5, self.beta, self.beta / 2.0]
        } else {
            vec![self.alpha(), self.beta]
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |reason: String| {
            Err(ConfigError::Invalid {
                name: self.name.clone(),
                reason,
            })
        };
        if self.replications < 2 {
            return fail("need ≥ 2 replications".into());
        }
        if self.n < 10 {
            return fail(format!("sample size {} is below the minimum of 10", self.n));
        }
        if !self.beta.is_finite() || !self.alpha().is_finite() {
            return fail("alpha and beta must be finite".into());
        }
        if self.link() != self.dist_u.link() {
            return fail(format!(
                "link {} does not match the {} assignment error",
                self.link(),
                self.dist_u
            ));
        }
        if self.estimators.is_empty() {
            return fail("no estimators configured".into());
        }
        let (lo, hi) = self.fractiles.phi_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return fail(format!("phi range ({lo}, {hi}) is not an interval of positive reals"));
        }
        if !(self.fractiles.lambda_k > 0.0 && self.fractiles.lambda_k.is_finite()) {
            return fail("lambda_k must be positive".into());
        }
        Ok(())
    }
}

/// Labelled distribution triple for grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSet {
    pub outcomes: Distribution,
    pub x: Distribution,
    pub u: Distribution,
    #[serde(default)]
    pub label: Option<String>,
}

impl DistributionSet {
    fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("{}-{}-u{}", self.outcomes, self.x, self.u))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub distributions: Option<Vec<DistributionSet>>,
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default)]
    pub n: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub grid: Option<Grid>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Fixes the sample size for every expanded scenario.
    pub fn set_n(&mut self, n: usize) {
        self.scenario.n = n;
        if let Some(g) = self.grid.as_mut().and_then(|g| g.n.as_mut()) {
            *g = vec![n];
        }
    }

    pub fn set_replications(&mut self, reps: usize) {
        self.scenario.replications = reps;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.scenario.seed = seed;
    }

    /// Cross product of the grid, validated, in file order.
    pub fn expand(&self) -> Result<Vec<ScenarioConfig>, ConfigError> {
        let grid = self.grid.clone().unwrap_or_default();
        let base = &self.scenario;
        let dists: Vec<Option<&DistributionSet>> = match &grid.distributions {
            Some(d) => d.iter().map(Some).collect(),
            None => vec![None],
        };
        let betas: Vec<Option<f64>> = grid.beta.as_ref().map_or(vec![None], |b| b.iter().copied().map(Some).collect());
        let ns: Vec<Option<usize>> = grid.n.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
        let mut out = Vec::new();
        for d in &dists {
            for &b in &betas {
                for &n in &ns {
                    let mut cfg = base.clone();
                    let mut name = base.name.clone();
                    if let Some(d) = d {
                        cfg.dist_outcomes = d.outcomes;
                        cfg.dist_x = d.x;
                        cfg.dist_u = d.u;
                        let _ = write!(name, "-{}", d.label());
                    }
                    if let Some(b) = b {
                        cfg.beta = b;
                        let _ = write!(name, "-b{b}");
                    }
                    if let Some(n) = n {
                        cfg.n = n;
                        let _ = write!(name, "-n{n}");
                    }
                    cfg.name = name;
                    cfg.validate()?;
                    out.push(cfg);
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        out.retain(|c| seen.insert(c.name.clone()));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = r#"
[scenario]
name = "demo"
beta = 0.25
n = 100
seed = 7
replications = 50
estimators = ["untrimmed", "tz", "tzo"]

[scenario.fractiles]
lambda_k = 0.25
iota = 1e-10
phi_range = [2.0, 16.0]

[grid]
beta = [0.25, 2.0]
n = [100, 250]
distributions = [
  { outcomes = "normal", x = "normal", u = "normal", label = "normal" },
  { outcomes = "normal", x = "normal", u = "laplace" },
]
"#;

    #[test]
    fn grid_expands_in_order() {
        let f = ScenarioFile::parse(FILE).unwrap();
        let all = f.expand().unwrap();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].name, "demo-normal-b0.25-n100");
        assert_eq!(all[3].name, "demo-normal-b2-n250");
        assert_eq!(all[4].name, "demo-normal-normal-ulaplace-b0.25-n100");
        assert_eq!(all[4].link(), LinkFamily::Laplace);
        assert_eq!(all[0].estimators.len(), 3);
    }

    #[test]
    fn n_override_collapses_grid() {
        let mut f = ScenarioFile::parse(FILE).unwrap();
        f.set_n(500);
        let all = f.expand().unwrap();
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|c| c.n == 500 && c.name.ends_with("-n500")));
    }

    #[test]
    fn validation() {
        let mut c = ScenarioConfig::new("x", 1.0, 100);
        assert!(c.validate().is_ok());
        c.replications = 1;
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("need ≥ 2 replications"));
        c.replications = 10;
        c.link = Some(LinkFamily::Logit);
        assert!(c.validate().is_err());
        c.link = Some(LinkFamily::Probit);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn case_parameters() {
        let mut c = ScenarioConfig::new("x", 1.0, 100);
        c.case = Case::Multivariate3;
        assert_eq!(c.gamma0(), vec![0.0, 0.5, 1.0, 0.5]);
        c.case = Case::Multivariate4;
        assert_eq!(c.gamma0(), vec![0.25, 0.5, 1.0, 0.5]);
        c.case = Case::ScalarWithConstant;
        assert_eq!(c.gamma0(), vec![0.25, 1.0]);
        c.alpha = Some(-0.5);
        assert_eq!(c.gamma0(), vec![-0.5, 1.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioFile::parse("[scenario]\nbeta = 1.0\nn = 100\nbogus = 1\n").is_err());
    }
}
