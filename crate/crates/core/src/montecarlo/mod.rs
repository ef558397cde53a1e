//! Simulation study: designs, seeded variates, the replication engine and
//! summary metrics.

pub mod config;
pub mod dgp;
pub mod study;
pub mod summary;
pub mod variates;

pub use config::{Case, ConfigError, DistributionSet, Grid, PropensityMode, ScenarioConfig, ScenarioFile};
pub use dgp::generate_dgp;
pub use study::{run_replication, run_study, RepEstimate, RepFailure, RepOutcome, Replication};
pub use summary::{
    ks_normality_ratio, summarize, write_summary_csv, ScenarioSummary, SummaryError, SummaryFile, SummaryRow,
    SCHEMA_VERSION,
};
pub use variates::{substream, uniform, Distribution};
