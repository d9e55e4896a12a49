//! Configuration, table cache and report writer behind the `divlab` binary.

pub mod cache;
pub mod config;
pub mod run;

pub use cache::{cache_table, CachedTable, TableInfo};
pub use config::{ExperimentConfig, ExperimentKind, Params, Paths, ValidationError};
pub use run::{run_experiment, CliError, RunOptions, RunOutcome};
