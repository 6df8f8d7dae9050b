//! Configuration, experiment driver and file outputs for the `genrec-core`
//! finite-volume solver.

pub mod config;
pub mod initial;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use config::{ConfigError, Overrides, RawConfig, RunConfig};
pub use output::{run_experiment, RunSummary};
pub use run::{simulate, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] genrec_core::Error),
    #[error("profile: {0}")]
    Profile(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("run stopped early ({0}); partial outputs were written")]
    Aborted(String),
}
