//! Experiment runner for diversity-aware Nyström landmark selection.
//!
//! [`run`] executes one configured task and writes its result files;
//! [`experiment::execute`] returns the same results in memory.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ExperimentConfig, Generator, SamplerKind, Task};
pub use experiment::{execute, sweep_logdet, Outcome, Row};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] diverse_nystrom::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG_OR_DATA: i32 = 2;
}

/// Runs the task and writes its files.
pub fn run(cfg: &ExperimentConfig) -> Result<(Outcome, Vec<PathBuf>), CliError> {
    let outcome = execute(cfg)?;
    let files = output::write_outcome(cfg, &outcome)?;
    Ok((outcome, files))
}
