//! Commands behind the `lora-ack` binary. Each command returns its output
//! as a string; the binary decides where it goes.

pub mod commands;

use std::path::PathBuf;

use lora_ack_model::{ModelError, ScenarioError};
use thiserror::Error;

pub use commands::{evaluate, export_matrix, simulate, sweep, validate, Gamma, SimOutput, SweepParam};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    NoSuccess(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::NoSuccess(_) => 4,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Parameter { .. } => CliError::Config(e.to_string()),
            ModelError::Consistency { .. } | ModelError::Solver(_) => CliError::Numerical(e.to_string()),
            ModelError::NoSuccess => CliError::NoSuccess(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Number format for every CSV cell: ten significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.9e}")
}
