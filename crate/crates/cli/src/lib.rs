//! Library surface of the batch experiment runner: config parsing, study
//! dispatch, and artifact writing, kept separate from the binary so
//! integration tests can drive runs in-process.

// Validation guards use `!(x > 0.0)` on purpose: the negated form rejects
// NaN, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;

pub use config::ExperimentConfig;
pub use runner::{list_builtins, run, CheckEntry, Summary};

/// Errors of the runner, mapped onto process exit codes by the binary:
/// configuration problems exit 2, numerical aborts exit 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("numerical abort: {0}")]
    Numeric(#[from] semiprox::Error),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
