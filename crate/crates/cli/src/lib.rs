//! Build, check and contract gauge-invariant PEPS from a TOML configuration.

pub mod archive;
pub mod config;
pub mod kernel;
pub mod pipeline;
pub mod report;
pub mod suites;

use gauge_peps_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("archive: {0}")]
    Archive(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// Process exit status: 2 for usage and input problems, 3 when a size
    /// guard refuses the job.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::TooLarge { .. }) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
