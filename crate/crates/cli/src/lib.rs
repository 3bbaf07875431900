//! Table files, grid evaluation and verification reports behind the `maxeig` binary.

pub mod commands;
pub mod tablefile;

use std::path::PathBuf;

/// Everything the binary can fail with, and the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] maxeig_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed table file: {0}")]
    Format(String),
}

impl CliError {
    /// 1 for a failed consistency check, 2 for bad input of any kind.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(maxeig_core::Error::Consistency(_)) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
