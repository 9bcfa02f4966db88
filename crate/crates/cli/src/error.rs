use std::path::PathBuf;

use pml_lfc::trainer::ConfigError;
use pml_lfc::PmlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] PmlError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{failed} of {total} runs failed; see the report for details")]
    RunsFailed { failed: usize, total: usize },
}

impl CliError {
    /// 0 success, 1 numerical failure, 2 usage or configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => core_exit_code(e),
            CliError::RunsFailed { .. } => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } | CliError::Csv { .. } => 2,
        }
    }
}

pub fn core_exit_code(e: &PmlError) -> i32 {
    match e {
        PmlError::NonConvergence { .. }
        | PmlError::NonFinite { .. }
        | PmlError::NumericalBlowup { .. }
        | PmlError::LineSearchStall { .. }
        | PmlError::DegenerateData(_) => 1,
        _ => 2,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
