use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Compute(#[from] gzk_core::Error),

    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            _ => ExitCode::from(2),
        }
    }
}
