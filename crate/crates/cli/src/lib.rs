//! Runner library: configuration, seeded experiment trajectories, curve
//! export, and the cross-module verification suite. The `emergence` binary
//! is a thin argument-parsing shell over these functions.

pub mod config;
pub mod export;
pub mod manifest;
pub mod trajectory;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Validation(String),
    #[error("check failure: {0}")]
    CheckFailure(String),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 1 validation, 2 check failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::CheckFailure(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<emergence_core::curves::CurveError> for CliError {
    fn from(e: emergence_core::curves::CurveError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<emergence_core::graph::GraphError> for CliError {
    fn from(e: emergence_core::graph::GraphError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<emergence_core::scaling::ScalingError> for CliError {
    fn from(e: emergence_core::scaling::ScalingError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<emergence_core::entropy::EntropyError> for CliError {
    fn from(e: emergence_core::entropy::EntropyError) -> Self {
        CliError::Validation(e.to_string())
    }
}
