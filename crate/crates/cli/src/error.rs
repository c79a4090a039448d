use std::process::ExitCode;

use qids_core::detect::DetectError;
use qids_core::qga::QgaError;
use qids_core::{DatasetError, MetricsError, SslError};
use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config values or data that fails validation (exit 2).
    #[error("{0}")]
    Invalid(String),
    /// Missing or unreadable input (exit 3).
    #[error("{0}")]
    Input(String),
    /// Schema or format-version mismatch between artifacts (exit 4).
    #[error("{0}")]
    Mismatch(String),
    /// Failure writing outputs (exit 1).
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Invalid(_) => 2,
            CliError::Input(_) => 3,
            CliError::Mismatch(_) => 4,
            CliError::Output(_) => 1,
        })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let msg = e.to_string();
        match e {
            DatasetError::Io { .. }
            | DatasetError::EmptyFile
            | DatasetError::Malformed(_)
            | DatasetError::Csv(_)
            | DatasetError::MissingColumn(_)
            | DatasetError::NonNumericContinuous { .. } => CliError::Input(msg),
            DatasetError::VersionMismatch { .. } | DatasetError::SchemaMismatch(_) => CliError::Mismatch(msg),
            _ => CliError::Invalid(msg),
        }
    }
}

impl From<SslError> for CliError {
    fn from(e: SslError) -> Self {
        let msg = e.to_string();
        match e {
            SslError::Io { .. } | SslError::Malformed(_) => CliError::Input(msg),
            SslError::VersionMismatch { .. } | SslError::DimensionMismatch(_) => CliError::Mismatch(msg),
            _ => CliError::Invalid(msg),
        }
    }
}

impl From<QgaError> for CliError {
    fn from(e: QgaError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        let msg = e.to_string();
        match e {
            DetectError::Dataset(inner) => inner.into(),
            DetectError::Ssl(inner) => inner.into(),
            DetectError::Io { .. } | DetectError::Malformed(_) | DetectError::Json(_) => CliError::Input(msg),
            DetectError::VersionMismatch { .. } | DetectError::SchemaMismatch(_) | DetectError::DimensionMismatch { .. } => {
                CliError::Mismatch(msg)
            }
            _ => CliError::Invalid(msg),
        }
    }
}
