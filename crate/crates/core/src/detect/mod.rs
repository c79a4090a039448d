//! Downstream logistic detector, the search-then-refit orchestration and the
//! deployable bundle.

mod bundle;
mod classifier;
mod context;
mod pipeline;

pub use bundle::{
    json_digest, predict_end_to_end, qga_config_digest, ssl_config_digest, ModelBundle, Prediction,
    Preprocessing, Provenance,
};
pub use classifier::{
    labels_from_scores, loss_gradient, penalized_loss, predict_scores, select_columns, train_classifier,
    train_classifier_traced, ClassifierParams, ITERATIONS, MAX_HALVINGS, THRESHOLD,
};
pub use context::EvaluationContext;
pub use pipeline::{optimize_pipeline, OracleReport, PipelineOutcome, PipelineRequest, RunReport, SearchBudget};

use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::metrics::MetricsError;
use crate::qga::QgaError;
use crate::ssl::SslError;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("training labels contain a single class")]
    SingleClassTraining,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no rows or no columns to work with")]
    EmptyInput,
    #[error("invalid subset: {0}")]
    InvalidSubset(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("bundle format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ssl(#[from] SslError),
    #[error(transparent)]
    Qga(#[from] QgaError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub type Result<T> = std::result::Result<T, DetectError>;
