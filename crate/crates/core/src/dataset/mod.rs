//! Traffic ingestion and preprocessing.

mod matrix;
mod normalize;
mod schema;
mod split;
mod synth;
mod table;

pub use matrix::{read_matrix, write_matrix, EncodedMatrix};
pub use normalize::{encode, fit_normalizer, FeatureNorm, NormalizationParams};
pub use schema::{Column, ColumnKind, FeatureSchema, LabelRule};
pub use split::{split, split_indices, SplitIndices, SplitSpec};
pub use synth::{synth_dataset, SynthDataset};
pub use table::{load_csv, load_csv_reader, RawTable, RawValue};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: `{value}` is not numeric")]
    NonNumericContinuous {
        row: usize,
        column: String,
        value: String,
    },
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("cannot fit a normalizer on an empty table")]
    EmptyTable,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("too few rows: {0}")]
    TooFewRows(String),
    #[error("stratified split needs both classes; only label {0} present")]
    ClassMissing(u8),
    #[error("malformed matrix artifact: {0}")]
    Malformed(String),
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, DatasetError>;
