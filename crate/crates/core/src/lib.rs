//! Flow-level intrusion detection built from three stages:
//!
//! 1. [`dataset`]: CSV ingestion, min-max/one-hot encoding, planted-feature
//!    synthetic data and deterministic splits.
//! 2. [`ssl`]: a small dense encoder trained without labels on contrastive,
//!    masked-reconstruction and next-flow prediction objectives, with
//!    hand-written gradients.
//! 3. [`qga`] + [`detect`]: a quantum-inspired genetic search over embedding
//!    subsets and classifier hyperparameters, scored by a logistic detector,
//!    and packaged into a deployable [`detect::ModelBundle`].
//!
//! [`metrics`] computes the binary detection scores used throughout.

pub mod dataset;
pub mod detect;
pub mod metrics;
pub mod qga;
pub mod seed;
pub mod ssl;

pub use ssl::{
    AugmentationConfig, AuxHeads, EncoderParams, ProjectionParams, SslConfig, SslError, SslModel,
};
pub use dataset::{
    ColumnKind, DatasetError, EncodedMatrix, FeatureSchema, NormalizationParams, RawTable,
    SplitSpec,
};
pub use detect::{ClassifierParams, DetectError, EvaluationContext, ModelBundle, PipelineOutcome, RunReport};
pub use metrics::{ConfusionCounts, MetricsError, Scores};
pub use qga::{
    BestRecord, Chromosome, FitnessWeights, HyperGrids, HyperParams, MeasuredSolution, QgaConfig, QgaError,
    Qubit,
};

/// Version stamped into every file artifact written by this crate.
pub const FORMAT_VERSION: u32 = 1;
