//! Self-supervised representation learning over encoded flow features.

mod augment;
mod checkpoint;
mod layers;
mod losses;
mod model;
mod train;

pub use augment::{augment, augment_batch, AugmentationConfig, AugmentedBatch, Views};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use layers::{
    encode_backward, encode_forward, AuxHeads, Dense, EncoderCache, EncoderParams,
    ProjectionParams,
};
pub use losses::{
    cosine_sim, mask_loss, ntxent_loss, temporal_loss, temporal_loss_against, HeadLoss, NtXent,
    NORM_EPS,
};
pub use model::{ssl_loss, LossTerm, Objective, SslModel};
pub use train::{train_ssl, SslTrainOutput};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SslError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("embedding row {0} has (near-)zero norm")]
    DegenerateEmbedding(usize),
    #[error("temporal window has {0} rows, need at least 2")]
    WindowTooShort(usize),
    #[error("temporal loss requested (lambda_t > 0) but rows are not in temporal order")]
    NotTemporal,
    #[error("{rows} rows cannot fill a batch of {batch}")]
    InsufficientData { rows: usize, batch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
}

pub type Result<T> = std::result::Result<T, SslError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SslConfig {
    /// Contrastive temperature.
    pub tau: f64,
    pub lambda_c: f64,
    pub lambda_m: f64,
    pub lambda_t: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub hidden_dim: usize,
    /// `None` picks `min(32, d′ − 1)` for input width `d′`.
    pub embedding_dim: Option<usize>,
    pub projection_dim: usize,
    pub augmentation: AugmentationConfig,
}

impl Default for SslConfig {
    fn default() -> Self {
        SslConfig {
            tau: 0.5,
            lambda_c: 1.0,
            lambda_m: 0.5,
            lambda_t: 0.5,
            batch_size: 64,
            epochs: 30,
            learning_rate: 0.05,
            momentum: 0.9,
            seed: 0,
            hidden_dim: 64,
            embedding_dim: None,
            projection_dim: 16,
            augmentation: AugmentationConfig::default(),
        }
    }
}

impl SslConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SslError::InvalidConfig(msg));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be > 0, got {}", self.tau));
        }
        let lambdas = [self.lambda_c, self.lambda_m, self.lambda_t];
        if lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return bad(format!("loss weights must be >= 0, got {lambdas:?}"));
        }
        if lambdas.iter().sum::<f64>() <= 0.0 {
            return bad("at least one loss weight must be positive".into());
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size must be >= 2, got {}", self.batch_size));
        }
        // A zero rate is allowed: it freezes the parameters.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be >= 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if self.projection_dim < 2 {
            return bad(format!("projection_dim must be >= 2, got {}", self.projection_dim));
        }
        self.augmentation.validate()
    }

    pub fn resolve_embedding_dim(&self, input: usize) -> Result<usize> {
        if input < 2 {
            return Err(SslError::InvalidConfig(format!(
                "input width {input} leaves no room for a narrower embedding"
            )));
        }
        let m = self.embedding_dim.unwrap_or_else(|| 32.min(input - 1));
        if m == 0 || m >= input {
            return Err(SslError::InvalidConfig(format!(
                "embedding width {m} must lie in [1, {input})"
            )));
        }
        Ok(m)
    }
}
