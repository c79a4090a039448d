use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::SslModel;
use super::{Result, SslConfig, SslError};
use crate::FORMAT_VERSION;

/// Serialized encoder state: parameters, the config that produced them and
/// the per-epoch loss curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: SslConfig,
    pub input_dim: usize,
    pub embedding_dim: usize,
    pub model: SslModel,
    pub loss_curve: Vec<f64>,
}

impl Checkpoint {
    pub fn new(config: SslConfig, model: SslModel, loss_curve: Vec<f64>) -> Self {
        Checkpoint {
            format_version: FORMAT_VERSION,
            input_dim: model.encoder.input_dim(),
            embedding_dim: model.encoder.embedding_dim(),
            config,
            model,
            loss_curve,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(SslError::VersionMismatch {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        self.model.check_dims()?;
        if self.model.encoder.input_dim() != self.input_dim
            || self.model.encoder.embedding_dim() != self.embedding_dim
        {
            return Err(SslError::DimensionMismatch(
                "recorded dims disagree with encoder layers".into(),
            ));
        }
        Ok(())
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let json = serde_json::to_vec_pretty(ckpt).map_err(|e| SslError::Malformed(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| SslError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| SslError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| SslError::Malformed(e.to_string()))?;
    // Check the version before the shape so old files get a clear error.
    let found = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| SslError::Malformed("missing format_version".into()))?;
    if found != u64::from(FORMAT_VERSION) {
        return Err(SslError::VersionMismatch {
            found: found as u32,
            expected: FORMAT_VERSION,
        });
    }
    let ckpt: Checkpoint =
        serde_json::from_value(value).map_err(|e| SslError::Malformed(e.to_string()))?;
    ckpt.validate()?;
    Ok(ckpt)
}
