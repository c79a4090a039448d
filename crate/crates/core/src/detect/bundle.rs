use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{labels_from_scores, predict_scores, select_columns, ClassifierParams, DetectError, Result};
use crate::dataset::{encode, FeatureSchema, NormalizationParams, RawTable};
use crate::qga::{FitnessBreakdown, FitnessWeights, QgaConfig};
use crate::ssl::{EncoderParams, SslConfig};
use crate::FORMAT_VERSION;

/// Raw-row preprocessing, present when the bundle was built from a schema'd
/// CSV rather than an already encoded matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub schema: FeatureSchema,
    pub normalization: NormalizationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub weights: FitnessWeights,
    pub ssl_config_digest: Option<String>,
    pub qga_config_digest: String,
}

/// The deployable detector: normalization → encoder → subset → classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    /// Encoded input column names the encoder expects.
    pub feature_names: Vec<String>,
    pub preprocessing: Option<Preprocessing>,
    pub encoder: EncoderParams,
    /// 0-based embedding indices, ascending.
    pub subset: Vec<usize>,
    pub classifier: ClassifierParams,
    pub fitness: FitnessBreakdown,
    pub provenance: Provenance,
}

/// Hex SHA-256 of a value's JSON serialization.
pub fn json_digest<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn ssl_config_digest(cfg: &SslConfig) -> Result<String> {
    json_digest(cfg)
}

pub fn qga_config_digest(cfg: &QgaConfig) -> Result<String> {
    json_digest(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
    pub rows_per_second: f64,
}

impl ModelBundle {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(DetectError::VersionMismatch { found: self.format_version, expected: FORMAT_VERSION });
        }
        EncoderParams::from_layers(self.encoder.layers.clone())?;
        let m = self.encoder.embedding_dim();
        if self.subset.is_empty() || self.subset.windows(2).any(|w| w[0] >= w[1]) || self.subset[self.subset.len() - 1] >= m {
            return Err(DetectError::InvalidSubset(format!("{:?} is not an ascending subset of 0..{m}", self.subset)));
        }
        if self.classifier.weights.len() != self.subset.len() {
            return Err(DetectError::DimensionMismatch { expected: self.subset.len(), found: self.classifier.weights.len() });
        }
        if self.feature_names.len() != self.encoder.input_dim() {
            return Err(DetectError::DimensionMismatch { expected: self.encoder.input_dim(), found: self.feature_names.len() });
        }
        if let Some(pre) = &self.preprocessing {
            let names = pre.normalization.feature_names();
            if names != self.feature_names {
                return Err(DetectError::SchemaMismatch("normalization does not produce the encoder's inputs".into()));
            }
        }
        Ok(())
    }

    pub fn digest(&self) -> Result<String> {
        json_digest(self)
    }

    /// Attack probabilities for already encoded rows.
    pub fn score_encoded(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let z = self.encoder.embed(x)?;
        predict_scores(&self.classifier, select_columns(z.view(), &self.subset)?.view())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|source| DetectError::Io { path: path.to_path_buf(), source })
    }

    /// Loads and validates a bundle, refusing other format versions.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| DetectError::Io { path: path.to_path_buf(), source })?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| DetectError::Malformed("missing format_version".into()))?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(DetectError::VersionMismatch { found: found as u32, expected: FORMAT_VERSION });
        }
        let bundle: ModelBundle = serde_json::from_value(value)?;
        bundle.validate()?;
        Ok(bundle)
    }
}

/// Scores raw rows: encode with the bundle's normalization, embed, restrict
/// to the subset and apply the classifier.
pub fn predict_end_to_end(bundle: &ModelBundle, table: &RawTable) -> Result<Prediction> {
    let pre = bundle
        .preprocessing
        .as_ref()
        .ok_or_else(|| DetectError::SchemaMismatch("bundle carries no preprocessing".into()))?;
    if table.schema.as_ref() != &pre.schema {
        return Err(DetectError::SchemaMismatch(format!(
            "rows follow schema '{}', bundle expects '{}'",
            table.schema.dataset_id, pre.schema.dataset_id
        )));
    }
    let start = Instant::now();
    let x = encode(table, &pre.normalization, &pre.schema)?;
    let scores = bundle.score_encoded(x.values.view())?;
    let secs = start.elapsed().as_secs_f64();
    Ok(Prediction {
        labels: labels_from_scores(&scores),
        rows_per_second: if secs > 0.0 { scores.len() as f64 / secs } else { f64::INFINITY },
        scores,
    })
}
