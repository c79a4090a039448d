use ndarray::{Array2, ArrayView2};

use super::{select_columns, train_classifier, predict_scores, labels_from_scores, ClassifierParams, DetectError, Result};
use crate::metrics::{confusion, scores};
use crate::qga::{Fitness, FitnessBreakdown, FitnessWeights, HyperParams, MeasuredSolution, QgaError};

/// Train/validation embeddings and labels that a candidate solution is
/// scored against.
#[derive(Debug, Clone)]
pub struct EvaluationContext {
    pub train_z: Array2<f64>,
    pub train_y: Vec<u8>,
    pub val_z: Array2<f64>,
    pub val_y: Vec<u8>,
    pub weights: FitnessWeights,
    /// Recorded for provenance; classifier training starts from zero and
    /// draws no randomness.
    pub seed: u64,
}

impl EvaluationContext {
    pub fn new(
        train_z: Array2<f64>,
        train_y: Vec<u8>,
        val_z: Array2<f64>,
        val_y: Vec<u8>,
        weights: FitnessWeights,
        seed: u64,
    ) -> Result<Self> {
        weights.validate()?;
        if train_z.nrows() != train_y.len() {
            return Err(DetectError::DimensionMismatch { expected: train_z.nrows(), found: train_y.len() });
        }
        if val_z.nrows() != val_y.len() {
            return Err(DetectError::DimensionMismatch { expected: val_z.nrows(), found: val_y.len() });
        }
        if train_z.ncols() != val_z.ncols() {
            return Err(DetectError::DimensionMismatch { expected: train_z.ncols(), found: val_z.ncols() });
        }
        if train_z.is_empty() || val_z.is_empty() {
            return Err(DetectError::EmptyInput);
        }
        Ok(EvaluationContext { train_z, train_y, val_z, val_y, weights, seed })
    }

    pub fn embedding_dim(&self) -> usize {
        self.train_z.ncols()
    }

    /// Trains on the training rows restricted to `subset`.
    pub fn fit(&self, subset: &[usize], hyper: HyperParams) -> Result<ClassifierParams> {
        train_classifier(select_columns(self.train_z.view(), subset)?.view(), &self.train_y, hyper)
    }

    /// Validation accuracy and FPR of a classifier over `subset`. With no
    /// negative validation rows the FPR is taken as 0.
    pub fn validate_on(&self, params: &ClassifierParams, subset: &[usize]) -> Result<(f64, f64)> {
        accuracy_fpr(params, select_columns(self.val_z.view(), subset)?.view(), &self.val_y)
    }

    pub fn score(&self, subset: &[usize], hyper: HyperParams) -> Result<FitnessBreakdown> {
        if subset.is_empty() {
            return Err(DetectError::InvalidSubset("empty subset".into()));
        }
        let cost = subset.len() as f64 / self.embedding_dim() as f64;
        let params = match self.fit(subset, hyper) {
            Ok(p) => p,
            Err(DetectError::SingleClassTraining) => {
                return Ok(FitnessBreakdown { fitness: 0.0, accuracy: 0.0, fpr: 1.0, cost, degenerate: true })
            }
            Err(e) => return Err(e),
        };
        let (acc, fpr) = self.validate_on(&params, subset)?;
        Ok(FitnessBreakdown::from_terms(&self.weights, acc, fpr, cost))
    }
}

pub(crate) fn accuracy_fpr(params: &ClassifierParams, z: ArrayView2<f64>, y: &[u8]) -> Result<(f64, f64)> {
    let pred = labels_from_scores(&predict_scores(params, z)?);
    let s = scores(&confusion(y, &pred)?);
    Ok((s.accuracy.unwrap_or(0.0), s.fpr.unwrap_or(0.0)))
}

impl Fitness for EvaluationContext {
    fn feature_count(&self) -> usize {
        self.embedding_dim()
    }

    fn evaluate(&self, solution: &MeasuredSolution) -> std::result::Result<FitnessBreakdown, QgaError> {
        self.score(&solution.subset, solution.hyper)
            .map_err(|e| QgaError::Evaluation(Box::new(e)))
    }
}
