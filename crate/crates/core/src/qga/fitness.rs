use serde::{Deserialize, Serialize};

use super::{MeasuredSolution, QgaError, Result};

/// Trade-off weights of the search objective
/// `w_acc·Acc + w_fpr·(1 − FPR) − w_cost·|S|/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    pub w_acc: f64,
    pub w_fpr: f64,
    pub w_cost: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights { w_acc: 0.7, w_fpr: 0.2, w_cost: 0.1 }
    }
}

impl FitnessWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.w_acc, self.w_fpr, self.w_cost];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(QgaError::InvalidConfig("fitness weights must be finite and >= 0".into()));
        }
        if self.w_acc + self.w_fpr <= 0.0 {
            return Err(QgaError::InvalidConfig("w_acc + w_fpr must be positive".into()));
        }
        Ok(())
    }

    pub fn combine(&self, accuracy: f64, fpr: f64, cost: f64) -> f64 {
        self.w_acc * accuracy + self.w_fpr * (1.0 - fpr) - self.w_cost * cost
    }
}

/// A fitness value together with the terms it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub fitness: f64,
    pub accuracy: f64,
    pub fpr: f64,
    pub cost: f64,
    /// The classifier could not be trained (one class in the training
    /// labels); the fitness is pinned to 0.
    pub degenerate: bool,
}

impl FitnessBreakdown {
    pub fn from_terms(weights: &FitnessWeights, accuracy: f64, fpr: f64, cost: f64) -> Self {
        FitnessBreakdown {
            fitness: weights.combine(accuracy, fpr, cost),
            accuracy,
            fpr,
            cost,
            degenerate: false,
        }
    }
}

/// Scores a decoded solution. Implementations must be deterministic in the
/// solution so that results can be cached and evaluated in any order.
pub trait Fitness: Sync {
    /// Number of embedding dimensions `m` (feature bits).
    fn feature_count(&self) -> usize;

    fn evaluate(&self, solution: &MeasuredSolution) -> Result<FitnessBreakdown>;
}
