use serde::{Deserialize, Serialize};

use super::{QgaError, Result};

/// Classifier hyperparameters carried on the chromosome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub l2_penalty: f64,
}

/// Fixed value grids indexed by the hyperparameter bits. Each grid length must
/// be a power of two; a single-value grid takes no bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrids {
    pub learning_rates: Vec<f64>,
    pub l2_penalties: Vec<f64>,
}

impl Default for HyperGrids {
    fn default() -> Self {
        HyperGrids {
            learning_rates: vec![0.3, 0.1, 0.03, 0.01],
            l2_penalties: vec![0.0, 1e-4, 1e-3, 1e-2],
        }
    }
}

fn bits_for(len: usize) -> u32 {
    len.trailing_zeros()
}

impl HyperGrids {
    /// Grids with one value each (no hyperparameter bits).
    pub fn fixed(hyper: HyperParams) -> Self {
        HyperGrids { learning_rates: vec![hyper.learning_rate], l2_penalties: vec![hyper.l2_penalty] }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("learning_rates", &self.learning_rates), ("l2_penalties", &self.l2_penalties)] {
            if grid.is_empty() || !grid.len().is_power_of_two() {
                return Err(QgaError::InvalidConfig(format!(
                    "{name} grid length {} is not a power of two",
                    grid.len()
                )));
            }
            if grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(QgaError::InvalidConfig(format!("{name} grid values must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn lr_bits(&self) -> usize {
        bits_for(self.learning_rates.len()) as usize
    }

    pub fn l2_bits(&self) -> usize {
        bits_for(self.l2_penalties.len()) as usize
    }

    /// Number of hyperparameter bits `n_h`.
    pub fn n_bits(&self) -> usize {
        self.lr_bits() + self.l2_bits()
    }

    /// Decodes the hyperparameter bits (learning rate first, MSB first).
    pub fn decode(&self, bits: &[bool]) -> Result<HyperParams> {
        if bits.len() != self.n_bits() {
            return Err(QgaError::LengthMismatch { expected: self.n_bits(), found: bits.len() });
        }
        let index = |bs: &[bool]| bs.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        let (lr, l2) = bits.split_at(self.lr_bits());
        Ok(HyperParams {
            learning_rate: self.learning_rates[index(lr)],
            l2_penalty: self.l2_penalties[index(l2)],
        })
    }
}

/// A measured chromosome after decoding. `subset` holds 0-based embedding
/// indices in ascending order and is never empty; `bits` reflects any repair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSolution {
    #[serde(with = "super::bitstring")]
    pub bits: Vec<bool>,
    pub subset: Vec<usize>,
    pub hyper: HyperParams,
    pub repaired: bool,
}

/// Splits `bits` into an embedding subset (first `m` bits) and grid-indexed
/// hyperparameters. An empty subset is repaired by switching on the feature
/// whose qubit has the largest probability of 1 in `prob_one` (lowest index on
/// ties); without probabilities, feature 0 is used.
pub fn decode(
    bits: &[bool],
    m: usize,
    grids: &HyperGrids,
    prob_one: Option<&[f64]>,
) -> Result<MeasuredSolution> {
    let expected = m + grids.n_bits();
    if m == 0 || bits.len() != expected {
        return Err(QgaError::LengthMismatch { expected, found: bits.len() });
    }
    let mut bits = bits.to_vec();
    let mut subset: Vec<usize> = (0..m).filter(|&i| bits[i]).collect();
    let repaired = subset.is_empty();
    if repaired {
        let pick = match prob_one {
            Some(p) => {
                let mut best = 0;
                for i in 1..m {
                    if p[i] > p[best] {
                        best = i;
                    }
                }
                best
            }
            None => 0,
        };
        bits[pick] = true;
        subset.push(pick);
    }
    let hyper = grids.decode(&bits[m..])?;
    Ok(MeasuredSolution { bits, subset, hyper, repaired })
}
