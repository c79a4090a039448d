//! Quantum-inspired genetic search over embedding subsets and classifier
//! hyperparameters.
//!
//! A chromosome holds one real, nonnegative qubit per decision bit: `m`
//! feature bits followed by the hyperparameter bits. Measuring a chromosome
//! samples a bitstring (bit = 1 with probability b²); after scoring, every
//! qubit is rotated a small angle toward the best bitstring seen so far.

mod decode;
mod evolve;
mod fitness;
mod oracle;
mod qubit;

pub use decode::{decode, HyperGrids, HyperParams, MeasuredSolution};
pub use evolve::{
    evolve, random_search, BestRecord, EvolveOutcome, GenerationStats, QgaConfig, SearchOutcome,
};
pub use fitness::{Fitness, FitnessBreakdown, FitnessWeights};
pub use oracle::{exhaustive_oracle, OracleOutcome, ORACLE_MAX_BITS, ORACLE_MAX_FEATURES};
pub use qubit::{delta_theta, init_population, Chromosome, Qubit};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QgaError {
    #[error("bitstring has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid qubit ({a}, {b}): amplitudes must be nonnegative with unit norm")]
    InvalidQubit { a: f64, b: f64 },
    #[error("exhaustive search over {bits} bits ({features} features) exceeds the supported size")]
    TooLarge { features: usize, bits: usize },
    #[error("fitness evaluation failed: {0}")]
    Evaluation(#[source] Box<dyn std::error::Error + Send + Sync>),
}

pub type Result<T> = std::result::Result<T, QgaError>;

/// Compact `0`/`1` rendering of a bitstring, feature bits then hyperparameter
/// bits, separated by `|` when `split` is given.
pub fn bits_to_string(bits: &[bool], split: Option<usize>) -> String {
    let mut s = String::with_capacity(bits.len() + 1);
    for (i, &b) in bits.iter().enumerate() {
        if split == Some(i) {
            s.push('|');
        }
        s.push(if b { '1' } else { '0' });
    }
    s
}

pub(crate) mod bitstring {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::bits_to_string(bits, None))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let text = String::deserialize(d)?;
        text.chars()
            .filter(|&c| c != '|')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(de::Error::custom(format!("bad bit character {other:?}"))),
            })
            .collect()
    }
}
