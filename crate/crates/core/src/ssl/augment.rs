use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Result, SslError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub noise_sigma: f64,
    pub mask_prob: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            noise_sigma: 0.1,
            mask_prob: 0.2,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SslError::InvalidConfig(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.mask_prob) {
            return Err(SslError::InvalidConfig(format!(
                "mask_prob must lie in [0, 1], got {}",
                self.mask_prob
            )));
        }
        Ok(())
    }
}

/// Two stochastic views of one row: Gaussian jitter clipped to `[0, 1]`, and
/// random feature masking (zeroing). `mask` marks the zeroed coordinates of
/// the second view.
#[derive(Debug, Clone, PartialEq)]
pub struct Views {
    pub jittered: Vec<f64>,
    pub masked: Vec<f64>,
    pub mask: Vec<bool>,
}

pub fn augment<R: Rng>(x: &[f64], cfg: &AugmentationConfig, rng: &mut R) -> Views {
    let jittered = x
        .iter()
        .map(|&v| {
            let e: f64 = StandardNormal.sample(rng);
            (v + cfg.noise_sigma * e).clamp(0.0, 1.0)
        })
        .collect();
    let mask: Vec<bool> = x.iter().map(|_| rng.random::<f64>() < cfg.mask_prob).collect();
    let masked = x
        .iter()
        .zip(&mask)
        .map(|(&v, &m)| if m { 0.0 } else { v })
        .collect();
    Views {
        jittered,
        masked,
        mask,
    }
}

/// A batch together with one draw of its augmentations.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBatch {
    pub original: Array2<f64>,
    pub jittered: Array2<f64>,
    pub masked: Array2<f64>,
    pub mask: Array2<bool>,
}

pub fn augment_batch<R: Rng>(
    x: ArrayView2<f64>,
    cfg: &AugmentationConfig,
    rng: &mut R,
) -> AugmentedBatch {
    let shape = x.dim();
    let mut jittered = Array2::zeros(shape);
    let mut masked = Array2::zeros(shape);
    let mut mask = Array2::from_elem(shape, false);
    for (i, row) in x.rows().into_iter().enumerate() {
        let row = row.to_vec();
        let v = augment(&row, cfg, rng);
        for j in 0..shape.1 {
            jittered[[i, j]] = v.jittered[j];
            masked[[i, j]] = v.masked[j];
            mask[[i, j]] = v.mask[j];
        }
    }
    AugmentedBatch {
        original: x.to_owned(),
        jittered,
        masked,
        mask,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    const X: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

    #[test]
    fn identity_augmentation() {
        let cfg = AugmentationConfig {
            noise_sigma: 0.0,
            mask_prob: 0.0,
        };
        let v = augment(&X, &cfg, &mut seed::rng(3));
        assert_eq!(v.jittered, X);
        assert_eq!(v.masked, X);
        assert!(v.mask.iter().all(|m| !m));
    }

    #[test]
    fn full_mask() {
        let cfg = AugmentationConfig {
            noise_sigma: 0.3,
            mask_prob: 1.0,
        };
        let v = augment(&X, &cfg, &mut seed::rng(3));
        assert!(v.masked.iter().all(|&x| x == 0.0));
        assert!(v.mask.iter().all(|&m| m));
        assert!(v.jittered.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn deterministic_in_rng_state() {
        let cfg = AugmentationConfig::default();
        let a = augment(&X, &cfg, &mut seed::rng(9));
        let b = augment(&X, &cfg, &mut seed::rng(9));
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(AugmentationConfig { noise_sigma: -1.0, mask_prob: 0.1 }.validate().is_err());
        assert!(AugmentationConfig { noise_sigma: 0.1, mask_prob: 1.5 }.validate().is_err());
    }
}
