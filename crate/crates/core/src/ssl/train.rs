use ndarray::Axis;
use rand::seq::SliceRandom;

use super::augment::augment_batch;
use super::model::SslModel;
use super::{Result, SslConfig, SslError};
use crate::dataset::EncodedMatrix;
use crate::seed;

#[derive(Debug, Clone)]
pub struct SslTrainOutput {
    pub model: SslModel,
    /// Mean joint loss per epoch, measured before each batch's update.
    pub loss_curve: Vec<f64>,
    /// Mean unweighted (contrastive, mask, temporal) losses per epoch.
    pub component_curves: Vec<[f64; 3]>,
    pub batches_per_epoch: usize,
}

/// Mini-batch gradient descent with momentum on the joint objective.
///
/// Batches are random row subsets, or contiguous windows visited in random
/// order when the temporal term is active. Single-threaded and bit-exact for
/// a fixed `cfg.seed`.
pub fn train_ssl(data: &EncodedMatrix, cfg: &SslConfig) -> Result<SslTrainOutput> {
    cfg.validate()?;
    let n = data.n_rows();
    if n < cfg.batch_size {
        return Err(SslError::InsufficientData {
            rows: n,
            batch: cfg.batch_size,
        });
    }
    if cfg.lambda_t > 0.0 && !data.row_order_is_temporal {
        return Err(SslError::NotTemporal);
    }
    let mut rng = seed::rng(cfg.seed);
    let mut model = SslModel::init(data.n_cols(), cfg, &mut rng)?;
    let mut velocity = model.zeros_like();

    let temporal = cfg.lambda_t > 0.0;
    let b = cfg.batch_size;
    let windows: Vec<usize> = (0..n).step_by(b).filter(|&s| n - s >= 2).collect();
    let mut rows: Vec<usize> = (0..n).collect();

    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut component_curves = Vec::with_capacity(cfg.epochs);
    let mut batches_per_epoch = 0;
    for _ in 0..cfg.epochs {
        let batches: Vec<Vec<usize>> = if temporal {
            let mut starts = windows.clone();
            starts.shuffle(&mut rng);
            starts
                .into_iter()
                .map(|s| (s..(s + b).min(n)).collect())
                .collect()
        } else {
            rows.shuffle(&mut rng);
            rows.chunks(b)
                .filter(|c| c.len() >= 2)
                .map(<[usize]>::to_vec)
                .collect()
        };
        batches_per_epoch = batches.len();

        let mut epoch_loss = 0.0;
        let mut epoch_parts = [0.0; 3];
        for idx in &batches {
            let x = data.values.select(Axis(0), idx);
            let batch = augment_batch(x.view(), &cfg.augmentation, &mut rng);
            let obj = model.objective(&batch, cfg, None)?;
            epoch_loss += obj.total.loss;
            for (acc, c) in epoch_parts.iter_mut().zip(obj.components) {
                *acc += c;
            }
            // v ← μ·v − η·g ; θ ← θ + v
            let mut next = velocity.zeros_like();
            next.scaled_add(cfg.momentum, &velocity);
            next.scaled_add(-cfg.learning_rate, &obj.total.grads);
            velocity = next;
            model.scaled_add(1.0, &velocity);
        }
        let k = batches.len().max(1) as f64;
        loss_curve.push(epoch_loss / k);
        component_curves.push(epoch_parts.map(|p| p / k));
    }
    Ok(SslTrainOutput {
        model,
        loss_curve,
        component_curves,
        batches_per_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_dataset;

    fn small_cfg() -> SslConfig {
        SslConfig {
            lambda_t: 0.0,
            batch_size: 16,
            epochs: 3,
            hidden_dim: 8,
            embedding_dim: Some(4),
            projection_dim: 3,
            seed: 4,
            ..SslConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let data = synth_dataset(64, 2, 4, 2.0, 1).unwrap().matrix;
        let cfg = SslConfig {
            learning_rate: 0.0,
            ..small_cfg()
        };
        let out = train_ssl(&data, &cfg).unwrap();
        let fresh = SslModel::init(data.n_cols(), &cfg, &mut seed::rng(cfg.seed)).unwrap();
        assert_eq!(out.model, fresh);
    }

    #[test]
    fn same_seed_same_parameters() {
        let data = synth_dataset(64, 2, 4, 2.0, 1).unwrap().matrix;
        let a = train_ssl(&data, &small_cfg()).unwrap();
        let b = train_ssl(&data, &small_cfg()).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_curve, b.loss_curve);
        assert_eq!(a.loss_curve.len(), 3);
    }

    #[test]
    fn temporal_term_requires_ordered_rows() {
        let data = synth_dataset(64, 2, 4, 2.0, 1).unwrap().matrix;
        let cfg = SslConfig {
            lambda_t: 0.5,
            ..small_cfg()
        };
        assert!(matches!(train_ssl(&data, &cfg), Err(SslError::NotTemporal)));

        let mut ordered = data.clone();
        ordered.row_order_is_temporal = true;
        let out = train_ssl(&ordered, &cfg).unwrap();
        assert!(out.component_curves.iter().all(|c| c[2] > 0.0));
    }

    #[test]
    fn too_few_rows() {
        let data = synth_dataset(8, 2, 4, 2.0, 1).unwrap().matrix;
        assert!(matches!(
            train_ssl(&data, &small_cfg()),
            Err(SslError::InsufficientData { rows: 8, batch: 16 })
        ));
    }

    #[test]
    fn loss_improves_on_separable_data() {
        let data = synth_dataset(512, 4, 8, 3.0, 2).unwrap().matrix;
        let cfg = SslConfig { lambda_t: 0.0, ..SslConfig::default() };
        let out = train_ssl(&data, &cfg).unwrap();
        assert_eq!(out.loss_curve.len(), 30);
        assert!(out.loss_curve[29] < out.loss_curve[0]);
        assert_eq!(out.model.encoder.embedding_dim(), 11);
    }
}
