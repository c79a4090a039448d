//! Analytic gradients against central finite differences. Each checker
//! returns the worst relative error over its random instances.

use ndarray::{s, Array2};
use qids_core::detect::{loss_gradient, ClassifierParams};
use qids_core::qga::HyperParams;
use qids_core::ssl::{
    augment_batch, encode_backward, encode_forward, mask_loss, ntxent_loss,
    temporal_loss_against, AugmentationConfig, AuxHeads, Dense, EncoderParams, SslConfig,
    SslModel,
};

use super::{central_diff, max_rel_error, rng, uniform_vec, FD_STEP};

pub const INSTANCES: u64 = 20;
pub const TOL: f64 = 1e-4;

pub fn mat(v: &[f64], rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), v.to_vec()).unwrap()
}

pub fn encoder_input_gradient() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(100 + inst);
        let enc = EncoderParams::init(&[6, 5, 3], &mut r).unwrap();
        let x = uniform_vec(&mut r, 4 * 6, 0.0, 1.0);
        let w = mat(&uniform_vec(&mut r, 4 * 3, -1.0, 1.0), 4, 3);
        let f = |xv: &[f64]| {
            let (h, _) = encode_forward(&enc, mat(xv, 4, 6).view()).unwrap();
            (&h * &w).sum()
        };
        let (_, cache) = encode_forward(&enc, mat(&x, 4, 6).view()).unwrap();
        let (_, dx) = encode_backward(&enc, &cache, w.view());
        let err = max_rel_error(dx.as_slice().unwrap(), &central_diff(f, &x, FD_STEP));
        worst = worst.max(err);
    }
    worst
}

pub fn ntxent_gradient() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(200 + inst);
        let (n, p) = (4, 3);
        let z = uniform_vec(&mut r, 2 * n * p, -1.0, 1.0);
        let tau = 0.5;
        let f = |zv: &[f64]| {
            let a = mat(&zv[..n * p], n, p);
            let b = mat(&zv[n * p..], n, p);
            ntxent_loss(a.view(), b.view(), tau).unwrap().loss
        };
        let out = ntxent_loss(mat(&z[..n * p], n, p).view(), mat(&z[n * p..], n, p).view(), tau)
            .unwrap();
        let mut analytic = out.grad_first.into_raw_vec_and_offset().0;
        analytic.extend(out.grad_second.into_raw_vec_and_offset().0);
        let err = max_rel_error(&analytic, &central_diff(f, &z, FD_STEP));
        worst = worst.max(err);
    }
    worst
}

pub fn dense_flat(d: &Dense) -> Vec<f64> {
    d.weight.iter().chain(d.bias.iter()).copied().collect()
}

pub fn dense_from(flat: &[f64], input: usize, output: usize) -> Dense {
    Dense {
        weight: mat(&flat[..input * output], input, output),
        bias: ndarray::Array1::from(flat[input * output..].to_vec()),
    }
}

pub fn mask_loss_gradient() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(300 + inst);
        let (b, m, d) = (5, 3, 4);
        let heads = AuxHeads::init(m, d, &mut r);
        let h = uniform_vec(&mut r, b * m, -1.0, 1.0);
        let x = mat(&uniform_vec(&mut r, b * d, 0.0, 1.0), b, d);
        let mask = Array2::from_shape_fn((b, d), |(i, j)| (i + 2 * j + inst as usize).is_multiple_of(3));
        let out = mask_loss(&heads, mat(&h, b, m).view(), x.view(), mask.view()).unwrap();

        let fh = |hv: &[f64]| {
            mask_loss(&heads, mat(hv, b, m).view(), x.view(), mask.view()).unwrap().loss
        };
        let err_h = max_rel_error(out.grad_input.as_slice().unwrap(), &central_diff(fh, &h, FD_STEP));

        let theta = dense_flat(&heads.mask_decoder);
        let fp = |t: &[f64]| {
            let mut hd = heads.clone();
            hd.mask_decoder = dense_from(t, m, d);
            mask_loss(&hd, mat(&h, b, m).view(), x.view(), mask.view()).unwrap().loss
        };
        let err_p = max_rel_error(&dense_flat(&out.grad_head), &central_diff(fp, &theta, FD_STEP));
        worst = worst.max(err_h).max(err_p);
    }
    worst
}

pub fn temporal_loss_gradient() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(400 + inst);
        let (b, m) = (6, 3);
        let heads = AuxHeads::init(m, 5, &mut r);
        let h = uniform_vec(&mut r, b * m, -1.0, 1.0);
        // successor rows held constant, as in training
        let target = mat(&h, b, m).slice(s![1.., ..]).to_owned();
        let inputs = |hv: &[f64]| mat(hv, b, m).slice(s![..b - 1, ..]).to_owned();
        let out = temporal_loss_against(&heads, inputs(&h).view(), target.view()).unwrap();

        let fh = |hv: &[f64]| {
            temporal_loss_against(&heads, inputs(hv).view(), target.view()).unwrap().loss
        };
        let numeric = central_diff(fh, &h, FD_STEP);
        let mut analytic = out.grad_input.clone().into_raw_vec_and_offset().0;
        analytic.extend(std::iter::repeat_n(0.0, m));
        let err_h = max_rel_error(&analytic, &numeric);

        let theta = dense_flat(&heads.predictor);
        let fp = |t: &[f64]| {
            let mut hd = heads.clone();
            hd.predictor = dense_from(t, m, m);
            temporal_loss_against(&hd, inputs(&h).view(), target.view()).unwrap().loss
        };
        let err_p = max_rel_error(&dense_flat(&out.grad_head), &central_diff(fp, &theta, FD_STEP));
        worst = worst.max(err_h).max(err_p);
    }
    worst
}

pub fn joint_objective_gradient() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(500 + inst);
        let cfg = SslConfig {
            hidden_dim: 6,
            embedding_dim: Some(3),
            projection_dim: 3,
            lambda_c: 1.0,
            lambda_m: 0.5,
            lambda_t: 0.5,
            ..SslConfig::default()
        };
        let d = 5;
        let model = SslModel::init(d, &cfg, &mut r).unwrap();
        let x = mat(&uniform_vec(&mut r, 6 * d, 0.0, 1.0), 6, d);
        let aug = AugmentationConfig {
            noise_sigma: 0.1,
            mask_prob: 0.4,
        };
        let batch = augment_batch(x.view(), &aug, &mut r);
        let target = model.successor_targets(x.view()).unwrap();

        let out = model.objective(&batch, &cfg, Some(target.view())).unwrap();
        let theta = model.to_flat();
        let f = |t: &[f64]| {
            let mut m = model.clone();
            m.set_flat(t);
            m.objective(&batch, &cfg, Some(target.view())).unwrap().total.loss
        };
        let err = max_rel_error(&out.total.grads.to_flat(), &central_diff(f, &theta, FD_STEP));
        worst = worst.max(err);

        // the stop-gradient path agrees with explicitly pinned targets
        let free = model.objective(&batch, &cfg, None).unwrap();
        if free.total.loss != out.total.loss || free.total.grads != out.total.grads {
            worst = f64::INFINITY;
        }
    }
    worst
}

/// Penalized logistic loss written out directly.
pub fn logistic_oracle(params: &[f64], x: &Array2<f64>, y: &[u8], l2: f64) -> f64 {
    let k = x.ncols();
    let (w, b) = (&params[..k], params[k]);
    let data: f64 = x
        .outer_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let t = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
            let s = 1.0 / (1.0 + (-t).exp());
            if yi == 1 { -s.ln() } else { -(1.0 - s).ln() }
        })
        .sum::<f64>();
    data / y.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

pub fn logistic_loss_gradient() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(600 + inst);
        let (n, k) = (12, 4);
        let x = mat(&uniform_vec(&mut r, n * k, 0.0, 1.0), n, k);
        let y: Vec<u8> = (0..n).map(|i| (i as u64 + inst).is_multiple_of(3) as u8).collect();
        let theta = uniform_vec(&mut r, k + 1, -2.0, 2.0);
        let l2 = [0.0, 1e-4, 1e-3, 1e-2][inst as usize % 4];
        let params = ClassifierParams {
            weights: theta[..k].to_vec(),
            bias: theta[k],
            hyper: HyperParams { learning_rate: 0.1, l2_penalty: l2 },
        };
        let (loss, gw, gb) = loss_gradient(&params, x.view(), &y).unwrap();
        if (loss - logistic_oracle(&theta, &x, &y, l2)).abs() >= 1e-12 {
            worst = f64::INFINITY;
        }
        let mut analytic = gw;
        analytic.push(gb);
        let numeric = central_diff(|t| logistic_oracle(t, &x, &y, l2), &theta, FD_STEP);
        let err = max_rel_error(&analytic, &numeric);
        worst = worst.max(err);
    }
    worst
}
