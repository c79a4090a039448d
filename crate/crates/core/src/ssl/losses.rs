//! Pretext losses with exact gradients.

use ndarray::{s, Array2, ArrayView2, Axis};

use super::layers::{AuxHeads, Dense};
use super::{Result, SslError};

/// Added to vector norms so cosine similarity is total at the origin.
pub const NORM_EPS: f64 = 1e-12;

pub fn cosine_sim(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / ((nu + NORM_EPS) * (nv + NORM_EPS))
}

#[derive(Debug, Clone)]
pub struct NtXent {
    pub loss: f64,
    pub grad_first: Array2<f64>,
    pub grad_second: Array2<f64>,
}

/// Normalised temperature-scaled cross entropy over `N` positive pairs
/// (row `i` of `first` with row `i` of `second`). Each of the `2N` embeddings
/// acts once as anchor; the anchor's own similarity is excluded from the
/// denominator and the result is the mean over anchors.
pub fn ntxent_loss(first: ArrayView2<f64>, second: ArrayView2<f64>, tau: f64) -> Result<NtXent> {
    if first.dim() != second.dim() {
        return Err(SslError::DimensionMismatch(format!(
            "paired views differ in shape: {:?} vs {:?}",
            first.dim(),
            second.dim()
        )));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(SslError::InvalidConfig(format!("temperature must be > 0, got {tau}")));
    }
    let n = first.nrows();
    if n == 0 {
        return Err(SslError::DimensionMismatch("empty batch".into()));
    }
    let z = ndarray::concatenate(Axis(0), &[first, second]).expect("same width");
    let two_n = 2 * n;
    let norms: Vec<f64> = z.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    if let Some(k) = norms.iter().position(|&nk| nk < NORM_EPS) {
        return Err(SslError::DegenerateEmbedding(k));
    }
    let mut u = z.clone();
    for (mut row, &nk) in u.rows_mut().into_iter().zip(&norms) {
        row /= nk + NORM_EPS;
    }
    let sim = u.dot(&u.t());

    let partner = |k: usize| if k < n { k + n } else { k - n };
    let mut loss = 0.0;
    let mut g = Array2::<f64>::zeros((two_n, two_n));
    let scale = 1.0 / (tau * two_n as f64);
    for k in 0..two_n {
        let max = (0..two_n)
            .filter(|&j| j != k)
            .map(|j| sim[[k, j]] / tau)
            .fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..two_n)
            .filter(|&j| j != k)
            .map(|j| (sim[[k, j]] / tau - max).exp())
            .sum();
        let lse = max + denom.ln();
        let p = partner(k);
        loss += lse - sim[[k, p]] / tau;
        for j in (0..two_n).filter(|&j| j != k) {
            let soft = (sim[[k, j]] / tau - lse).exp();
            g[[k, j]] = scale * (soft - if j == p { 1.0 } else { 0.0 });
        }
    }
    loss /= two_n as f64;

    // sim is symmetric in (k, j), so both orientations feed each row.
    let g_sym = &g + &g.t();
    let d_u = g_sym.dot(&u);
    let mut d_z = Array2::<f64>::zeros(z.dim());
    for (k, &nk) in norms.iter().enumerate() {
        let r = nk + NORM_EPS;
        let zk = z.row(k);
        let gk = d_u.row(k);
        let proj = zk.dot(&gk) / (nk * r * r);
        let mut out = d_z.row_mut(k);
        out.assign(&(&gk / r));
        out.scaled_add(-proj, &zk);
    }
    Ok(NtXent {
        loss,
        grad_first: d_z.slice(s![..n, ..]).to_owned(),
        grad_second: d_z.slice(s![n.., ..]).to_owned(),
    })
}

/// Loss value plus gradients for one head and for its input embeddings.
#[derive(Debug, Clone)]
pub struct HeadLoss {
    pub loss: f64,
    pub grad_head: Dense,
    pub grad_input: Array2<f64>,
}

/// Mean squared reconstruction error of the decoder output against the
/// original features, over masked positions only. An empty mask gives zero
/// loss and zero gradients.
pub fn mask_loss(
    heads: &AuxHeads,
    h: ArrayView2<f64>,
    original: ArrayView2<f64>,
    mask: ArrayView2<bool>,
) -> Result<HeadLoss> {
    let dec = &heads.mask_decoder;
    if h.ncols() != dec.input_dim()
        || original.ncols() != dec.output_dim()
        || h.nrows() != original.nrows()
        || original.dim() != mask.dim()
    {
        return Err(SslError::DimensionMismatch(format!(
            "mask loss: embeddings {:?}, originals {:?}, mask {:?}, decoder {}→{}",
            h.dim(),
            original.dim(),
            mask.dim(),
            dec.input_dim(),
            dec.output_dim()
        )));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Ok(HeadLoss {
            loss: 0.0,
            grad_head: dec.zeros_like(),
            grad_input: Array2::zeros(h.dim()),
        });
    }
    let recon = dec.forward(h);
    let mut d_recon = Array2::<f64>::zeros(recon.dim());
    let mut loss = 0.0;
    let inv = 1.0 / count as f64;
    ndarray::Zip::from(&mut d_recon)
        .and(&recon)
        .and(original)
        .and(mask)
        .for_each(|d, &r, &x, &m| {
            if m {
                let e = r - x;
                loss += e * e * inv;
                *d = 2.0 * e * inv;
            }
        });
    let (grad_head, grad_input) = dec.backward(h, d_recon.view());
    Ok(HeadLoss {
        loss,
        grad_head,
        grad_input,
    })
}

/// Next-row prediction: mean squared error between `predictor(h_t)` and
/// `target_t`. The target receives no gradient.
pub fn temporal_loss_against(
    heads: &AuxHeads,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
) -> Result<HeadLoss> {
    let pred = &heads.predictor;
    if inputs.dim() != targets.dim() || inputs.ncols() != pred.input_dim() {
        return Err(SslError::DimensionMismatch(format!(
            "temporal loss: inputs {:?}, targets {:?}, predictor {}→{}",
            inputs.dim(),
            targets.dim(),
            pred.input_dim(),
            pred.output_dim()
        )));
    }
    let out = pred.forward(inputs);
    let inv = 1.0 / out.len() as f64;
    let diff = &out - &targets;
    let loss = diff.iter().map(|e| e * e).sum::<f64>() * inv;
    let d_out = diff * (2.0 * inv);
    let (grad_head, grad_input) = pred.backward(inputs, d_out.view());
    Ok(HeadLoss {
        loss,
        grad_head,
        grad_input,
    })
}

/// Temporal loss over a contiguous window `h` (rows in time order): predicts
/// each `h_{t+1}` from `h_t` with the successor held constant. `grad_input`
/// covers all `B` rows; the last row gets zero.
pub fn temporal_loss(heads: &AuxHeads, h: ArrayView2<f64>) -> Result<HeadLoss> {
    let b = h.nrows();
    if b < 2 {
        return Err(SslError::WindowTooShort(b));
    }
    let mut out = temporal_loss_against(heads, h.slice(s![..b - 1, ..]), h.slice(s![1.., ..]))?;
    let mut full = Array2::zeros(h.dim());
    full.slice_mut(s![..b - 1, ..]).assign(&out.grad_input);
    out.grad_input = full;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn cosine_examples() {
        assert!((cosine_sim(&[1.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-9);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine_sim(&[1.0, 1.0], &[1.0, 0.0]) - 0.707_106_781_186_547_5).abs() < 1e-6);
        assert_eq!(cosine_sim(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn single_pair_has_zero_loss() {
        let a = array![[0.3, -1.2, 4.0]];
        let b = array![[-2.0, 0.5, 0.1]];
        let out = ntxent_loss(a.view(), b.view(), 0.5).unwrap();
        assert_eq!(out.loss, 0.0);
    }

    #[test]
    fn two_orthogonal_pairs() {
        let first = array![[1.0, 0.0], [0.0, 1.0]];
        let second = first.clone();
        let out = ntxent_loss(first.view(), second.view(), 1.0).unwrap();
        let e = std::f64::consts::E;
        let expected = -(e / (e + 2.0)).ln();
        assert!((out.loss - expected).abs() < 1e-6, "{} vs {expected}", out.loss);
        assert!((expected - 0.5514).abs() < 1e-4);
    }

    #[test]
    fn zero_embedding_is_degenerate() {
        let first = array![[1.0, 0.0], [0.0, 0.0]];
        let second = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            ntxent_loss(first.view(), second.view(), 0.5),
            Err(SslError::DegenerateEmbedding(1))
        ));
    }

    fn heads(m: usize, d: usize) -> AuxHeads {
        AuxHeads::init(m, d, &mut crate::seed::rng(5))
    }

    #[test]
    fn perfect_reconstruction_and_empty_mask() {
        let mut hd = heads(2, 2);
        hd.mask_decoder = Dense {
            weight: Array2::eye(2),
            bias: Array1::zeros(2),
        };
        let h = array![[0.2, 0.7]];
        let mask = array![[true, false]];
        let out = mask_loss(&hd, h.view(), h.view(), mask.view()).unwrap();
        assert_eq!(out.loss, 0.0);

        let x = array![[5.0, 5.0]];
        let none = array![[false, false]];
        let out = mask_loss(&hd, h.view(), x.view(), none.view()).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.grad_input.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn temporal_perfect_prediction_and_short_window() {
        let mut hd = heads(2, 3);
        hd.predictor = Dense {
            weight: Array2::zeros((2, 2)),
            bias: array![1.0, 2.0],
        };
        let h = array![[0.0, 0.0], [1.0, 2.0], [1.0, 2.0]];
        assert_eq!(temporal_loss(&hd, h.view()).unwrap().loss, 0.0);
        let one = array![[1.0, 2.0]];
        assert!(matches!(
            temporal_loss(&hd, one.view()),
            Err(SslError::WindowTooShort(1))
        ));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn views() -> impl Strategy<Value = (Array2<f64>, Array2<f64>)> {
            (2usize..6, 2usize..5).prop_flat_map(|(n, p)| {
                let cell = prop_oneof![-2.0..-0.1f64, 0.1..2.0f64];
                (
                    proptest::collection::vec(cell.clone(), n * p),
                    proptest::collection::vec(cell, n * p),
                )
                    .prop_map(move |(a, b)| {
                        (
                            Array2::from_shape_vec((n, p), a).unwrap(),
                            Array2::from_shape_vec((n, p), b).unwrap(),
                        )
                    })
            })
        }

        proptest! {
            #[test]
            fn pair_relabeling_invariant((a, b) in views(), tau in 0.1..2.0f64) {
                let ab = ntxent_loss(a.view(), b.view(), tau).unwrap().loss;
                let ba = ntxent_loss(b.view(), a.view(), tau).unwrap().loss;
                prop_assert!((ab - ba).abs() < 1e-9);
            }

            #[test]
            fn common_rescaling_invariant((a, b) in views(), c in 0.1..10.0f64) {
                let base = ntxent_loss(a.view(), b.view(), 0.5).unwrap().loss;
                let scaled = ntxent_loss((&a * c).view(), (&b * c).view(), 0.5).unwrap().loss;
                prop_assert!((base - scaled).abs() < 1e-9);
            }
        }
    }
}
