use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{DetectError, Result};
use crate::qga::HyperParams;

pub const ITERATIONS: usize = 200;
pub const MAX_HALVINGS: usize = 10;
pub const THRESHOLD: f64 = 0.5;

/// Logistic detector over the selected embedding dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: HyperParams,
}

/// Column-major copy of the design matrix; each training iteration makes one
/// pass for the margins and one for the gradient.
struct Design<'a> {
    cols: Vec<f64>,
    n: usize,
    k: usize,
    y: &'a [u8],
}

#[derive(Clone)]
struct Eval {
    loss: f64,
    margin: Vec<f64>,
    residual: Vec<f64>,
}

impl Eval {
    fn with_rows(n: usize) -> Self {
        Eval { loss: 0.0, margin: vec![0.0; n], residual: vec![0.0; n] }
    }
}

// Terms of the form ln(1 + e) with e in (0, 1] are multiplied in blocks of
// this many before one logarithm; the block product stays below 2^64.
const LOG_BLOCK: usize = 64;

impl Design<'_> {
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    /// Penalized mean log-loss and the residuals `σ(t) − y`, written into `out`.
    fn eval_into(&self, w: &[f64], b: f64, l2: f64, out: &mut Eval) {
        out.margin.fill(b);
        for (j, &wj) in w.iter().enumerate() {
            for (t, x) in out.margin.iter_mut().zip(self.col(j)) {
                *t += wj * x;
            }
        }
        let mut linear = 0.0;
        let mut log_sum = 0.0;
        let mut block = 1.0;
        for (i, ((&t, r), &y)) in out.margin.iter().zip(out.residual.iter_mut()).zip(self.y).enumerate() {
            let e = (-t.abs()).exp();
            let yf = f64::from(y);
            linear += t.max(0.0) - yf * t;
            block *= 1.0 + e;
            if (i + 1) % LOG_BLOCK == 0 {
                log_sum += block.ln();
                block = 1.0;
            }
            let p = if t >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            *r = p - yf;
        }
        log_sum += block.ln();
        let penalty = 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        out.loss = (linear + log_sum) / self.n as f64 + penalty;
    }

    fn eval(&self, w: &[f64], b: f64, l2: f64) -> Eval {
        let mut out = Eval::with_rows(self.n);
        self.eval_into(w, b, l2, &mut out);
        out
    }

    fn gradient(&self, w: &[f64], l2: f64, residual: &[f64]) -> (Vec<f64>, f64) {
        let inv = 1.0 / self.n as f64;
        let gw = w
            .iter()
            .enumerate()
            .map(|(j, wj)| self.col(j).iter().zip(residual).map(|(x, r)| x * r).sum::<f64>() * inv + l2 * wj)
            .collect();
        (gw, residual.iter().sum::<f64>() * inv)
    }
}

fn design<'a>(z: ArrayView2<f64>, y: &'a [u8]) -> Result<Design<'a>> {
    let (n, k) = z.dim();
    if n == 0 || k == 0 {
        return Err(DetectError::EmptyInput);
    }
    if y.len() != n {
        return Err(DetectError::DimensionMismatch { expected: n, found: y.len() });
    }
    Ok(Design { cols: z.t().iter().copied().collect(), n, k, y })
}

fn check_labels(y: &[u8]) -> Result<()> {
    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == y.len() {
        return Err(DetectError::SingleClassTraining);
    }
    Ok(())
}

/// Penalized training loss `mean(log(1 + e^t) − y·t) + ½·l2·‖w‖²` where
/// `t = w·z + b`.
pub fn penalized_loss(params: &ClassifierParams, z: ArrayView2<f64>, y: &[u8]) -> Result<f64> {
    check_dim(params, z)?;
    Ok(design(z, y)?.eval(&params.weights, params.bias, params.hyper.l2_penalty).loss)
}

/// Loss and its gradient with respect to `(w, b)`.
pub fn loss_gradient(params: &ClassifierParams, z: ArrayView2<f64>, y: &[u8]) -> Result<(f64, Vec<f64>, f64)> {
    check_dim(params, z)?;
    let d = design(z, y)?;
    let l2 = params.hyper.l2_penalty;
    let e = d.eval(&params.weights, params.bias, l2);
    let (gw, gb) = d.gradient(&params.weights, l2, &e.residual);
    Ok((e.loss, gw, gb))
}

/// Full-batch gradient descent from zero for [`ITERATIONS`] steps. A step
/// that would raise the loss is halved up to [`MAX_HALVINGS`] times and
/// skipped if it still does. Returns the parameters and the loss before the
/// first step followed by the loss after each step.
pub fn train_classifier_traced(
    z: ArrayView2<f64>,
    y: &[u8],
    hyper: HyperParams,
) -> Result<(ClassifierParams, Vec<f64>)> {
    let d = design(z, y)?;
    check_labels(y)?;
    let l2 = hyper.l2_penalty;
    let mut w = vec![0.0; d.k];
    let mut b = 0.0;
    let mut current = d.eval(&w, b, l2);
    let mut trial = current.clone();
    let mut losses = Vec::with_capacity(ITERATIONS + 1);
    losses.push(current.loss);
    let mut trial_w = vec![0.0; d.k];
    for _ in 0..ITERATIONS {
        let (gw, gb) = d.gradient(&w, l2, &current.residual);
        let mut step = hyper.learning_rate;
        for _ in 0..=MAX_HALVINGS {
            for ((t, w), g) in trial_w.iter_mut().zip(&w).zip(&gw) {
                *t = w - step * g;
            }
            let trial_b = b - step * gb;
            d.eval_into(&trial_w, trial_b, l2, &mut trial);
            if trial.loss <= current.loss {
                w.copy_from_slice(&trial_w);
                b = trial_b;
                std::mem::swap(&mut current, &mut trial);
                break;
            }
            step *= 0.5;
        }
        losses.push(current.loss);
    }
    Ok((ClassifierParams { weights: w, bias: b, hyper }, losses))
}

pub fn train_classifier(z: ArrayView2<f64>, y: &[u8], hyper: HyperParams) -> Result<ClassifierParams> {
    train_classifier_traced(z, y, hyper).map(|(p, _)| p)
}

fn check_dim(params: &ClassifierParams, z: ArrayView2<f64>) -> Result<()> {
    if z.ncols() != params.weights.len() {
        return Err(DetectError::DimensionMismatch { expected: params.weights.len(), found: z.ncols() });
    }
    Ok(())
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Attack probability per row.
pub fn predict_scores(params: &ClassifierParams, z: ArrayView2<f64>) -> Result<Vec<f64>> {
    check_dim(params, z)?;
    Ok(z
        .axis_iter(Axis(0))
        .map(|row| sigmoid(params.bias + row.iter().zip(&params.weights).map(|(x, w)| x * w).sum::<f64>()))
        .collect())
}

pub fn labels_from_scores(scores: &[f64]) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= THRESHOLD)).collect()
}

/// Copies the listed columns into a new matrix.
pub fn select_columns(z: ArrayView2<f64>, subset: &[usize]) -> Result<Array2<f64>> {
    if let Some(&bad) = subset.iter().find(|&&j| j >= z.ncols()) {
        return Err(DetectError::InvalidSubset(format!("index {bad} out of range for {} dims", z.ncols())));
    }
    Ok(z.select(Axis(1), subset))
}
