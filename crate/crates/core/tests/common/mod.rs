//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

pub mod gradcheck;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub const FD_STEP: f64 = 1e-5;

/// Gradients that vanish analytically are compared on an absolute scale
/// below this magnitude.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn central_diff<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR))
        .fold(0.0, f64::max)
}

/// Naive per-row confusion counts (tp, fp, tn, fn) and metric values.
pub fn loop_metrics(y: &[u8], p: &[u8]) -> ([usize; 4], [Option<f64>; 5]) {
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..y.len() {
        if y[i] == 1 && p[i] == 1 {
            tp += 1;
        } else if y[i] == 0 && p[i] == 1 {
            fp += 1;
        } else if y[i] == 0 && p[i] == 0 {
            tn += 1;
        } else {
            fneg += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { None } else { Some(a as f64 / b as f64) };
    let accuracy = ratio(tp + tn, y.len());
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = match (precision, recall) {
        (Some(_), Some(_)) => ratio(2 * tp, 2 * tp + fp + fneg),
        _ => None,
    };
    let fpr = ratio(fp, fp + tn);
    ([tp, fp, tn, fneg], [accuracy, precision, recall, f1, fpr])
}

/// Absolute point-biserial correlation of each column with binary labels,
/// computed directly from the class-conditional means.
pub fn point_biserial(columns: &[Vec<f64>], labels: &[u8]) -> Vec<f64> {
    let n = labels.len() as f64;
    let n1 = labels.iter().filter(|&&l| l == 1).count() as f64;
    let n0 = n - n1;
    columns
        .iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if var <= 0.0 || n0 == 0.0 || n1 == 0.0 {
                return 0.0;
            }
            let mut m1 = 0.0;
            let mut m0 = 0.0;
            for (v, &l) in col.iter().zip(labels) {
                if l == 1 {
                    m1 += v;
                } else {
                    m0 += v;
                }
            }
            m1 /= n1;
            m0 /= n0;
            ((m1 - m0) / var.sqrt() * (n1 * n0 / (n * n)).sqrt()).abs()
        })
        .collect()
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}
