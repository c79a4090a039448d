use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::{DatasetError, EncodedMatrix, Result};
use crate::seed;

/// Planted-feature dataset plus the ground-truth informative columns (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub matrix: EncodedMatrix,
    pub informative: Vec<usize>,
}

/// Two balanced Gaussian classes whose means differ by `separation` standard
/// deviations on `d_inf` randomly placed columns; the remaining `d_noise`
/// columns are class-independent N(0, 1). Every column is min-max rescaled to
/// `[0, 1]` over the whole sample.
pub fn synth_dataset(
    n: usize,
    d_inf: usize,
    d_noise: usize,
    separation: f64,
    seed: u64,
) -> Result<SynthDataset> {
    if n < 4 {
        return Err(DatasetError::InvalidDimensions(format!("n = {n}, need at least 4")));
    }
    if d_inf == 0 {
        return Err(DatasetError::InvalidDimensions(
            "need at least one informative dimension".into(),
        ));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(DatasetError::InvalidDimensions(format!(
            "separation must be finite and non-negative, got {separation}"
        )));
    }
    let d = d_inf + d_noise;
    let mut rng = seed::rng(seed);

    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2)).collect();
    labels.shuffle(&mut rng);
    let mut columns: Vec<usize> = (0..d).collect();
    columns.shuffle(&mut rng);
    let mut informative = columns[..d_inf].to_vec();
    informative.sort_unstable();
    let mut is_informative = vec![false; d];
    for &c in &informative {
        is_informative[c] = true;
    }

    let half = separation / 2.0;
    let mut values = Array2::<f64>::zeros((n, d));
    for (i, mut row) in values.rows_mut().into_iter().enumerate() {
        let shift = if labels[i] == 1 { half } else { -half };
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = if is_informative[j] { z + shift } else { z };
        }
    }
    for mut col in values.columns_mut() {
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        col.mapv_inplace(|v| if span > 0.0 { (v - min) / span } else { 0.0 });
    }

    let names = (0..d).map(|j| format!("x{j}")).collect();
    Ok(SynthDataset {
        matrix: EncodedMatrix::new(values, labels, names, false)?,
        informative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_balance_and_range() {
        let s = synth_dataset(100, 3, 5, 2.0, 1).unwrap();
        assert_eq!(s.matrix.n_rows(), 100);
        assert_eq!(s.matrix.n_cols(), 8);
        assert_eq!(s.matrix.class_counts(), [50, 50]);
        assert_eq!(s.informative.len(), 3);
        assert!(s.matrix.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = synth_dataset(200, 4, 8, 3.0, 7).unwrap();
        let b = synth_dataset(200, 4, 8, 3.0, 7).unwrap();
        assert_eq!(a, b);
        let c = synth_dataset(200, 4, 8, 3.0, 8).unwrap();
        assert_ne!(a.matrix.values, c.matrix.values);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(synth_dataset(3, 1, 1, 1.0, 0).is_err());
        assert!(synth_dataset(10, 0, 1, 1.0, 0).is_err());
        assert!(synth_dataset(10, 1, 1, -1.0, 0).is_err());
        assert!(synth_dataset(10, 1, 1, f64::NAN, 0).is_err());
    }

    #[test]
    fn informative_columns_carry_the_mean_shift() {
        let s = synth_dataset(2000, 2, 2, 3.0, 3).unwrap();
        let m = &s.matrix;
        for j in 0..4 {
            let (mut s0, mut s1) = (0.0, 0.0);
            for (v, &l) in m.values.column(j).iter().zip(&m.labels) {
                if l == 1 { s1 += v } else { s0 += v }
            }
            let gap = (s1 - s0).abs() / 1000.0;
            if s.informative.contains(&j) {
                assert!(gap > 0.2, "column {j} gap {gap}");
            } else {
                assert!(gap < 0.05, "column {j} gap {gap}");
            }
        }
    }
}
