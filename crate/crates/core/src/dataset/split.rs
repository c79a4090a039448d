use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetError, EncodedMatrix, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.6,
            val: 0.2,
            test: 0.2,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fr = [self.train, self.val, self.test];
        if fr.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(DatasetError::InvalidSplit(format!(
                "fractions must lie in (0, 1), got {fr:?}"
            )));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidSplit(format!(
                "fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    fn fractions(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

/// Row indices of each part, ascending within a part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `n` rows; every part gets at least one
/// row when `n >= 3`.
fn apportion(n: usize, fr: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fr.iter().map(|f| f * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        *s = (e + 1e-9).floor() as usize;
    }
    let mut rest = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - sizes[a] as f64;
        let rb = exact[b] - sizes[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        sizes[i] += 1;
        rest -= 1;
    }
    if n >= 3 {
        for i in 0..3 {
            if sizes[i] == 0 {
                let donor = (0..3).max_by_key(|&j| (sizes[j], usize::MAX - j)).unwrap();
                sizes[donor] -= 1;
                sizes[i] = 1;
            }
        }
    }
    sizes
}

/// Partitions rows. Temporal data is cut into contiguous blocks in order
/// (train, val, test) without shuffling; otherwise rows are shuffled with the
/// spec's seed, per class when stratified.
pub fn split_indices(labels: &[u8], temporal: bool, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let n = labels.len();
    if n < 3 {
        return Err(DatasetError::TooFewRows(format!("{n} rows, need at least 3")));
    }
    let fr = spec.fractions();
    let mut parts: [Vec<usize>; 3] = Default::default();

    if temporal {
        let [a, b, _] = apportion(n, fr);
        parts[0] = (0..a).collect();
        parts[1] = (a..a + b).collect();
        parts[2] = (a + b..n).collect();
    } else {
        let mut rng = seed::rng(seed::derive(spec.seed, seed::TAG_SPLIT));
        let groups: Vec<Vec<usize>> = if spec.stratified {
            let g: Vec<Vec<usize>> = (0..2u8)
                .map(|c| (0..n).filter(|&i| labels[i] == c).collect())
                .collect();
            for (c, idx) in g.iter().enumerate() {
                if idx.is_empty() {
                    return Err(DatasetError::ClassMissing(1 - c as u8));
                }
                if idx.len() < 3 {
                    return Err(DatasetError::TooFewRows(format!(
                        "class {c} has {} rows, stratification needs 3",
                        idx.len()
                    )));
                }
            }
            g
        } else {
            vec![(0..n).collect()]
        };
        for mut idx in groups {
            idx.shuffle(&mut rng);
            let sizes = apportion(idx.len(), fr);
            let mut start = 0;
            for (part, size) in parts.iter_mut().zip(sizes) {
                part.extend_from_slice(&idx[start..start + size]);
                start += size;
            }
        }
        for p in parts.iter_mut() {
            p.sort_unstable();
        }
    }
    let [train, val, test] = parts;
    Ok(SplitIndices { train, val, test })
}

pub fn split(
    m: &EncodedMatrix,
    spec: &SplitSpec,
) -> Result<(EncodedMatrix, EncodedMatrix, EncodedMatrix)> {
    let idx = split_indices(&m.labels, m.row_order_is_temporal, spec)?;
    Ok((
        m.select_rows(&idx.train),
        m.select_rows(&idx.val),
        m.select_rows(&idx.test),
    ))
}
