use std::collections::HashMap;

use rayon::prelude::*;

use super::{decode, Fitness, FitnessBreakdown, HyperGrids, MeasuredSolution, QgaError, Result};

pub const ORACLE_MAX_FEATURES: usize = 14;
pub const ORACLE_MAX_BITS: usize = 18;

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub solution: MeasuredSolution,
    pub breakdown: FitnessBreakdown,
    pub evaluated: usize,
    /// Every evaluated bitstring with its score.
    pub table: HashMap<Vec<bool>, FitnessBreakdown>,
}

/// Scores every nonempty subset under every grid cell. Ties resolve to the
/// lexicographically smallest bitstring (0 < 1, feature bits first).
pub fn exhaustive_oracle<F: Fitness + ?Sized>(fitness: &F, grids: &HyperGrids) -> Result<OracleOutcome> {
    grids.validate()?;
    let m = fitness.feature_count();
    let n_q = m + grids.n_bits();
    if m > ORACLE_MAX_FEATURES || n_q > ORACLE_MAX_BITS {
        return Err(QgaError::TooLarge { features: m, bits: n_q });
    }
    let candidates: Vec<Vec<bool>> = (0u64..1 << n_q)
        .map(|k| (0..n_q).map(|i| (k >> (n_q - 1 - i)) & 1 == 1).collect::<Vec<bool>>())
        .filter(|bits| bits[..m].iter().any(|&b| b))
        .collect();
    let scored = candidates
        .par_iter()
        .map(|bits| {
            let sol = decode(bits, m, grids, None)?;
            let score = fitness.evaluate(&sol)?;
            Ok((sol, score))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, (_, s)) in scored.iter().enumerate() {
        if s.fitness > scored[best].1.fitness {
            best = i;
        }
    }
    let (solution, breakdown) = scored[best].clone();
    let table = scored.into_iter().map(|(sol, s)| (sol.bits, s)).collect();
    Ok(OracleOutcome { solution, breakdown, evaluated: candidates.len(), table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qga::evolve::tests::TargetFitness;
    use crate::qga::{evolve, FitnessWeights, HyperParams, QgaConfig};

    fn no_hyper() -> HyperGrids {
        HyperGrids::fixed(HyperParams { learning_rate: 0.1, l2_penalty: 0.0 })
    }

    #[test]
    fn counts_nonempty_subsets() {
        let out = exhaustive_oracle(&TargetFitness::new(&[true, false]), &no_hyper()).unwrap();
        assert_eq!(out.evaluated, 3);
        assert_eq!(out.solution.subset, vec![0]);
    }

    #[test]
    fn single_feature() {
        let out = exhaustive_oracle(&TargetFitness::new(&[false]), &no_hyper()).unwrap();
        assert_eq!(out.evaluated, 1);
        assert_eq!(out.solution.subset, vec![0]);
    }

    struct Flat;
    impl Fitness for Flat {
        fn feature_count(&self) -> usize {
            3
        }
        fn evaluate(&self, _: &MeasuredSolution) -> Result<FitnessBreakdown> {
            Ok(FitnessBreakdown::from_terms(&FitnessWeights::default(), 0.5, 0.5, 0.5))
        }
    }

    #[test]
    fn ties_pick_smallest_bitstring() {
        let out = exhaustive_oracle(&Flat, &HyperGrids::default()).unwrap();
        assert_eq!(out.evaluated, 7 * 16);
        assert_eq!(out.solution.bits, vec![false, false, true, false, false, false, false]);
    }

    #[test]
    fn too_large() {
        let f = TargetFitness::new(&[true; 15]);
        assert!(matches!(exhaustive_oracle(&f, &no_hyper()), Err(QgaError::TooLarge { .. })));
        let f = TargetFitness::new(&[true; 14]);
        let mut grids = HyperGrids::default();
        grids.learning_rates.extend([0.003, 0.001, 3e-4, 1e-4]);
        assert!(matches!(
            exhaustive_oracle(&f, &grids),
            Err(QgaError::TooLarge { features: 14, bits: 19 })
        ));
    }

    #[test]
    fn dominates_evolve() {
        let f = TargetFitness::new(&[true, false, true, true, false, false, true, false]);
        let oracle = exhaustive_oracle(&f, &HyperGrids::default()).unwrap();
        for seed in 0..5 {
            let out = evolve(&QgaConfig { seed, ..QgaConfig::default() }, &f).unwrap();
            assert!(oracle.breakdown.fitness >= out.best.fitness);
        }
    }
}
