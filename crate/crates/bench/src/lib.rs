//! Shared workloads for the pipeline benchmarks.

use qids_core::dataset::{split, synth_dataset};
use qids_core::detect::EvaluationContext;
use qids_core::{EncodedMatrix, FitnessWeights, QgaConfig, SplitSpec, SslConfig};

/// Planted-feature data already split into train, validation and test.
pub struct Workload {
    pub train: EncodedMatrix,
    pub val: EncodedMatrix,
    pub test: EncodedMatrix,
}

pub fn workload(n: usize, seed: u64) -> Workload {
    let data = synth_dataset(n, 4, 8, 3.0, seed).expect("valid synth parameters").matrix;
    let (train, val, test) = split(&data, &SplitSpec::default()).expect("default split");
    Workload { train, val, test }
}

/// Fitness context scored directly on the raw columns, so search benchmarks
/// do not depend on encoder quality.
pub fn identity_context(w: &Workload) -> EvaluationContext {
    EvaluationContext::new(
        w.train.values.clone(),
        w.train.labels.clone(),
        w.val.values.clone(),
        w.val.labels.clone(),
        FitnessWeights::default(),
        0,
    )
    .expect("consistent workload")
}

/// Default encoder settings trained for a single epoch without the temporal
/// term.
pub fn one_epoch_ssl(seed: u64) -> SslConfig {
    SslConfig { epochs: 1, lambda_t: 0.0, seed, ..SslConfig::default() }
}

/// Default search settings cut down to `generations`, run serially so
/// timings are comparable across machines.
pub fn short_search(generations: usize, seed: u64) -> QgaConfig {
    QgaConfig { generations, patience: 0, parallel: false, seed, ..QgaConfig::default() }
}
