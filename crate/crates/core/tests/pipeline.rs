mod common;

use std::sync::Arc;

use qids_core::dataset::{encode, fit_normalizer, load_csv, split, synth_dataset, RawValue};
use qids_core::detect::{
    optimize_pipeline, predict_end_to_end, predict_scores, select_columns, ClassifierParams, DetectError, ModelBundle,
    PipelineOutcome, PipelineRequest, Preprocessing, Provenance,
};
use qids_core::qga::{FitnessBreakdown, FitnessWeights, HyperParams, QgaConfig};
use qids_core::ssl::{encode_forward, train_ssl, EncoderParams, SslConfig};
use qids_core::{FeatureSchema, RawTable, SplitSpec};
use rand::Rng;

fn small_run(seed: u64, weights: FitnessWeights) -> PipelineOutcome {
    let data = synth_dataset(300, 3, 5, 3.0, seed).unwrap();
    let (train, val, _) = split(&data.matrix, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
    let ssl = SslConfig { epochs: 3, lambda_t: 0.0, batch_size: 32, seed, ..SslConfig::default() };
    let out = train_ssl(&train, &ssl).unwrap();
    let qga = QgaConfig { population: 6, generations: 5, seed, ..QgaConfig::default() };
    optimize_pipeline(PipelineRequest {
        train: &train,
        val: &val,
        encoder: &out.model.encoder,
        preprocessing: None,
        qga: &qga,
        weights,
        ssl_config: Some(&ssl),
        run_oracle: false,
    })
    .unwrap()
}

#[test]
fn bundle_round_trip_predicts_identically() {
    let run = small_run(1, FitnessWeights::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bundle.json");
    run.bundle.save(&path).unwrap();
    let back = ModelBundle::load(&path).unwrap();
    assert_eq!(back, run.bundle);
    assert_eq!(back.digest().unwrap(), run.bundle.digest().unwrap());
    let probe = synth_dataset(50, 3, 5, 3.0, 99).unwrap().matrix.values;
    let a = run.bundle.score_encoded(probe.view()).unwrap();
    let b = back.score_encoded(probe.view()).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn bundle_loader_refuses_other_versions() {
    let run = small_run(2, FitnessWeights::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bundle.json");
    let mut value = serde_json::to_value(&run.bundle).unwrap();
    value["format_version"] = 2.into();
    std::fs::write(&path, value.to_string()).unwrap();
    assert!(matches!(ModelBundle::load(&path), Err(DetectError::VersionMismatch { found: 2, expected: 1 })));
}

#[test]
fn recorded_fitness_matches_reevaluation() {
    let run = small_run(3, FitnessWeights::default());
    let hyper = run.report.solution.hyper;
    let again = run.context.score(&run.bundle.subset, hyper).unwrap();
    assert!((again.fitness - run.bundle.fitness.fitness).abs() <= 1e-12);
    assert_eq!(run.bundle.classifier.weights.len(), run.bundle.subset.len());
    assert_eq!(run.report.final_fitness, *run.report.trace.last().unwrap());
    assert_eq!(run.report.budget.subset_size, run.bundle.subset.len());
    assert!(run.report.budget.evaluations_used <= 6 * 5);
}

#[test]
fn end_to_end_deterministic() {
    let a = small_run(4, FitnessWeights::default());
    let b = small_run(4, FitnessWeights::default());
    assert_eq!(a.bundle.digest().unwrap(), b.bundle.digest().unwrap());
}

#[test]
fn accuracy_only_weights_complete() {
    let w = FitnessWeights { w_acc: 1.0, w_fpr: 0.0, w_cost: 0.0 };
    let run = small_run(5, w);
    let d = run.report.decomposition;
    assert!((d.fitness - d.accuracy).abs() < 1e-15);
    let run = small_run(5, FitnessWeights::default());
    let d = run.report.decomposition;
    assert!((d.fitness - (0.7 * d.accuracy + 0.2 * (1.0 - d.fpr) - 0.1 * d.cost)).abs() < 1e-12);
}

fn fixture_table() -> RawTable {
    let schema = Arc::new(FeatureSchema::builtin("nsl_kdd").unwrap());
    load_csv(&common::fixture("nsl_kdd_20.csv"), schema, false).unwrap()
}

fn fixture_bundle(table: &RawTable) -> ModelBundle {
    let norm = fit_normalizer(table).unwrap();
    let mut rng = common::rng(8);
    let d = norm.encoded_width();
    let encoder = EncoderParams::init(&[d, 16, 6], &mut rng).unwrap();
    let subset = vec![0, 2, 5];
    ModelBundle {
        format_version: qids_core::FORMAT_VERSION,
        feature_names: norm.feature_names(),
        preprocessing: Some(Preprocessing { schema: table.schema.as_ref().clone(), normalization: norm }),
        encoder,
        classifier: ClassifierParams {
            weights: common::uniform_vec(&mut rng, subset.len(), -2.0, 2.0),
            bias: 0.3,
            hyper: HyperParams { learning_rate: 0.1, l2_penalty: 0.0 },
        },
        subset,
        fitness: FitnessBreakdown { fitness: 0.0, accuracy: 0.0, fpr: 0.0, cost: 0.0, degenerate: false },
        provenance: Provenance {
            seed: 0,
            weights: FitnessWeights::default(),
            ssl_config_digest: None,
            qga_config_digest: String::new(),
        },
    }
}

/// Rows drawn around the fixture: numbers rescaled well outside the fitted
/// ranges, categories sometimes replaced by unseen values.
fn fuzzed_rows(table: &RawTable, n: usize, seed: u64) -> RawTable {
    let mut rng = common::rng(seed);
    let rows = (0..n)
        .map(|_| {
            let base = &table.rows[rng.random_range(0..table.len())];
            base.iter()
                .map(|cell| match cell {
                    RawValue::Number(v) => RawValue::Number(v * rng.random_range(0.0..3.0) + rng.random_range(-1.0..1.0)),
                    RawValue::Text(s) if rng.random_bool(0.2) => RawValue::Text(format!("{s}_unseen")),
                    other => other.clone(),
                })
                .collect()
        })
        .collect();
    RawTable::new(table.schema.clone(), rows).unwrap()
}

#[test]
fn end_to_end_equals_manual_composition() {
    let table = fixture_table();
    let bundle = fixture_bundle(&table);
    bundle.validate().unwrap();
    let rows = fuzzed_rows(&table, 100, 3);
    let pred = predict_end_to_end(&bundle, &rows).unwrap();

    let pre = bundle.preprocessing.as_ref().unwrap();
    let x = encode(&rows, &pre.normalization, &pre.schema).unwrap();
    let (h, _) = encode_forward(&bundle.encoder, x.values.view()).unwrap();
    let zs = select_columns(h.view(), &bundle.subset).unwrap();
    let manual = predict_scores(&bundle.classifier, zs.view()).unwrap();
    assert_eq!(pred.scores.len(), 100);
    for (a, b) in pred.scores.iter().zip(&manual) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(pred.rows_per_second > 0.0);
    assert!(pred.labels.iter().zip(&pred.scores).all(|(&l, &s)| l == u8::from(s >= 0.5)));
}

#[test]
fn end_to_end_rejects_other_schema() {
    let table = fixture_table();
    let bundle = fixture_bundle(&table);
    let unsw = Arc::new(FeatureSchema::builtin("unsw_nb15").unwrap());
    let width = unsw.columns.len();
    let other = RawTable::new(unsw, vec![vec![RawValue::Number(0.0); width]]).unwrap();
    assert!(matches!(predict_end_to_end(&bundle, &other), Err(DetectError::SchemaMismatch(_))));
}
