use std::time::Instant;

use ndarray::{concatenate, Axis};
use serde::{Deserialize, Serialize};

use super::{
    json_digest, qga_config_digest, select_columns, train_classifier, DetectError, EvaluationContext, ModelBundle,
    Preprocessing, Provenance, Result,
};
use crate::dataset::EncodedMatrix;
use crate::qga::{
    evolve, exhaustive_oracle, BestRecord, FitnessBreakdown, FitnessWeights, GenerationStats, MeasuredSolution,
    QgaConfig,
};
use crate::ssl::{EncoderParams, SslConfig};
use crate::FORMAT_VERSION;

pub struct PipelineRequest<'a> {
    pub train: &'a EncodedMatrix,
    pub val: &'a EncodedMatrix,
    pub encoder: &'a EncoderParams,
    pub preprocessing: Option<Preprocessing>,
    pub qga: &'a QgaConfig,
    pub weights: FitnessWeights,
    /// Recorded in the bundle provenance when given.
    pub ssl_config: Option<&'a SslConfig>,
    /// Also run the exhaustive search and report the gap to it.
    pub run_oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub population: usize,
    pub generations_planned: usize,
    pub generations_run: usize,
    pub evaluations_used: usize,
    pub distinct_evaluations: usize,
    pub embedding_dim: usize,
    pub subset_size: usize,
    pub hyper_bits: usize,
    pub train_rows: usize,
    pub val_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub solution: MeasuredSolution,
    pub fitness: f64,
    /// Oracle optimum minus the searched best.
    pub gap: f64,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub seed: u64,
    pub trace: Vec<f64>,
    pub generations: Vec<GenerationStats>,
    pub best: BestRecord,
    pub solution: MeasuredSolution,
    pub decomposition: FitnessBreakdown,
    pub final_fitness: f64,
    pub budget: SearchBudget,
    pub oracle: Option<OracleReport>,
    pub search_seconds: f64,
    pub bundle_digest: String,
}

pub struct PipelineOutcome {
    pub bundle: ModelBundle,
    pub report: RunReport,
    pub context: EvaluationContext,
}

/// Searches subsets and hyperparameters on the train/val embeddings, then
/// refits the classifier on train+val with the winner.
pub fn optimize_pipeline(req: PipelineRequest<'_>) -> Result<PipelineOutcome> {
    if req.train.feature_names != req.val.feature_names {
        return Err(DetectError::SchemaMismatch("train and validation columns differ".into()));
    }
    let start = Instant::now();
    let train_z = req.encoder.embed(req.train.values.view())?;
    let val_z = req.encoder.embed(req.val.values.view())?;
    let context = EvaluationContext::new(
        train_z,
        req.train.labels.clone(),
        val_z,
        req.val.labels.clone(),
        req.weights,
        req.qga.seed,
    )?;
    let search = evolve(req.qga, &context)?;

    let oracle = if req.run_oracle {
        let o = exhaustive_oracle(&context, &req.qga.grids)?;
        Some(OracleReport {
            gap: o.breakdown.fitness - search.best.fitness,
            fitness: o.breakdown.fitness,
            solution: o.solution,
            evaluated: o.evaluated,
        })
    } else {
        None
    };

    let subset = search.solution.subset.clone();
    let all_z = concatenate(Axis(0), &[context.train_z.view(), context.val_z.view()])
        .expect("embeddings share a width");
    let all_y: Vec<u8> = context.train_y.iter().chain(&context.val_y).copied().collect();
    let classifier = train_classifier(select_columns(all_z.view(), &subset)?.view(), &all_y, search.solution.hyper)?;
    let search_seconds = start.elapsed().as_secs_f64();

    let bundle = ModelBundle {
        format_version: FORMAT_VERSION,
        feature_names: req.train.feature_names.clone(),
        preprocessing: req.preprocessing,
        encoder: req.encoder.clone(),
        subset,
        classifier,
        fitness: search.breakdown,
        provenance: Provenance {
            seed: req.qga.seed,
            weights: req.weights,
            ssl_config_digest: req.ssl_config.map(json_digest).transpose()?,
            qga_config_digest: qga_config_digest(req.qga)?,
        },
    };
    bundle.validate()?;

    let report = RunReport {
        format_version: FORMAT_VERSION,
        seed: req.qga.seed,
        final_fitness: *search.trace.last().expect("nonempty trace"),
        budget: SearchBudget {
            population: req.qga.population,
            generations_planned: req.qga.generations,
            generations_run: search.trace.len(),
            evaluations_used: search.best.evaluations_used,
            distinct_evaluations: search.distinct_evaluations,
            embedding_dim: context.embedding_dim(),
            subset_size: bundle.subset.len(),
            hyper_bits: req.qga.grids.n_bits(),
            train_rows: context.train_y.len(),
            val_rows: context.val_y.len(),
        },
        trace: search.trace,
        generations: search.generations,
        best: search.best,
        solution: search.solution,
        decomposition: search.breakdown,
        oracle,
        search_seconds,
        bundle_digest: bundle.digest()?,
    };
    Ok(PipelineOutcome { bundle, report, context })
}
