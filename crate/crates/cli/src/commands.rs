use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::Args;
use qids_core::dataset::{encode, fit_normalizer, load_csv, read_matrix, split, split_indices, synth_dataset, write_matrix};
use qids_core::detect::{optimize_pipeline, predict_end_to_end, labels_from_scores, ModelBundle, PipelineRequest, Preprocessing};
use qids_core::metrics::{confusion, render_table, scores, RunRecord};
use qids_core::ssl::{load_checkpoint, save_checkpoint, train_ssl, Checkpoint};
use qids_core::{EncodedMatrix, FeatureSchema, FORMAT_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const DATASET: &str = "dataset.csv";
pub const INFORMATIVE: &str = "informative.txt";
pub const PREPROCESSING: &str = "preprocessing.json";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const LOSS_CURVE: &str = "loss_curve.csv";
pub const PRETRAIN_SUMMARY: &str = "pretrain.json";
pub const BUNDLE: &str = "bundle.json";
pub const REPORT: &str = "report.json";
pub const METRICS: &str = "metrics.json";
pub const TABLE: &str = "table.txt";

pub struct Context {
    pub out: PathBuf,
    pub json: bool,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::Output(format!("{}: {e}", self.out.display())))
    }

    /// Prints `summary` as JSON, or the text lines otherwise.
    fn emit(&self, summary: serde_json::Value, text: &[String]) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        } else {
            for line in text {
                println!("{line}");
            }
        }
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    write_bytes(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// JSON artifact stamped with the format version; `T` is flattened so the
/// file stays a single object.
#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    format_version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize, Deserialize)]
struct Runs {
    runs: Vec<RunRecord>,
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    split: qids_core::SplitSpec,
}

fn write_versioned<T: Serialize>(path: &Path, body: T) -> Result<()> {
    write_json(path, &Versioned { format_version: FORMAT_VERSION, body })
}

/// Reads a versioned artifact, refusing other versions before parsing the
/// body.
fn read_versioned<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let value: serde_json::Value = read_json(path)?;
    let found = value.get("format_version").and_then(serde_json::Value::as_u64);
    if found != Some(u64::from(FORMAT_VERSION)) {
        return Err(CliError::Mismatch(format!(
            "{}: format version {} is not supported (expected {FORMAT_VERSION})",
            path.display(),
            found.map_or("missing".to_string(), |v| v.to_string())
        )));
    }
    let file: Versioned<T> =
        serde_json::from_value(value).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(file.body)
}

fn load_matrix(path: &Path) -> Result<EncodedMatrix> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(read_matrix(BufReader::new(file))?)
}

fn save_matrix(path: &Path, m: &EncodedMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    write_matrix(m, &mut w)?;
    w.flush().map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn resolve_schema(spec: &str) -> Result<FeatureSchema> {
    match FeatureSchema::builtin(spec) {
        Some(s) => Ok(s),
        None => Ok(FeatureSchema::from_file(Path::new(spec))?),
    }
}

#[derive(Args)]
pub struct SynthArgs {
    /// Number of rows
    #[arg(long)]
    n: Option<usize>,
    /// Planted informative columns
    #[arg(long)]
    informative: Option<usize>,
    /// Pure-noise columns
    #[arg(long)]
    noise: Option<usize>,
    /// Class-mean separation in standard deviations
    #[arg(long)]
    sep: Option<f64>,
}

pub fn synth(ctx: &Context, cfg: &mut RunConfig, args: SynthArgs) -> Result<()> {
    let p = &mut cfg.synth;
    p.n = args.n.unwrap_or(p.n);
    p.informative = args.informative.unwrap_or(p.informative);
    p.noise = args.noise.unwrap_or(p.noise);
    p.separation = args.sep.unwrap_or(p.separation);
    *cfg = cfg.clone().finalize()?;
    let p = &cfg.synth;
    let data = synth_dataset(p.n, p.informative, p.noise, p.separation, cfg.synth_seed())?;
    ctx.ensure_out()?;
    save_matrix(&ctx.path(DATASET), &data.matrix)?;
    let mut text = format!("# qids-informative version={FORMAT_VERSION} (0-based column indices)\n");
    for i in &data.informative {
        text.push_str(&format!("{i}\n"));
    }
    write_bytes(&ctx.path(INFORMATIVE), text.as_bytes())?;
    ctx.emit(
        json!({
            "dataset": ctx.path(DATASET),
            "informative_file": ctx.path(INFORMATIVE),
            "rows": data.matrix.n_rows(),
            "columns": data.matrix.n_cols(),
            "informative": data.informative,
        }),
        &[
            format!("wrote {} ({} rows x {} columns)", ctx.path(DATASET).display(), data.matrix.n_rows(), data.matrix.n_cols()),
            format!("wrote {} (informative {:?})", ctx.path(INFORMATIVE).display(), data.informative),
        ],
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct PreprocessingFile {
    preprocessing: Preprocessing,
}

fn load_preprocessing(path: &Path) -> Result<Preprocessing> {
    read_versioned::<PreprocessingFile>(path).map(|f| f.preprocessing)
}

#[derive(Args)]
pub struct PreprocessArgs {
    /// Raw flow records (CSV)
    #[arg(long)]
    input: PathBuf,
    /// Built-in schema id (nsl_kdd, unsw_nb15) or a schema file
    #[arg(long)]
    schema: String,
    /// The CSV starts with a header row
    #[arg(long)]
    header: bool,
}

/// Normalization is fitted on the training block only; every row is then
/// encoded in file order.
pub fn preprocess(ctx: &Context, cfg: RunConfig, args: PreprocessArgs) -> Result<()> {
    let cfg = cfg.finalize()?;
    let schema = Arc::new(resolve_schema(&args.schema)?);
    let table = load_csv(&args.input, schema.clone(), args.header)?;
    let idx = split_indices(&table.labels(), true, &cfg.split)?;
    let normalization = fit_normalizer(&table.select(&idx.train))?;
    let encoded = encode(&table, &normalization, &schema)?;
    ctx.ensure_out()?;
    save_matrix(&ctx.path(DATASET), &encoded)?;
    let pre = PreprocessingFile {
        preprocessing: Preprocessing { schema: schema.as_ref().clone(), normalization },
    };
    write_versioned(&ctx.path(PREPROCESSING), pre)?;
    ctx.emit(
        json!({
            "dataset": ctx.path(DATASET),
            "preprocessing": ctx.path(PREPROCESSING),
            "rows": encoded.n_rows(),
            "encoded_width": encoded.n_cols(),
        }),
        &[format!(
            "encoded {} rows to width {}; wrote {} and {}",
            encoded.n_rows(),
            encoded.n_cols(),
            ctx.path(DATASET).display(),
            ctx.path(PREPROCESSING).display()
        )],
    );
    Ok(())
}

#[derive(Args)]
pub struct PretrainArgs {
    /// Encoded dataset [default: OUT/dataset.csv]
    #[arg(long)]
    data: Option<PathBuf>,
    /// Temporal-prediction weight; rejected on data without temporal order
    #[arg(long)]
    lambda_t: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct PretrainSummary {
    format_version: u32,
    final_loss: f64,
    epochs: usize,
    lambda_t: f64,
    seconds: f64,
}

pub fn pretrain(ctx: &Context, mut cfg: RunConfig, args: PretrainArgs) -> Result<()> {
    if let Some(l) = args.lambda_t {
        cfg.ssl.lambda_t = l;
        cfg.lambda_t_explicit = true;
    }
    if let Some(e) = args.epochs {
        cfg.ssl.epochs = e;
    }
    let cfg = cfg.finalize()?;
    let data = load_matrix(&args.data.unwrap_or_else(|| ctx.path(DATASET)))?;
    let mut ssl = cfg.ssl.clone();
    if !data.row_order_is_temporal && !cfg.lambda_t_explicit {
        ssl.lambda_t = 0.0;
    }
    let (train, _, _) = split(&data, &cfg.split)?;
    let start = Instant::now();
    let out = train_ssl(&train, &ssl)?;
    let seconds = start.elapsed().as_secs_f64();

    ctx.ensure_out()?;
    let final_loss = *out.loss_curve.last().expect("at least one epoch");
    save_checkpoint(&ctx.path(CHECKPOINT), &Checkpoint::new(ssl.clone(), out.model, out.loss_curve.clone()))?;
    let mut curve = format!("# qids-loss-curve version={FORMAT_VERSION}\nepoch,loss,contrastive,mask,temporal\n");
    for (e, (l, c)) in out.loss_curve.iter().zip(&out.component_curves).enumerate() {
        curve.push_str(&format!("{},{l},{},{},{}\n", e + 1, c[0], c[1], c[2]));
    }
    write_bytes(&ctx.path(LOSS_CURVE), curve.as_bytes())?;
    let summary = PretrainSummary { format_version: FORMAT_VERSION, final_loss, epochs: ssl.epochs, lambda_t: ssl.lambda_t, seconds };
    write_json(&ctx.path(PRETRAIN_SUMMARY), &summary)?;
    ctx.emit(
        serde_json::to_value(&summary).expect("summary serializes"),
        &[
            format!("final L_SSL {final_loss:.6} after {} epochs (lambda_t = {})", ssl.epochs, ssl.lambda_t),
            format!("wrote {}, {}", ctx.path(CHECKPOINT).display(), ctx.path(LOSS_CURVE).display()),
        ],
    );
    Ok(())
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// Encoded dataset [default: OUT/dataset.csv]
    #[arg(long)]
    data: Option<PathBuf>,
    /// Encoder checkpoint [default: OUT/checkpoint.json]
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Preprocessing to embed in the bundle [default: OUT/preprocessing.json if present]
    #[arg(long)]
    preprocessing: Option<PathBuf>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Also run the exhaustive search and record the gap to it
    #[arg(long)]
    oracle: bool,
}

pub fn optimize(ctx: &Context, mut cfg: RunConfig, args: OptimizeArgs) -> Result<()> {
    if let Some(p) = args.population {
        cfg.qga.population = p;
    }
    if let Some(g) = args.generations {
        cfg.qga.generations = g;
    }
    let cfg = cfg.finalize()?;
    let data = load_matrix(&args.data.unwrap_or_else(|| ctx.path(DATASET)))?;
    let ckpt = load_checkpoint(&args.checkpoint.unwrap_or_else(|| ctx.path(CHECKPOINT)))?;
    if ckpt.input_dim != data.n_cols() {
        return Err(CliError::Mismatch(format!(
            "checkpoint expects {} input columns, dataset has {}",
            ckpt.input_dim,
            data.n_cols()
        )));
    }
    let preprocessing = match args.preprocessing {
        Some(path) => Some(load_preprocessing(&path)?),
        None if ctx.path(PREPROCESSING).exists() => Some(load_preprocessing(&ctx.path(PREPROCESSING))?),
        None => None,
    };
    if let Some(pre) = &preprocessing {
        if pre.normalization.feature_names() != data.feature_names {
            return Err(CliError::Mismatch("preprocessing does not match the dataset columns".into()));
        }
    }
    let (train, val, _) = split(&data, &cfg.split)?;
    let out = optimize_pipeline(PipelineRequest {
        train: &train,
        val: &val,
        encoder: &ckpt.model.encoder,
        preprocessing,
        qga: &cfg.qga,
        weights: cfg.weights,
        ssl_config: Some(&ckpt.config),
        run_oracle: args.oracle,
    })?;
    ctx.ensure_out()?;
    out.bundle.save(&ctx.path(BUNDLE))?;
    write_json(&ctx.path(REPORT), &out.report)?;
    write_versioned(&ctx.path(SPLIT_FILE), SplitFile { split: cfg.split.clone() })?;

    let r = &out.report;
    let mut text = vec![
        format!(
            "best fitness {:.6} (accuracy {:.4}, fpr {:.4}, cost {:.4})",
            r.final_fitness, r.decomposition.accuracy, r.decomposition.fpr, r.decomposition.cost
        ),
        format!(
            "subset {:?} of m = {}, learning rate {}, l2 {}",
            out.bundle.subset, r.budget.embedding_dim, r.solution.hyper.learning_rate, r.solution.hyper.l2_penalty
        ),
        format!(
            "{} evaluations ({} distinct) over {} generations in {:.2}s",
            r.budget.evaluations_used, r.budget.distinct_evaluations, r.budget.generations_run, r.search_seconds
        ),
    ];
    if let Some(o) = &r.oracle {
        text.push(format!("exhaustive optimum {:.6} over {} candidates, gap {:.6}", o.fitness, o.evaluated, o.gap));
    }
    text.push(format!("wrote {} (sha256 {}), {}", ctx.path(BUNDLE).display(), r.bundle_digest, ctx.path(REPORT).display()));
    ctx.emit(
        json!({
            "bundle": ctx.path(BUNDLE),
            "report": ctx.path(REPORT),
            "digest": r.bundle_digest,
            "final_fitness": r.final_fitness,
            "subset": out.bundle.subset,
            "decomposition": r.decomposition,
            "budget": r.budget,
            "oracle": r.oracle,
        }),
        &text,
    );
    Ok(())
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Model bundle [default: OUT/bundle.json]
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Encoded dataset whose test split is scored [default: OUT/dataset.csv]
    #[arg(long, conflicts_with = "input")]
    data: Option<PathBuf>,
    /// Raw CSV scored end to end through the bundle's preprocessing
    #[arg(long)]
    input: Option<PathBuf>,
    /// Schema of --input [default: the bundle's]
    #[arg(long, requires = "input")]
    schema: Option<String>,
    /// The --input CSV starts with a header row
    #[arg(long, requires = "input")]
    header: bool,
    /// Method name for the report row
    #[arg(long, default_value = "qids")]
    method: String,
}

fn read_seconds(path: &Path, key: &str) -> f64 {
    fs::read_to_string(path)
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v.get(key).and_then(serde_json::Value::as_f64))
        .unwrap_or(0.0)
}

pub fn evaluate(ctx: &Context, args: EvaluateArgs) -> Result<()> {
    let bundle_path = args.bundle.unwrap_or_else(|| ctx.path(BUNDLE));
    let bundle = ModelBundle::load(&bundle_path)?;
    let mut extra = serde_json::Map::new();
    let (y, pred) = match &args.input {
        Some(input) => {
            let pre = bundle
                .preprocessing
                .as_ref()
                .ok_or_else(|| CliError::Mismatch("bundle was built without preprocessing; use --data".into()))?;
            let schema = match &args.schema {
                Some(s) => resolve_schema(s)?,
                None => pre.schema.clone(),
            };
            if schema != pre.schema {
                return Err(CliError::Mismatch(format!(
                    "schema '{}' does not match the bundle's '{}'",
                    schema.dataset_id, pre.schema.dataset_id
                )));
            }
            let table = load_csv(input, Arc::new(schema), args.header)?;
            let p = predict_end_to_end(&bundle, &table)?;
            extra.insert("rows_per_second".into(), json!(p.rows_per_second));
            (table.labels(), p.labels)
        }
        None => {
            let data = load_matrix(&args.data.clone().unwrap_or_else(|| ctx.path(DATASET)))?;
            if data.feature_names != bundle.feature_names {
                return Err(CliError::Mismatch("dataset columns do not match the bundle".into()));
            }
            let cfg = read_split(&bundle_path)?;
            let (_, _, test) = split(&data, &cfg)?;
            let start = Instant::now();
            let s = bundle.score_encoded(test.values.view())?;
            let secs = start.elapsed().as_secs_f64();
            extra.insert("rows_per_second".into(), json!(if secs > 0.0 { s.len() as f64 / secs } else { 0.0 }));
            (test.labels, labels_from_scores(&s))
        }
    };
    let counts = confusion(&y, &pred)?;
    let dir = bundle_path.parent().unwrap_or(Path::new("."));
    let record = RunRecord {
        method: args.method,
        scores: scores(&counts),
        pretrain_seconds: read_seconds(&dir.join(PRETRAIN_SUMMARY), "seconds"),
        search_seconds: read_seconds(&dir.join(REPORT), "search_seconds"),
    };
    let records = vec![record];
    ctx.ensure_out()?;
    write_versioned(&ctx.path(METRICS), Runs { runs: records.clone() })?;
    let table = render_table(&records);
    write_bytes(&ctx.path(TABLE), table.as_bytes())?;
    if ctx.json {
        println!("{}", serde_json::to_string_pretty(&records).expect("records serialize"));
    } else {
        print!("{table}");
        println!(
            "confusion tp={} fp={} tn={} fn={}; rows/s {:.0}",
            counts.tp,
            counts.fp,
            counts.tn,
            counts.fn_,
            extra["rows_per_second"].as_f64().unwrap_or(0.0)
        );
    }
    Ok(())
}

/// The split used at optimize time, read from next to the bundle so the
/// scored rows are the held-out ones.
fn read_split(bundle_path: &Path) -> Result<qids_core::SplitSpec> {
    let path = bundle_path.parent().unwrap_or(Path::new(".")).join(SPLIT_FILE);
    if path.exists() {
        read_versioned::<SplitFile>(&path).map(|f| f.split)
    } else {
        Ok(qids_core::SplitSpec::default())
    }
}

pub const SPLIT_FILE: &str = "split.json";

#[derive(Args)]
pub struct ReportArgs {
    /// Evaluation records written by `evaluate` (metrics.json files)
    #[arg(long = "runs", required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
}

pub fn report(ctx: &Context, args: ReportArgs) -> Result<()> {
    let mut records: Vec<RunRecord> = Vec::new();
    for path in &args.runs {
        records.extend(read_versioned::<Runs>(path)?.runs);
    }
    ctx.ensure_out()?;
    let table = render_table(&records);
    write_bytes(&ctx.path(TABLE), table.as_bytes())?;
    write_versioned(&ctx.path("table.json"), Runs { runs: records.clone() })?;
    if ctx.json {
        println!("{}", serde_json::to_string_pretty(&records).expect("records serialize"));
    } else {
        print!("{table}");
    }
    Ok(())
}
