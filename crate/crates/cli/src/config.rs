//! Line-oriented `key = value` run configuration with dotted section
//! prefixes, e.g. `qga.population = 20`. Later assignments win, and command
//! line flags are applied after the file.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use qids_core::qga::{FitnessWeights, QgaConfig};
use qids_core::seed;
use qids_core::{SplitSpec, SslConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n: usize,
    pub informative: usize,
    pub noise: usize,
    pub separation: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { n: 2000, informative: 4, noise: 8, separation: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub seed: u64,
    pub split: SplitSpec,
    pub ssl: SslConfig,
    /// Whether `ssl.lambda_t` was set explicitly; otherwise it is dropped to
    /// zero on data without temporal order.
    pub lambda_t_explicit: bool,
    pub qga: QgaConfig,
    pub weights: FitnessWeights,
    pub synth: SynthParams,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Invalid(format!("invalid value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "seed" => self.seed = parse(key, v)?,
            "split.train" => self.split.train = parse(key, v)?,
            "split.val" => self.split.val = parse(key, v)?,
            "split.test" => self.split.test = parse(key, v)?,
            "split.stratified" => self.split.stratified = parse(key, v)?,
            "ssl.tau" => self.ssl.tau = parse(key, v)?,
            "ssl.lambda_c" => self.ssl.lambda_c = parse(key, v)?,
            "ssl.lambda_m" => self.ssl.lambda_m = parse(key, v)?,
            "ssl.lambda_t" => {
                self.ssl.lambda_t = parse(key, v)?;
                self.lambda_t_explicit = true;
            }
            "ssl.batch_size" => self.ssl.batch_size = parse(key, v)?,
            "ssl.epochs" => self.ssl.epochs = parse(key, v)?,
            "ssl.learning_rate" => self.ssl.learning_rate = parse(key, v)?,
            "ssl.momentum" => self.ssl.momentum = parse(key, v)?,
            "ssl.hidden_dim" => self.ssl.hidden_dim = parse(key, v)?,
            "ssl.embedding_dim" => self.ssl.embedding_dim = Some(parse(key, v)?),
            "ssl.projection_dim" => self.ssl.projection_dim = parse(key, v)?,
            "ssl.noise_sigma" => self.ssl.augmentation.noise_sigma = parse(key, v)?,
            "ssl.mask_prob" => self.ssl.augmentation.mask_prob = parse(key, v)?,
            "qga.population" => self.qga.population = parse(key, v)?,
            "qga.generations" => self.qga.generations = parse(key, v)?,
            "qga.delta_magnitude" => self.qga.delta_magnitude = parse(key, v)?,
            "qga.patience" => self.qga.patience = parse(key, v)?,
            "qga.parallel" => self.qga.parallel = parse(key, v)?,
            "qga.learning_rates" => self.qga.grids.learning_rates = parse_list(key, v)?,
            "qga.l2_penalties" => self.qga.grids.l2_penalties = parse_list(key, v)?,
            "fitness.w_acc" => self.weights.w_acc = parse(key, v)?,
            "fitness.w_fpr" => self.weights.w_fpr = parse(key, v)?,
            "fitness.w_cost" => self.weights.w_cost = parse(key, v)?,
            "synth.n" => self.synth.n = parse(key, v)?,
            "synth.informative" => self.synth.informative = parse(key, v)?,
            "synth.noise" => self.synth.noise = parse(key, v)?,
            "synth.sep" => self.synth.separation = parse(key, v)?,
            _ => return Err(CliError::Invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Pushes the root seed into every subsystem and checks all component
    /// invariants.
    pub fn finalize(mut self) -> Result<Self> {
        self.split.seed = self.seed;
        self.ssl.seed = seed::derive(self.seed, seed::TAG_SSL);
        self.qga.seed = seed::derive(self.seed, seed::TAG_QGA);
        self.split.validate()?;
        self.ssl.validate()?;
        self.qga.validate()?;
        self.weights.validate()?;
        Ok(self)
    }

    pub fn synth_seed(&self) -> u64 {
        seed::derive(self.seed, "synth")
    }
}
