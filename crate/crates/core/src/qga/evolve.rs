use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    decode, init_population, Chromosome, Fitness, FitnessBreakdown, HyperGrids, MeasuredSolution,
    QgaError, Result,
};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QgaConfig {
    pub population: usize,
    pub generations: usize,
    /// Rotation step in radians.
    pub delta_magnitude: f64,
    /// Generations without improvement before stopping; 0 disables the stop.
    pub patience: usize,
    pub seed: u64,
    /// Evaluate a generation's candidates on the rayon pool. Results do not
    /// depend on this flag.
    pub parallel: bool,
    pub grids: HyperGrids,
}

impl Default for QgaConfig {
    fn default() -> Self {
        QgaConfig {
            population: 20,
            generations: 50,
            delta_magnitude: 0.05,
            patience: 15,
            seed: 0,
            parallel: true,
            grids: HyperGrids::default(),
        }
    }
}

impl QgaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(QgaError::InvalidConfig("population must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(QgaError::InvalidConfig("generations must be at least 1".into()));
        }
        if !self.delta_magnitude.is_finite() || self.delta_magnitude < 0.0 {
            return Err(QgaError::InvalidConfig("delta_magnitude must be finite and >= 0".into()));
        }
        self.grids.validate()
    }

    pub fn budget(&self) -> usize {
        self.population * self.generations
    }
}

/// Best solution seen so far and the search effort spent to reach the
/// current point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    #[serde(with = "super::bitstring")]
    pub bits: Vec<bool>,
    pub fitness: f64,
    pub generation_found: usize,
    pub evaluations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub best_so_far: f64,
    pub generation_best: f64,
    pub mean: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: BestRecord,
    pub solution: MeasuredSolution,
    pub breakdown: FitnessBreakdown,
    /// Best-so-far fitness after each generation.
    pub trace: Vec<f64>,
    pub generations: Vec<GenerationStats>,
    /// Calls into the fitness function (the rest were served from cache).
    pub distinct_evaluations: usize,
    pub population: Vec<Chromosome>,
}

struct Memo<'a, F: Fitness + ?Sized> {
    fitness: &'a F,
    cache: HashMap<Vec<bool>, FitnessBreakdown>,
    parallel: bool,
}

impl<'a, F: Fitness + ?Sized> Memo<'a, F> {
    fn new(fitness: &'a F, parallel: bool) -> Self {
        Memo { fitness, cache: HashMap::new(), parallel }
    }

    fn evaluate_all(&mut self, sols: &[MeasuredSolution]) -> Result<Vec<FitnessBreakdown>> {
        let mut pending: Vec<&MeasuredSolution> = Vec::new();
        for s in sols {
            if !self.cache.contains_key(&s.bits) && !pending.iter().any(|p| p.bits == s.bits) {
                pending.push(s);
            }
        }
        let results: Vec<Result<FitnessBreakdown>> = if self.parallel {
            pending.par_iter().map(|s| self.fitness.evaluate(s)).collect()
        } else {
            pending.iter().map(|s| self.fitness.evaluate(s)).collect()
        };
        for (s, r) in pending.into_iter().zip(results) {
            self.cache.insert(s.bits.clone(), r?);
        }
        Ok(sols.iter().map(|s| self.cache[&s.bits]).collect())
    }
}

/// Runs the quantum-inspired search. Candidate `i` of generation `g` measures
/// with the stream `mix(seed, [g, i])`, and the best record is reduced in
/// candidate order, so the result is the same serial or parallel.
pub fn evolve<F: Fitness + ?Sized>(cfg: &QgaConfig, fitness: &F) -> Result<EvolveOutcome> {
    cfg.validate()?;
    let m = fitness.feature_count();
    let n_q = m + cfg.grids.n_bits();
    let mut population = init_population(cfg.population, n_q);
    let mut memo = Memo::new(fitness, cfg.parallel);

    let mut best: Option<(BestRecord, MeasuredSolution, FitnessBreakdown)> = None;
    let mut trace = Vec::with_capacity(cfg.generations);
    let mut stats = Vec::with_capacity(cfg.generations);
    let mut evaluations = 0usize;
    let mut stale = 0usize;

    for gen in 0..cfg.generations {
        let start = Instant::now();
        let sols = population
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let mut rng = seed::rng(seed::mix(cfg.seed, &[gen as u64, idx as u64]));
                let bits = c.measure(&mut rng);
                let p = c.prob_one();
                decode(&bits, m, &cfg.grids, Some(&p[..m]))
            })
            .collect::<Result<Vec<_>>>()?;
        let scores = memo.evaluate_all(&sols)?;

        let mut improved = false;
        for (sol, score) in sols.iter().zip(&scores) {
            evaluations += 1;
            if best.as_ref().is_none_or(|(b, _, _)| score.fitness > b.fitness) {
                let record = BestRecord {
                    bits: sol.bits.clone(),
                    fitness: score.fitness,
                    generation_found: gen,
                    evaluations_used: evaluations,
                };
                best = Some((record, sol.clone(), *score));
                improved = true;
            }
        }
        let (record, _, _) = best.as_mut().expect("population is nonempty");
        record.evaluations_used = evaluations;

        for ((c, sol), score) in population.iter_mut().zip(&sols).zip(&scores) {
            c.rotate_toward(&sol.bits, &record.bits, score.fitness < record.fitness, cfg.delta_magnitude);
        }

        let generation_best = scores.iter().map(|s| s.fitness).fold(f64::NEG_INFINITY, f64::max);
        let mean = scores.iter().map(|s| s.fitness).sum::<f64>() / scores.len() as f64;
        trace.push(record.fitness);
        stats.push(GenerationStats {
            best_so_far: record.fitness,
            generation_best,
            mean,
            seconds: start.elapsed().as_secs_f64(),
        });

        if improved {
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience > 0 && stale >= cfg.patience {
                break;
            }
        }
    }

    let (best, solution, breakdown) = best.expect("at least one generation ran");
    Ok(EvolveOutcome {
        best,
        solution,
        breakdown,
        trace,
        generations: stats,
        distinct_evaluations: memo.cache.len(),
        population,
    })
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: BestRecord,
    pub solution: MeasuredSolution,
    pub breakdown: FitnessBreakdown,
    /// Best-so-far fitness after each sample.
    pub trace: Vec<f64>,
}

/// Uniform random bitstrings under the same decoding, as a budget-matched
/// baseline for [`evolve`].
pub fn random_search<F: Fitness + ?Sized>(
    fitness: &F,
    grids: &HyperGrids,
    budget: usize,
    seed_value: u64,
) -> Result<SearchOutcome> {
    grids.validate()?;
    if budget == 0 {
        return Err(QgaError::InvalidConfig("random search budget must be positive".into()));
    }
    let m = fitness.feature_count();
    let n_q = m + grids.n_bits();
    let mut rng = seed::rng(seed::derive(seed_value, "random-search"));
    let sols = (0..budget)
        .map(|_| {
            let bits: Vec<bool> = (0..n_q).map(|_| rng.random::<bool>()).collect();
            decode(&bits, m, grids, None)
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = Memo::new(fitness, true).evaluate_all(&sols)?;

    let mut best_idx = 0;
    let mut trace = Vec::with_capacity(budget);
    for (i, s) in scores.iter().enumerate() {
        if s.fitness > scores[best_idx].fitness {
            best_idx = i;
        }
        trace.push(scores[best_idx].fitness);
    }
    Ok(SearchOutcome {
        best: BestRecord {
            bits: sols[best_idx].bits.clone(),
            fitness: scores[best_idx].fitness,
            generation_found: best_idx,
            evaluations_used: budget,
        },
        solution: sols[best_idx].clone(),
        breakdown: scores[best_idx],
        trace,
    })
}
