//! The outer genetic algorithm over bodies.
//!
//! Each generation is bred by tournament selection and body mutation, then
//! every offspring learns its brain with BO warm-started by the configured
//! strategy. Parents never survive; the best individual ever seen is kept
//! on the side.
//!
//! With a run directory, every completed generation is checkpointed and an
//! interrupted run resumes from the last checkpoint with identical results.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayesopt::{bo_learn, random_learn, BoConfig, LearnError, Sample, SampleArchive};
use crate::controller::{gaussian_perturb, uniform_params, BrainParams};
use crate::morphology::{mutate_body, population_diversity, random_body, BodyGrid, MorphologyError};
use crate::seeding::{derive_seed, domain, stream};
use crate::strategies::{self, bootstrap_candidates, Learner, SelectionConfig, StrategyError, StrategyId};
use crate::tasks::{TaskEnv, TaskError, TaskId, TaskParams};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Morphology(#[from] MorphologyError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("run directory {0} holds a different configuration")]
    ConfigMismatch(PathBuf),
    #[error("corrupt run directory: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvoConfig {
    pub n_pop: usize,
    pub n_gen: usize,
    pub n_tour: usize,
    pub sigma_mut: f64,
    pub strategy: StrategyId,
    pub task: TaskId,
    pub bo: BoConfig,
    pub seed: u64,
    /// Task geometry and episode length.
    pub task_params: TaskParams,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            n_pop: 200,
            n_gen: 50,
            n_tour: 4,
            sigma_mut: 0.1,
            strategy: StrategyId::BestMany,
            task: TaskId::Simple,
            bo: BoConfig::default(),
            seed: 0,
            task_params: TaskParams::default(),
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: String| Err(EvolutionError::InvalidConfig(m));
        if self.n_pop < 1 || self.n_gen < 1 || self.n_tour < 1 || self.task_params.episode_steps < 1 {
            return bad("n_pop, n_gen, n_tour and episode_steps must be at least 1".into());
        }
        if self.n_tour > self.n_pop {
            return bad(format!("n_tour {} exceeds n_pop {}", self.n_tour, self.n_pop));
        }
        if !(self.sigma_mut >= 0.0) {
            return bad("sigma_mut must be non-negative".into());
        }
        self.bo.validate().or_else(|e| bad(e.to_string()))
    }

    pub fn env(&self) -> TaskEnv {
        let mut env = TaskEnv::new(self.task);
        env.params = self.task_params;
        env
    }

    /// Flat `key = value` form, one key per line in a fixed order.
    pub fn to_kv(&self) -> String {
        let b = &self.bo;
        let t = &self.task_params;
        let mut s = String::new();
        for (k, v) in [
            ("strategy", self.strategy.to_string()),
            ("task", self.task.to_string()),
            ("seed", self.seed.to_string()),
            ("n_pop", self.n_pop.to_string()),
            ("n_gen", self.n_gen.to_string()),
            ("n_tour", self.n_tour.to_string()),
            ("sigma_mut", self.sigma_mut.to_string()),
            ("episode_steps", t.episode_steps.to_string()),
            ("step_rise", t.step_rise.to_string()),
            ("step_run", t.step_run.to_string()),
            ("box_w", t.box_w.to_string()),
            ("box_h", t.box_h.to_string()),
            ("drop_height", t.drop_height.to_string()),
            ("gap_max", t.gap_max.to_string()),
            ("n0", b.n0.to_string()),
            ("n_final", b.n_final.to_string()),
            ("beta", b.beta.to_string()),
            ("bound_lo", b.bounds.0.to_string()),
            ("bound_hi", b.bounds.1.to_string()),
            ("restarts", b.restarts.to_string()),
            ("max_iter", b.max_iter.to_string()),
            ("length_scale", b.length_scale.to_string()),
            ("signal_variance", b.signal_variance.to_string()),
            ("jitter", b.jitter.to_string()),
            ("max_jitter", b.max_jitter.to_string()),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Applies one `key = value` setting. Returns `Ok(false)` for keys that
    /// are not run settings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, EvolutionError> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, EvolutionError> {
            v.parse().map_err(|_| EvolutionError::InvalidConfig(format!("bad value {v:?} for {key}")))
        }
        let b = &mut self.bo;
        let t = &mut self.task_params;
        match key {
            "strategy" => self.strategy = value.parse()?,
            "task" => self.task = value.parse().map_err(|e: TaskError| EvolutionError::InvalidConfig(e.to_string()))?,
            "seed" => self.seed = num(key, value)?,
            "n_pop" => self.n_pop = num(key, value)?,
            "n_gen" => self.n_gen = num(key, value)?,
            "n_tour" => self.n_tour = num(key, value)?,
            "sigma_mut" => self.sigma_mut = num(key, value)?,
            "episode_steps" => t.episode_steps = num(key, value)?,
            "step_rise" => t.step_rise = num(key, value)?,
            "step_run" => t.step_run = num(key, value)?,
            "box_w" => t.box_w = num(key, value)?,
            "box_h" => t.box_h = num(key, value)?,
            "drop_height" => t.drop_height = num(key, value)?,
            "gap_max" => t.gap_max = num(key, value)?,
            "n0" => b.n0 = num(key, value)?,
            "n_final" => b.n_final = num(key, value)?,
            "beta" => b.beta = num(key, value)?,
            "bound_lo" => b.bounds.0 = num(key, value)?,
            "bound_hi" => b.bounds.1 = num(key, value)?,
            "restarts" => b.restarts = num(key, value)?,
            "max_iter" => b.max_iter = num(key, value)?,
            "length_scale" => b.length_scale = num(key, value)?,
            "signal_variance" => b.signal_variance = num(key, value)?,
            "jitter" => b.jitter = num(key, value)?,
            "max_jitter" => b.max_jitter = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn from_kv(text: &str) -> Result<Self, EvolutionError> {
        let mut cfg = Self::default();
        for (key, value) in parse_kv(text)? {
            if !cfg.set(&key, &value)? {
                return Err(EvolutionError::InvalidConfig(format!("unknown key {key:?}")));
            }
        }
        Ok(cfg)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, EvolutionError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| EvolutionError::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// A body with its learned brain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub body: BodyGrid,
    /// Inherited θ; only present in IL runs.
    pub genotype_theta: Option<BrainParams>,
    #[serde(rename = "archive")]
    pub learned: SampleArchive,
    /// Best observed value in `learned`; `-inf` for failed individuals.
    #[serde(with = "finite_or_null")]
    pub quality: f64,
    pub parent: Option<usize>,
    /// Key of the learner's random streams and episode seeds.
    pub learner_seed: u64,
    pub failure: Option<String>,
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_finite() {
            s.serialize_some(q)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

mod finite_or_nan {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::finite_or_null::serialize(v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Episode seed of the `i`-th evaluation made by a learner.
pub fn episode_seed(learner_seed: u64, i: usize) -> u64 {
    derive_seed(learner_seed, &[domain::EPISODE, i as u64])
}

impl Individual {
    pub fn from_archive(
        body: BodyGrid,
        genotype_theta: Option<BrainParams>,
        learned: SampleArchive,
        parent: Option<usize>,
        learner_seed: u64,
    ) -> Self {
        let quality = learned.best().map_or(f64::NEG_INFINITY, |s| s.y);
        Self { body, genotype_theta, learned, quality, parent, learner_seed, failure: None }
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn best(&self) -> Option<&Sample> {
        self.learned.best()
    }

    /// Seed of the episode that produced the best sample.
    pub fn best_episode_seed(&self) -> Option<u64> {
        self.learned.best_index().map(|i| episode_seed(self.learner_seed, i))
    }
}

/// Index of the best of `n_tour` distinct uniformly drawn individuals;
/// the lowest index wins ties.
pub fn tournament_select<R: Rng + ?Sized>(quality: &[f64], n_tour: usize, rng: &mut R) -> usize {
    assert!(n_tour >= 1 && n_tour <= quality.len(), "need 1 <= n_tour <= population size");
    index::sample(rng, quality.len(), n_tour)
        .into_iter()
        .reduce(|a, b| match quality[b].total_cmp(&quality[a]) {
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Equal if b < a => b,
            _ => a,
        })
        .expect("n_tour >= 1")
}

/// Shared settings for evaluating individuals.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub env: &'a TaskEnv,
    pub bo: &'a BoConfig,
    /// Random search instead of BO; candidates are ignored.
    pub no_bo: bool,
    /// Incremented once per simulated episode.
    pub episodes: &'a AtomicU64,
}

/// Learns a brain for `body` and wraps the result. Learning failures are
/// recorded on the individual, which then has quality `-inf`.
pub fn evaluate(
    body: &BodyGrid,
    candidates: &[BrainParams],
    ctx: &EvalContext<'_>,
    learner_seed: u64,
    parent: Option<usize>,
    genotype_theta: Option<BrainParams>,
) -> Individual {
    let mut count = 0usize;
    let objective = |theta: &BrainParams| {
        let seed = episode_seed(learner_seed, count);
        count += 1;
        ctx.episodes.fetch_add(1, Ordering::Relaxed);
        ctx.env.run_episode(body, theta, seed).map(|r| r.quality)
    };
    let mut rng = stream(learner_seed, &[domain::LEARNER]);
    let result = if ctx.no_bo {
        random_learn(objective, ctx.env.controller.param_count(), ctx.bo, &mut rng)
    } else {
        bo_learn(objective, candidates, ctx.bo, &mut rng)
    };
    match result {
        Ok(archive) => Individual::from_archive(*body, genotype_theta, archive, parent, learner_seed),
        Err(LearnError { archive, failure }) => {
            let mut ind = Individual::from_archive(*body, genotype_theta, archive, parent, learner_seed);
            ind.quality = f64::NEG_INFINITY;
            ind.failure = Some(failure.to_string());
            ind
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub gen: usize,
    #[serde(with = "finite_or_null")]
    pub best_q: f64,
    /// Mean over individuals that did not fail.
    #[serde(with = "finite_or_nan")]
    pub mean_q: f64,
    #[serde(with = "finite_or_nan")]
    pub diversity: f64,
}

/// The best individual seen so far, with what is needed to re-simulate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub generation: usize,
    pub index: usize,
    pub body: BodyGrid,
    pub theta: BrainParams,
    pub quality: f64,
    pub episode_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: EvoConfig,
    pub summaries: Vec<GenerationSummary>,
    /// Best-ever record after each generation.
    pub best_history: Vec<BestRecord>,
    /// Episodes simulated so far.
    pub episodes: u64,
    /// The most recent generation; earlier ones live in the checkpoints.
    #[serde(skip)]
    pub population: Vec<Individual>,
}

impl RunRecord {
    pub fn best(&self) -> Option<&BestRecord> {
        self.best_history.last()
    }

    /// `q*`: the best quality over the whole run.
    pub fn q_star(&self) -> f64 {
        self.best().map_or(f64::NEG_INFINITY, |b| b.quality)
    }

    pub fn completed_generations(&self) -> usize {
        self.summaries.len()
    }
}

/// Runs the whole evolution in memory.
pub fn evolve(cfg: &EvoConfig) -> Result<RunRecord, EvolutionError> {
    evolve_with(cfg, None, &mut |_, _| {})
}

/// Runs, or resumes, an evolution that checkpoints into `dir`.
pub fn evolve_in(cfg: &EvoConfig, dir: &Path) -> Result<RunRecord, EvolutionError> {
    evolve_with(cfg, Some(dir), &mut |_, _| {})
}

/// Full form: optional run directory plus a callback invoked with every
/// newly completed generation.
pub fn evolve_with(
    cfg: &EvoConfig,
    dir: Option<&Path>,
    on_generation: &mut dyn FnMut(usize, &[Individual]),
) -> Result<RunRecord, EvolutionError> {
    cfg.validate()?;
    let env = cfg.env();
    let mut record = match dir {
        Some(d) => RunDir::open(d, cfg)?,
        None => None,
    }
    .unwrap_or_else(|| RunRecord {
        config: *cfg,
        summaries: Vec::new(),
        best_history: Vec::new(),
        episodes: 0,
        population: Vec::new(),
    });

    for gen in record.completed_generations()..cfg.n_gen {
        let episodes = AtomicU64::new(0);
        let ctx = EvalContext { env: &env, bo: &cfg.bo, no_bo: cfg.strategy == StrategyId::NoBo, episodes: &episodes };
        let prev = std::mem::take(&mut record.population);
        let population = breed(cfg, gen, &prev, &ctx)?;
        record.episodes += episodes.load(Ordering::Relaxed);
        record.summaries.push(summarize(gen, &population));

        let mut best = record.best().cloned();
        for (index, ind) in population.iter().enumerate() {
            if ind.quality > best.as_ref().map_or(f64::NEG_INFINITY, |b| b.quality) {
                let sample = ind.best().expect("finite quality implies a sample");
                best = Some(BestRecord {
                    generation: gen,
                    index,
                    body: ind.body,
                    theta: sample.x.clone(),
                    quality: ind.quality,
                    episode_seed: ind.best_episode_seed().expect("non-empty archive"),
                });
            }
        }
        if let Some(b) = best {
            record.best_history.push(b);
        }
        record.population = population;
        if let Some(d) = dir {
            RunDir::commit(d, &record, gen)?;
        }
        on_generation(gen, &record.population);
    }
    Ok(record)
}

fn breed(cfg: &EvoConfig, gen: usize, prev: &[Individual], ctx: &EvalContext<'_>) -> Result<Vec<Individual>, EvolutionError> {
    let dim = ctx.env.controller.param_count();
    let g = gen as u64;
    let qualities: Vec<f64> = prev.iter().map(|p| p.quality).collect();
    let selection = SelectionConfig { n0: cfg.bo.n0, dim, bounds: cfg.bo.bounds };
    let il = cfg.strategy == StrategyId::Il;

    (0..cfg.n_pop)
        .into_par_iter()
        .map(|i| {
            let idx = i as u64;
            let (body, genotype, parent) = if gen == 0 {
                let body = random_body(&mut stream(cfg.seed, &[domain::BODY_INIT, idx]));
                let genotype = il.then(|| uniform_params(dim, -1.0, 1.0, &mut stream(cfg.seed, &[domain::THETA_INIT, idx])));
                (body, genotype, None)
            } else {
                let mut rng = stream(cfg.seed, &[domain::OFFSPRING, g, idx]);
                let p = tournament_select(&qualities, cfg.n_tour, &mut rng);
                let body = mutate_body(&prev[p].body, &mut rng)?;
                let genotype = match (il, &prev[p].genotype_theta) {
                    (true, Some(theta)) => Some(gaussian_perturb(theta, cfg.sigma_mut, &mut rng)),
                    (true, None) => return Err(EvolutionError::Corrupt(format!("IL parent {p} has no genotype"))),
                    (false, _) => None,
                };
                (body, genotype, Some(p))
            };

            let mut rng = stream(cfg.seed, &[domain::STRATEGY, g, idx]);
            let candidates: Vec<BrainParams> = if ctx.no_bo {
                Vec::new()
            } else {
                let learner = Learner { body: &body, parent, genotype: genotype.as_ref() };
                match strategies::select_init_candidates(cfg.strategy, learner, prev, &selection, &mut rng) {
                    Ok(c) => c,
                    // a dead parent or teacher pool falls back to random candidates
                    Err(StrategyError::InsufficientTeachers { .. } | StrategyError::MissingParent) => {
                        bootstrap_candidates(cfg.bo.n0, dim, &mut rng)
                    }
                    Err(e) => return Err(e.into()),
                }
                .into_iter()
                .map(|c| c.theta)
                .collect()
            };
            let learner_seed = derive_seed(cfg.seed, &[domain::LEARNER, g, idx]);
            Ok(evaluate(&body, &candidates, ctx, learner_seed, parent, genotype))
        })
        .collect()
}

fn summarize(gen: usize, population: &[Individual]) -> GenerationSummary {
    let best_q = population.iter().map(|p| p.quality).fold(f64::NEG_INFINITY, f64::max);
    let alive: Vec<f64> = population.iter().filter(|p| !p.failed()).map(|p| p.quality).collect();
    let mean_q = if alive.is_empty() { f64::NAN } else { alive.iter().sum::<f64>() / alive.len() as f64 };
    let bodies: Vec<BodyGrid> = population.iter().map(|p| p.body).collect();
    let diversity = population_diversity(&bodies).unwrap_or(f64::NAN);
    GenerationSummary { gen, best_q, mean_q, diversity }
}

/// File layout of a run directory.
pub struct RunDir;

impl RunDir {
    pub const CONFIG: &'static str = "config.copy";
    pub const PROGRESS: &'static str = "progress.json";
    pub const SUMMARY: &'static str = "summary.csv";
    pub const DIVERSITY: &'static str = "diversity.csv";
    pub const BEST: &'static str = "best.jsonl";
    pub const BEST_THETA: &'static str = "best_theta.bin";

    pub fn checkpoint(dir: &Path, gen: usize) -> PathBuf {
        dir.join("checkpoints").join(format!("gen_{gen}.jsonl"))
    }

    /// Loads a resumable state, or prepares a fresh directory.
    fn open(dir: &Path, cfg: &EvoConfig) -> Result<Option<RunRecord>, EvolutionError> {
        fs::create_dir_all(dir.join("checkpoints"))?;
        let config_path = dir.join(Self::CONFIG);
        if config_path.exists() {
            // a run may be extended with more generations, nothing else
            let stored = EvoConfig::from_kv(&fs::read_to_string(&config_path)?)?;
            if (EvoConfig { n_gen: cfg.n_gen, ..stored }) != *cfg {
                return Err(EvolutionError::ConfigMismatch(dir.to_path_buf()));
            }
        }
        write_atomic(&config_path, cfg.to_kv().as_bytes())?;
        if !dir.join(Self::PROGRESS).exists() {
            return Ok(None);
        }
        let mut record = Self::load(dir)?;
        if record.completed_generations() > cfg.n_gen {
            return Err(EvolutionError::ConfigMismatch(dir.to_path_buf()));
        }
        record.config = *cfg;
        Ok(Some(record))
    }

    pub fn load_generation(dir: &Path, gen: usize) -> Result<Vec<Individual>, EvolutionError> {
        let path = Self::checkpoint(dir, gen);
        let file = fs::File::open(&path).map_err(|e| EvolutionError::Corrupt(format!("{}: {e}", path.display())))?;
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if !line.trim().is_empty() {
                out.push(serde_json::from_str(&line)?);
            }
        }
        Ok(out)
    }

    /// Loads the run state recorded in `dir`, including the last generation.
    pub fn load(dir: &Path) -> Result<RunRecord, EvolutionError> {
        let progress = dir.join(Self::PROGRESS);
        let bytes = fs::read(&progress).map_err(|e| EvolutionError::Corrupt(format!("{}: {e}", progress.display())))?;
        let mut record: RunRecord = serde_json::from_slice(&bytes)?;
        if let Some(last) = record.completed_generations().checked_sub(1) {
            record.population = Self::load_generation(dir, last)?;
        }
        Ok(record)
    }

    // The progress file is written last and marks the generation complete.
    fn commit(dir: &Path, record: &RunRecord, gen: usize) -> Result<(), EvolutionError> {
        let mut buf = Vec::new();
        for ind in &record.population {
            serde_json::to_writer(&mut buf, ind)?;
            buf.push(b'\n');
        }
        write_atomic(&Self::checkpoint(dir, gen), &buf)?;

        let mut summary = String::from("gen,best_q,mean_q,diversity\n");
        let mut diversity = String::from("gen,diversity\n");
        for s in &record.summaries {
            let _ = writeln!(summary, "{},{},{},{}", s.gen, s.best_q, s.mean_q, s.diversity);
            let _ = writeln!(diversity, "{},{}", s.gen, s.diversity);
        }
        write_atomic(&dir.join(Self::SUMMARY), summary.as_bytes())?;
        write_atomic(&dir.join(Self::DIVERSITY), diversity.as_bytes())?;

        let mut best = Vec::new();
        for b in &record.best_history {
            serde_json::to_writer(&mut best, b)?;
            best.push(b'\n');
        }
        write_atomic(&dir.join(Self::BEST), &best)?;
        if let Some(b) = record.best() {
            let mut bin = Vec::new();
            b.theta.write_le(&mut bin)?;
            write_atomic(&dir.join(Self::BEST_THETA), &bin)?;
        }
        write_atomic(&dir.join(Self::PROGRESS), &serde_json::to_vec(record)?)?;
        Ok(())
    }
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(bytes)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(tmp, path)
}
