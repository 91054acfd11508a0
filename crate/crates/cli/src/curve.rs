//! Best-so-far learning curves of different learners on one fixed body.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::AtomicU64;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vsr_core::bayesopt::{BoConfig, SampleArchive};
use vsr_core::controller::{uniform_params, BrainParams};
use vsr_core::evolution::{evaluate, EvalContext, EvoConfig};
use vsr_core::morphology::BodyGrid;
use vsr_core::seeding::{derive_seed, domain, stream};

use crate::{CliError, Result};

/// How many of the IL samples the SL learner may draw its start from.
pub const SL_POOL: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveMode {
    /// Uniform random search.
    NoBo,
    /// BO from a single random θ.
    Il,
    /// BO warm-started with the best samples of the IL learner's first
    /// `SL_POOL` evaluations.
    Sl,
}

impl CurveMode {
    pub const ALL: [CurveMode; 3] = [CurveMode::NoBo, CurveMode::Il, CurveMode::Sl];

    pub fn name(self) -> &'static str {
        match self {
            CurveMode::NoBo => "nobo",
            CurveMode::Il => "il",
            CurveMode::Sl => "sl",
        }
    }

    fn tag(self) -> u64 {
        match self {
            CurveMode::NoBo => 0,
            CurveMode::Il => 1,
            CurveMode::Sl => 2,
        }
    }
}

impl fmt::Display for CurveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown curve mode {s:?} (nobo, il, sl)")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub mode: String,
    pub seed: u64,
    /// 1-based count of evaluated episodes.
    pub iteration: usize,
    pub best_so_far: f64,
}

/// Parses and validates a body in text form.
pub fn parse_body(text: &str) -> Result<BodyGrid> {
    let body: BodyGrid = text.parse()?;
    if !body.is_valid_polyomino() {
        return Err(CliError::Config(format!("body {text:?} is not a connected polyomino of 5 to 25 voxels")));
    }
    Ok(body)
}

fn learn(body: &BodyGrid, cfg: &EvoConfig, bo: &BoConfig, mode: CurveMode, seed: u64, init: &[BrainParams]) -> Result<SampleArchive> {
    let env = cfg.env();
    let episodes = AtomicU64::new(0);
    let ctx = EvalContext { env: &env, bo, no_bo: mode == CurveMode::NoBo, episodes: &episodes };
    let learner_seed = derive_seed(seed, &[domain::CURVE, mode.tag()]);
    let ind = evaluate(body, init, &ctx, learner_seed, None, None);
    match ind.failure {
        Some(msg) => Err(CliError::Learn(msg)),
        None => Ok(ind.learned),
    }
}

/// The archives of every requested mode for one seed, in `modes` order.
pub fn learn_all(body: &BodyGrid, cfg: &EvoConfig, budget: usize, seed: u64, modes: &[CurveMode]) -> Result<Vec<(CurveMode, SampleArchive)>> {
    let bo = BoConfig { n_final: budget, ..cfg.bo };
    bo.validate_search().map_err(|e| CliError::Config(e.to_string()))?;
    let dim = cfg.env().controller.param_count();
    let theta0 = uniform_params(dim, -1.0, 1.0, &mut stream(seed, &[domain::CURVE, 3]));

    let il = if modes.iter().any(|m| matches!(m, CurveMode::Il | CurveMode::Sl)) {
        Some(learn(body, cfg, &bo, CurveMode::Il, seed, &[theta0.clone()])?)
    } else {
        None
    };
    let mut out = Vec::new();
    for &mode in modes {
        let archive = match mode {
            CurveMode::NoBo => learn(body, cfg, &bo, mode, seed, &[])?,
            CurveMode::Il => il.clone().expect("IL archive"),
            CurveMode::Sl => {
                let pool: SampleArchive = il.as_ref().expect("IL archive").iter().take(SL_POOL).cloned().collect();
                let init: Vec<BrainParams> = pool.best_n(bo.n0.min(budget)).into_iter().map(|s| s.x.clone()).collect();
                learn(body, cfg, &bo, mode, seed, &init)?
            }
        };
        out.push((mode, archive));
    }
    Ok(out)
}

/// Curve rows for every seed and mode: mode-major, then seed, then iteration.
pub fn learning_curves(
    body: &BodyGrid,
    cfg: &EvoConfig,
    budget: usize,
    seeds: &[u64],
    modes: &[CurveMode],
    pool: &rayon::ThreadPool,
) -> Result<Vec<CurveRow>> {
    let per_seed: Vec<Result<Vec<(CurveMode, SampleArchive)>>> =
        pool.install(|| seeds.par_iter().map(|&s| learn_all(body, cfg, budget, s, modes)).collect());
    let per_seed: Vec<_> = per_seed.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (m, &mode) in modes.iter().enumerate() {
        for (&seed, archives) in seeds.iter().zip(&per_seed) {
            debug_assert_eq!(archives[m].0, mode);
            for (i, best) in archives[m].1.best_so_far().into_iter().enumerate() {
                rows.push(CurveRow { mode: mode.to_string(), seed, iteration: i + 1, best_so_far: best });
            }
        }
    }
    Ok(rows)
}
