//! Learning a fresh brain for the best body of a finished run, on the same
//! task or on another one.

use std::path::Path;
use std::sync::atomic::AtomicU64;

use serde::{Deserialize, Serialize};
use vsr_core::bayesopt::BoConfig;
use vsr_core::controller::uniform_params;
use vsr_core::evolution::{evaluate, EvalContext, EvoConfig};
use vsr_core::seeding::{derive_seed, domain, stream};
use vsr_core::tasks::TaskId;

use crate::{load_record, CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelearnRow {
    pub run: String,
    pub source_task: String,
    pub dest_task: String,
    pub n_final: usize,
    pub original_q: f64,
    pub relearned_q: f64,
}

fn task_index(task: TaskId) -> u64 {
    TaskId::ALL.iter().position(|&t| t == task).expect("listed task") as u64
}

/// Runs BO from one uniform random θ in [-1, 1] until `n_final` episodes
/// on the best body of the run in `dir`. `task` defaults to the run's own.
pub fn relearn(dir: &Path, label: &str, n_final: usize, task: Option<TaskId>) -> Result<RelearnRow> {
    let record = load_record(dir)?;
    let best = record.best().ok_or_else(|| CliError::MissingRun(dir.to_path_buf()))?;
    let source = record.config.task;
    let dest = task.unwrap_or(source);
    let cfg = EvoConfig { task: dest, ..record.config };
    let bo = BoConfig { n_final, ..cfg.bo };
    bo.validate_search().map_err(|e| CliError::Config(e.to_string()))?;

    let env = cfg.env();
    let key = [domain::RELEARN, task_index(dest)];
    let theta0 = uniform_params(env.controller.param_count(), -1.0, 1.0, &mut stream(cfg.seed, &[key[0], key[1], 1]));
    let learner_seed = derive_seed(cfg.seed, &[key[0], key[1], 0]);
    let episodes = AtomicU64::new(0);
    let ctx = EvalContext { env: &env, bo: &bo, no_bo: false, episodes: &episodes };
    let ind = evaluate(&best.body, &[theta0], &ctx, learner_seed, None, None);
    if let Some(msg) = ind.failure {
        return Err(CliError::Learn(msg));
    }
    Ok(RelearnRow {
        run: label.to_string(),
        source_task: source.to_string(),
        dest_task: dest.to_string(),
        n_final,
        original_q: best.quality,
        relearned_q: ind.quality,
    })
}
