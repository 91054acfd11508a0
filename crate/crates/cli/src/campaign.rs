//! Evolution campaigns: every (task, strategy, repetition) combination
//! of a config, each in its own run directory.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vsr_core::evolution::{evolve_in, parse_kv, EvoConfig, RunDir, RunRecord};
use vsr_core::strategies::StrategyId;
use vsr_core::tasks::TaskId;

use crate::table::write_csv;
use crate::{CliError, Result};

/// Name of the campaign-level q* table inside the output root.
pub const QSTAR_FILE: &str = "qstar.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub strategies: Vec<StrategyId>,
    pub tasks: Vec<TaskId>,
    pub repetitions: usize,
    /// Repetition `i` runs with seed `seed_base + i`.
    pub seed_base: u64,
    /// Settings shared by every run; `strategy`, `task` and `seed` are
    /// replaced per run.
    pub evo: EvoConfig,
    pub output_root: Option<PathBuf>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            strategies: vec![StrategyId::BestMany],
            tasks: vec![TaskId::Simple],
            repetitions: 1,
            seed_base: 0,
            evo: EvoConfig::default(),
            output_root: None,
        }
    }
}

fn list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e: T::Err| CliError::Config(e.to_string())))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("empty list {value:?}")));
    }
    Ok(items)
}

impl CampaignConfig {
    /// Applies one setting; keys that are not campaign keys go to the run
    /// configuration.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || CliError::Config(format!("bad value {value:?} for {key}"));
        match key {
            "strategies" => self.strategies = list(value)?,
            "tasks" => self.tasks = list(value)?,
            "repetitions" => self.repetitions = value.parse().map_err(|_| bad())?,
            "seed_base" => self.seed_base = value.parse().map_err(|_| bad())?,
            "output_root" => self.output_root = Some(PathBuf::from(value)),
            _ => {
                if !self.evo.set(key, value)? {
                    return Err(CliError::Config(format!("unknown key {key:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_kv(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// All runs in table order: task, then strategy, then repetition.
    pub fn runs(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for &task in &self.tasks {
            for &strategy in &self.strategies {
                for repetition in 0..self.repetitions {
                    out.push(RunSpec { task, strategy, repetition, seed: self.seed_base + repetition as u64 });
                }
            }
        }
        out
    }

    pub fn run_config(&self, spec: &RunSpec) -> EvoConfig {
        EvoConfig { strategy: spec.strategy, task: spec.task, seed: spec.seed, ..self.evo }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    pub task: TaskId,
    pub strategy: StrategyId,
    pub repetition: usize,
    pub seed: u64,
}

impl RunSpec {
    pub fn dir(&self, root: &Path) -> PathBuf {
        root.join(self.task.name()).join(self.strategy.name()).join(format!("rep_{}", self.repetition))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QStarRow {
    pub task: String,
    pub strategy: String,
    pub repetition: usize,
    pub seed: u64,
    pub q_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ran,
    Skipped,
}

#[derive(Debug)]
pub struct CampaignReport {
    pub rows: Vec<QStarRow>,
    pub statuses: Vec<(RunSpec, RunStatus)>,
    pub failures: Vec<(RunSpec, String)>,
}

/// A run is complete when it holds every generation of `cfg`.
fn completed(dir: &Path, cfg: &EvoConfig) -> Option<RunRecord> {
    let stored = EvoConfig::from_kv(&fs::read_to_string(dir.join(RunDir::CONFIG)).ok()?).ok()?;
    let record = crate::load_record(dir).ok()?;
    (stored == *cfg && record.completed_generations() == cfg.n_gen).then_some(record)
}

fn run_one(cfg: &CampaignConfig, spec: &RunSpec, root: &Path, force: bool) -> Result<(RunRecord, RunStatus)> {
    let dir = spec.dir(root);
    let evo = cfg.run_config(spec);
    if force && dir.exists() {
        fs::remove_dir_all(&dir)?;
    } else if let Some(record) = completed(&dir, &evo) {
        return Ok((record, RunStatus::Skipped));
    }
    Ok((evolve_in(&evo, &dir)?, RunStatus::Ran))
}

/// Runs (or resumes, or skips) every run of the campaign on `pool` and
/// writes the q* table. A failed run is reported and left out of the table;
/// the others still complete.
pub fn run_campaign(cfg: &CampaignConfig, root: &Path, pool: &rayon::ThreadPool, force: bool) -> Result<CampaignReport> {
    if cfg.repetitions == 0 {
        return Err(CliError::Config("repetitions must be at least 1".into()));
    }
    let specs = cfg.runs();
    for spec in &specs {
        cfg.run_config(spec).validate()?;
    }
    let results: Vec<Result<(RunRecord, RunStatus)>> =
        pool.install(|| specs.par_iter().map(|s| run_one(cfg, s, root, force)).collect());

    let mut report = CampaignReport { rows: Vec::new(), statuses: Vec::new(), failures: Vec::new() };
    for (spec, result) in specs.into_iter().zip(results) {
        match result {
            Ok((record, status)) => {
                report.rows.push(QStarRow {
                    task: spec.task.to_string(),
                    strategy: spec.strategy.to_string(),
                    repetition: spec.repetition,
                    seed: spec.seed,
                    q_star: record.q_star(),
                });
                report.statuses.push((spec, status));
            }
            Err(e) => report.failures.push((spec, e.to_string())),
        }
    }
    write_csv(&root.join(QSTAR_FILE), &report.rows)?;
    Ok(report)
}
