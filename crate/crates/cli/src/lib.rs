//! Experiment orchestration on top of `vsr-core`: evolution campaigns,
//! re-learning and transfer, fixed-body learning curves, descriptor and
//! diversity tables, and significance matrices.
//!
//! Every table is CSV. Runs live under `<root>/<task>/<strategy>/rep_<i>`.

pub mod analyze;
pub mod campaign;
pub mod curve;
pub mod relearn;
pub mod significance;
pub mod table;

use std::path::PathBuf;

use thiserror::Error;
use vsr_core::evolution::EvolutionError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no completed run found at {0}")]
    MissingRun(PathBuf),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Parse(#[from] vsr_core::morphology::MorphologyError),
    #[error("learning failed: {0}")]
    Learn(String),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

use std::fs;
use std::path::Path;

use vsr_core::evolution::{RunDir, RunRecord};

/// Reads the progress record of a run without loading its population.
pub fn load_record(dir: &Path) -> Result<RunRecord> {
    let path = dir.join(RunDir::PROGRESS);
    let bytes = fs::read(&path).map_err(|_| CliError::MissingRun(dir.to_path_buf()))?;
    let record: RunRecord = serde_json::from_slice(&bytes)?;
    if record.best().is_none() {
        return Err(CliError::MissingRun(dir.to_path_buf()));
    }
    Ok(record)
}

/// Run directories at or below `root`, in path order.
pub fn find_runs(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(CliError::MissingRun(root.to_path_buf()));
    }
    let mut runs = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Io(e.into()))?;
        if entry.file_type().is_dir() && entry.path().join(RunDir::PROGRESS).is_file() {
            runs.push(entry.into_path());
        }
    }
    Ok(runs)
}

/// `dir` relative to `root` with `/` separators, or `.` for the root itself.
pub fn run_label(root: &Path, dir: &Path) -> String {
    let rel = dir.strip_prefix(root).unwrap_or(dir);
    let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    if parts.is_empty() {
        ".".to_string()
    } else {
        parts.join("/")
    }
}

/// Builds a worker pool; `None` or 0 uses all cores.
pub fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}
