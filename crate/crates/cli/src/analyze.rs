//! Body descriptors of each run's best robot and per-generation diversity.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vsr_core::morphology::descriptors;

use crate::{find_runs, load_record, run_label, CliError, Result};

pub const DESCRIPTORS_FILE: &str = "descriptors.csv";
pub const DIVERSITY_FILE: &str = "diversity.csv";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRow {
    pub run: String,
    pub task: String,
    pub strategy: String,
    pub seed: u64,
    pub q_star: f64,
    pub active_rate: f64,
    pub compactness: f64,
    pub body: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiversityRow {
    pub run: String,
    pub task: String,
    pub strategy: String,
    pub gen: usize,
    pub diversity: f64,
}

#[derive(Debug, Default)]
pub struct Analysis {
    pub descriptors: Vec<DescriptorRow>,
    pub diversity: Vec<DiversityRow>,
}

/// Collects both tables over every run below `root`.
pub fn analyze(root: &Path) -> Result<Analysis> {
    let runs = find_runs(root)?;
    if runs.is_empty() {
        return Err(CliError::MissingRun(root.to_path_buf()));
    }
    let mut out = Analysis::default();
    for dir in runs {
        let record = load_record(&dir)?;
        let label = run_label(root, &dir);
        let (task, strategy) = (record.config.task.to_string(), record.config.strategy.to_string());
        let best = record.best().ok_or_else(|| CliError::MissingRun(dir.clone()))?;
        let d = descriptors(&best.body);
        out.descriptors.push(DescriptorRow {
            run: label.clone(),
            task: task.clone(),
            strategy: strategy.clone(),
            seed: record.config.seed,
            q_star: best.quality,
            active_rate: d.active_rate,
            compactness: d.compactness,
            body: best.body.to_string(),
        });
        for s in &record.summaries {
            out.diversity.push(DiversityRow {
                run: label.clone(),
                task: task.clone(),
                strategy: strategy.clone(),
                gen: s.gen,
                diversity: s.diversity,
            });
        }
    }
    Ok(out)
}
