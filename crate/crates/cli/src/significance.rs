//! Pairwise strategy comparisons of q* per task.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use vsr_core::stats::{pairwise, StatsError};
use vsr_core::strategies::StrategyId;

use crate::campaign::QStarRow;
use crate::{CliError, Result};

pub const STATS_FILE: &str = "stats.csv";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub task: String,
    pub a: String,
    pub b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub median_a: f64,
    pub median_b: f64,
    pub p_raw: f64,
    pub p_adj: f64,
    pub significant: bool,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

fn strategy_rank(name: &str) -> usize {
    StrategyId::ALL.iter().position(|s| s.name() == name).unwrap_or(usize::MAX)
}

/// One row per unordered strategy pair within each task. Adjustment is
/// done per task, over that task's pairs. Runs without a finite q* are
/// left out.
pub fn significance(rows: &[QStarRow], alpha: f64) -> Result<Vec<PairRow>> {
    let mut by_task: BTreeMap<&str, BTreeMap<(usize, &str), Vec<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.q_star.is_finite()) {
        by_task
            .entry(&r.task)
            .or_default()
            .entry((strategy_rank(&r.strategy), &r.strategy))
            .or_default()
            .push(r.q_star);
    }
    let mut out = Vec::new();
    for (task, groups) in by_task {
        let groups: Vec<(String, Vec<f64>)> = groups.into_iter().map(|((_, s), v)| (s.to_string(), v)).collect();
        if groups.len() < 2 {
            continue;
        }
        let res = pairwise(&groups, alpha).map_err(|e: StatsError| CliError::Config(format!("task {task}: {e}")))?;
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                out.push(PairRow {
                    task: task.to_string(),
                    a: groups[i].0.clone(),
                    b: groups[j].0.clone(),
                    n_a: groups[i].1.len(),
                    n_b: groups[j].1.len(),
                    median_a: median(&groups[i].1),
                    median_b: median(&groups[j].1),
                    p_raw: res.raw[i][j],
                    p_adj: res.adjusted[i][j],
                    significant: res.significant[i][j],
                });
            }
        }
    }
    Ok(out)
}
