use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use vsr_core::tasks::TaskId;
use vsr_experiments::analyze::{analyze, DESCRIPTORS_FILE, DIVERSITY_FILE};
use vsr_experiments::campaign::{run_campaign, CampaignConfig, QStarRow, RunStatus, QSTAR_FILE};
use vsr_experiments::curve::{learning_curves, parse_body, CurveMode};
use vsr_experiments::relearn::{relearn, RelearnRow};
use vsr_experiments::significance::{significance, STATS_FILE};
use vsr_experiments::table::{read_csv, write_csv};
use vsr_experiments::{find_runs, pool, run_label, CliError, Result};

/// Evolution of voxel-based soft robots with learned brains.
#[derive(Parser)]
#[command(name = "vsr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Extra `key=value` setting; wins over the config file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output root. Falls back to the config's `output_root`, then `runs`.
    #[arg(long, env = "VSR_OUTPUT_ROOT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, short)]
    jobs: Option<usize>,
    /// Recompute outputs that already exist.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn load(&self) -> Result<(CampaignConfig, PathBuf)> {
        let mut cfg = CampaignConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_kv(&fs::read_to_string(path)?)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        let root = self
            .out
            .clone()
            .or_else(|| cfg.output_root.clone())
            .unwrap_or_else(|| PathBuf::from("runs"));
        Ok((cfg, root))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every (task, strategy, repetition) of a campaign.
    Evolve(Common),
    /// Learn a new brain for the best body of finished runs.
    Relearn(RelearnArgs),
    /// Relearn on another task.
    Transfer(TransferArgs),
    /// Learning curves of nobo, il and sl on a fixed body.
    Curve(CurveArgs),
    /// Best-body descriptors and diversity curves of all runs.
    Analyze(Common),
    /// Pairwise significance of q* between strategies, per task.
    Stats(StatsArgs),
}

#[derive(Args)]
struct RelearnArgs {
    #[command(flatten)]
    common: Common,
    /// Run directories or campaign roots (default: the output root).
    runs: Vec<PathBuf>,
    /// Episodes of the new learner.
    #[arg(long, default_value_t = 500)]
    n_final: usize,
    /// Task to relearn on (default: each run's own task).
    #[arg(long)]
    task: Option<TaskId>,
    /// Output CSV (default: `<out>/relearn.csv`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TransferArgs {
    #[command(flatten)]
    common: Common,
    runs: Vec<PathBuf>,
    #[arg(long, default_value_t = 500)]
    n_final: usize,
    #[arg(long)]
    task: TaskId,
    /// Output CSV (default: `<out>/transfer_<task>.csv`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    common: Common,
    /// Body in text form, e.g. `..R..-..S..-HHHHH-..V..-.....`.
    #[arg(long)]
    body: String,
    #[arg(long, default_value_t = 100)]
    budget: usize,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = ["nobo".to_string(), "il".into(), "sl".into()])]
    modes: Vec<String>,
    /// Output CSV (default: `<out>/curve.csv`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    /// q* tables (default: `<out>/qstar.csv`).
    tables: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Output CSV (default: `<out>/stats.csv`).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn exists_skip(path: &Path, force: bool) -> bool {
    let skip = !force && path.exists();
    if skip {
        eprintln!("{} exists, skipping (use --force to recompute)", path.display());
    }
    skip
}

fn cmd_evolve(common: &Common) -> Result<bool> {
    let (cfg, root) = common.load()?;
    let report = run_campaign(&cfg, &root, &pool(common.jobs)?, common.force)?;
    for (spec, status) in &report.statuses {
        let verb = if *status == RunStatus::Skipped { "complete" } else { "done" };
        eprintln!("{verb}: {}", spec.dir(&root).display());
    }
    for (spec, msg) in &report.failures {
        eprintln!("FAILED: {}: {msg}", spec.dir(&root).display());
    }
    eprintln!("wrote {}", root.join(QSTAR_FILE).display());
    Ok(report.failures.is_empty())
}

fn cmd_relearn(common: &Common, inputs: &[PathBuf], n_final: usize, task: Option<TaskId>, output: PathBuf) -> Result<bool> {
    if exists_skip(&output, common.force) {
        return Ok(true);
    }
    let (_, root) = common.load()?;
    let inputs = if inputs.is_empty() { vec![root] } else { inputs.to_vec() };
    let mut runs = Vec::new();
    for input in &inputs {
        for dir in find_runs(input)? {
            runs.push((run_label(input, &dir), dir));
        }
    }
    if runs.is_empty() {
        return Err(CliError::MissingRun(inputs[0].clone()));
    }
    let results: Vec<Result<RelearnRow>> =
        pool(common.jobs)?.install(|| runs.par_iter().map(|(label, dir)| relearn(dir, label, n_final, task)).collect());
    let mut rows = Vec::new();
    let mut ok = true;
    for ((label, _), r) in runs.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                eprintln!("FAILED: {label}: {e}");
                ok = false;
            }
        }
    }
    write_csv(&output, &rows)?;
    eprintln!("wrote {}", output.display());
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Evolve(c) => cmd_evolve(&c),
        Command::Relearn(a) => {
            let output = a.output.clone().unwrap_or(a.common.load()?.1.join("relearn.csv"));
            cmd_relearn(&a.common, &a.runs, a.n_final, a.task, output)
        }
        Command::Transfer(a) => {
            let output = a.output.clone().unwrap_or(a.common.load()?.1.join(format!("transfer_{}.csv", a.task)));
            cmd_relearn(&a.common, &a.runs, a.n_final, Some(a.task), output)
        }
        Command::Curve(a) => {
            let (cfg, root) = a.common.load()?;
            let output = a.output.unwrap_or(root.join("curve.csv"));
            if exists_skip(&output, a.common.force) {
                return Ok(true);
            }
            let body = parse_body(&a.body)?;
            let modes: Vec<CurveMode> = a.modes.iter().map(|m| m.trim().parse()).collect::<Result<_>>()?;
            let evo = cfg.run_config(&cfg.runs()[0]);
            let rows = learning_curves(&body, &evo, a.budget, &a.seeds, &modes, &pool(a.common.jobs)?)?;
            write_csv(&output, &rows)?;
            eprintln!("wrote {}", output.display());
            Ok(true)
        }
        Command::Analyze(c) => {
            let (_, root) = c.load()?;
            let (desc, div) = (root.join(DESCRIPTORS_FILE), root.join(DIVERSITY_FILE));
            if !c.force && desc.exists() && div.exists() {
                exists_skip(&desc, false);
                return Ok(true);
            }
            let a = analyze(&root)?;
            write_csv(&desc, &a.descriptors)?;
            write_csv(&div, &a.diversity)?;
            eprintln!("wrote {} and {}", desc.display(), div.display());
            Ok(true)
        }
        Command::Stats(a) => {
            let (_, root) = a.common.load()?;
            let output = a.output.unwrap_or(root.join(STATS_FILE));
            if exists_skip(&output, a.common.force) {
                return Ok(true);
            }
            let tables = if a.tables.is_empty() { vec![root.join(QSTAR_FILE)] } else { a.tables };
            let mut rows: Vec<QStarRow> = Vec::new();
            for t in &tables {
                rows.extend(read_csv::<QStarRow>(t)?);
            }
            write_csv(&output, &significance(&rows, a.alpha)?)?;
            eprintln!("wrote {}", output.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
