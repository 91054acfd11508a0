//! Acceptance criteria 1 to 10. Each test prints one `PASS`/`FAIL` line
//! and fails when its criterion does not hold.
//!
//! Criteria 6, 7 and 9 share one desk-scale campaign, built once.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::AtomicU64;
use std::sync::OnceLock;

use rand::Rng;
use vsr_core::bayesopt::{bo_learn, fit_gp, matern52, random_learn, BoConfig, SampleArchive};
use vsr_core::controller::{forward, random_params, uniform_params, BrainParams, ControllerSpec, ACTUATION_MAX, ACTUATION_MIN};
use vsr_core::evolution::{evaluate, evolve_in, EvalContext, EvoConfig, RunDir};
use vsr_core::morphology::{hamming_distance_aligned, mutate_body, random_body, BodyGrid, VoxelType, GRID};
use vsr_core::physics::{assemble, SensorFrame, SimConfig, Terrain, SENSOR_LEN};
use vsr_core::seeding::stream;
use vsr_core::stats::{mann_whitney_u, Method};
use vsr_core::strategies::StrategyId;
use vsr_core::tasks::{mirror_params, EpisodeScript, MlpPolicy, TaskEnv, TaskId};
use vsr_experiments::campaign::{run_campaign, CampaignConfig, QStarRow};
use vsr_experiments::curve::{learning_curves, CurveMode, CurveRow};
use vsr_experiments::pool;
use vsr_experiments::significance::median;

fn verdict(n: usize, name: &str, pass: bool, detail: impl std::fmt::Display) {
    println!("criterion {n:>2} {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

#[test]
fn criterion_01_parameter_count() {
    let spec = ControllerSpec::default();
    let (n, h) = (spec.n_inputs, spec.n_hidden);
    let count = spec.param_count();
    let env = TaskEnv::new(TaskId::Simple);
    let state = assemble(&BodyGrid::from_voxels(&[(2, 2, VoxelType::Rigid)]), &env.sim, &env.terrain(), 0.0).unwrap();
    let frame = state.observe(None, true);
    let pass = count == 321 && count == (n + 1) * h + (h + 1) && SENSOR_LEN == 30 && frame.voxel(0).len() == 30;
    verdict(1, "parameter count", pass, format!("params {count}, sensor length {}", frame.voxel(0).len()));
}

// Oracles for criterion 2, written from the definitions.

fn mlp_oracle(theta: &[f64], x: &[f64]) -> f64 {
    let (n, h) = (30, 10);
    let w1 = |j: usize, i: usize| theta[j * n + i];
    let b1 = |j: usize| theta[n * h + j];
    let w2 = |j: usize| theta[n * h + h + j];
    let b2 = theta[n * h + 2 * h];
    let hidden: Vec<f64> = (0..h).map(|j| (b1(j) + (0..n).map(|i| w1(j, i) * x[i]).sum::<f64>()).max(0.0)).collect();
    let z = b2 + (0..h).map(|j| w2(j) * hidden[j]).sum::<f64>();
    0.6 + 1.0 / (1.0 + (-z).exp())
}

fn matern_oracle(r: f64, l: f64, s2: f64) -> f64 {
    let a = 5f64.sqrt() * r / l;
    s2 * (1.0 + a + a * a / 3.0) * (-a).exp()
}

fn gauss_jordan_inverse(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..n {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

fn gp_oracle(xs: &[Vec<f64>], ys: &[f64], cfg: &BoConfig, jitter: f64, x: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let sd = (ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64).sqrt();
    let sd = if sd > 1e-12 { sd } else { 1.0 };
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let k = |a: &[f64], b: &[f64]| matern_oracle(dist(a, b), cfg.length_scale, cfg.signal_variance);
    let gram = (0..n).map(|i| (0..n).map(|j| k(&xs[i], &xs[j]) + if i == j { jitter } else { 0.0 }).collect()).collect();
    let inv = gauss_jordan_inverse(gram);
    let ks: Vec<f64> = xs.iter().map(|xi| k(x, xi)).collect();
    let (mut mu, mut quad) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            mu += ks[i] * inv[i][j] * (ys[j] - mean) / sd;
            quad += ks[i] * inv[i][j] * ks[j];
        }
    }
    (mean + sd * mu, sd * (cfg.signal_variance - quad).max(0.0).sqrt())
}

// Both grids drawn on a padded 15x15 canvas, b moved by the rounded
// difference of the centres of mass.
fn hamming_oracle(a: &BodyGrid, b: &BodyGrid) -> usize {
    const PAD: usize = 15;
    let com = |g: &BodyGrid| {
        let (mut r, mut c, mut n) = (0.0, 0.0, 0.0);
        for row in 0..GRID {
            for col in 0..GRID {
                if g.get(row, col) != VoxelType::Empty {
                    r += row as f64;
                    c += col as f64;
                    n += 1.0;
                }
            }
        }
        (r / n, c / n)
    };
    let round = |v: f64| v.signum() * (v.abs() + 0.5).floor();
    let (ca, cb) = (com(a), com(b));
    let (dr, dc) = (round(ca.0 - cb.0) as i64, round(ca.1 - cb.1) as i64);
    let mut canvas_a = [[VoxelType::Empty; PAD]; PAD];
    let mut canvas_b = [[VoxelType::Empty; PAD]; PAD];
    for row in 0..GRID {
        for col in 0..GRID {
            canvas_a[row + 5][col + 5] = a.get(row, col);
            let (r, c) = (row as i64 + 5 + dr, col as i64 + 5 + dc);
            canvas_b[r as usize][c as usize] = b.get(row, col);
        }
    }
    (0..PAD).flat_map(|r| (0..PAD).map(move |c| (r, c))).filter(|&(r, c)| canvas_a[r][c] != canvas_b[r][c]).count()
}

fn mwu_enumeration_p(a: &[f64], b: &[f64]) -> f64 {
    let u_of = |xs: &[f64], ys: &[f64]| xs.iter().map(|x| ys.iter().filter(|y| x > *y).count()).sum::<usize>();
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (n, total) = (a.len(), pooled.len());
    let observed = u_of(a, b);
    let (mut le, mut ge, mut count) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let xs: Vec<f64> = (0..total).filter(|i| mask & (1 << i) != 0).map(|i| pooled[i]).collect();
        let ys: Vec<f64> = (0..total).filter(|i| mask & (1 << i) == 0).map(|i| pooled[i]).collect();
        let u = u_of(&xs, &ys);
        count += 1;
        le += u64::from(u <= observed);
        ge += u64::from(u >= observed);
    }
    (2.0 * le.min(ge) as f64 / count as f64).min(1.0)
}

#[test]
fn criterion_02_oracle_equivalences() {
    let spec = ControllerSpec::default();
    let mut rng = stream(2002, &[]);

    let mut mlp_err: f64 = 0.0;
    for case in 0..1_000 {
        let scale = [0.1, 1.0, 3.0][case % 3];
        let theta = uniform_params(321, -scale, scale, &mut rng);
        let x: Vec<f64> = (0..30).map(|_| rng.random_range(-2.0..2.0)).collect();
        mlp_err = mlp_err.max((forward(&spec, &theta, &x).unwrap() - mlp_oracle(&theta, &x)).abs());
    }

    let cfg = BoConfig::default();
    let mut gp_err: f64 = 0.0;
    for case in 0..100 {
        let (n, dim) = (1 + case % 15, 2 + case % 7);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut archive = SampleArchive::new();
        for (x, &y) in xs.iter().zip(&ys) {
            archive.push(BrainParams(x.clone()), y);
        }
        let model = fit_gp(&archive, &cfg).unwrap();
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-15.0..15.0)).collect();
        let (mu, sigma) = model.posterior(&x).unwrap();
        let (mu_o, sigma_o) = gp_oracle(&xs, &ys, &cfg, model.jitter(), &x);
        gp_err = gp_err.max((mu - mu_o).abs()).max((sigma - sigma_o).abs());
        let r = rng.random_range(0.0..30.0);
        gp_err = gp_err.max((matern52(r, 10.0, 1.0) - matern_oracle(r, 10.0, 1.0)).abs());
    }

    let mut hamming_bad = 0;
    for _ in 0..1_000 {
        let a = random_body(&mut rng);
        let mut b = random_body(&mut rng);
        for _ in 0..rng.random_range(0..15) {
            b = mutate_body(&b, &mut rng).unwrap();
        }
        hamming_bad += usize::from(hamming_distance_aligned(&a, &b) != hamming_oracle(&a, &b));
    }

    let mut mwu_err: f64 = 0.0;
    let mut mwu_cases = 0;
    for n in 1..=9 {
        for m in 1..=(10 - n) {
            for _ in 0..5 {
                let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                let b: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
                let r = vsr_core::stats::mann_whitney_u_with(&a, &b, Method::Exact).unwrap();
                assert_eq!(r.p, mann_whitney_u(&a, &b).unwrap().p);
                mwu_err = mwu_err.max((r.p - mwu_enumeration_p(&a, &b)).abs());
                mwu_cases += 1;
            }
        }
    }

    let pass = mlp_err < 1e-12 && gp_err < 1e-8 && hamming_bad == 0 && mwu_err < 1e-12;
    verdict(
        2,
        "oracle equivalences",
        pass,
        format!(
            "MLP max err {mlp_err:.1e} (1000 cases), GP max err {gp_err:.1e} (100 cases), \
             Hamming mismatches {hamming_bad}/1000, MWU max err {mwu_err:.1e} ({mwu_cases} cases)"
        ),
    );
}

#[test]
fn criterion_03_ucb_gradient() {
    let cfg = BoConfig::default();
    let mut rng = stream(2003, &[]);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let dim = 1 + case % 8;
        let n = 2 + case % 12;
        let mut archive = SampleArchive::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
            archive.push(BrainParams(x), rng.random_range(-3.0..3.0));
        }
        let model = fit_gp(&archive, &cfg).unwrap();
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-12.0..12.0)).collect();
        let mut grad = vec![0.0; dim];
        model.ucb_with_grad(&x, cfg.beta, &mut grad).unwrap();
        let fd: Vec<f64> = (0..dim)
            .map(|j| {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += h;
                xm[j] -= h;
                (model.ucb(&xp, cfg.beta).unwrap() - model.ucb(&xm, cfg.beta).unwrap()) / (2.0 * h)
            })
            .collect();
        let diff = grad.iter().zip(&fd).map(|(g, f)| (g - f) * (g - f)).sum::<f64>().sqrt();
        let norm = fd.iter().map(|f| f * f).sum::<f64>().sqrt();
        worst = worst.max(diff / norm.max(1e-8));
    }
    verdict(3, "UCB gradient vs central differences", worst < 1e-4, format!("max relative error {worst:.2e} over 100 cases"));
}

fn sphere(x: &BrainParams) -> Result<f64, std::convert::Infallible> {
    Ok(-x.iter().map(|v| v * v).sum::<f64>())
}

fn rastrigin(x: &BrainParams) -> Result<f64, std::convert::Infallible> {
    let tau = std::f64::consts::TAU;
    Ok(-(10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (tau * v).cos()).sum::<f64>()))
}

#[test]
fn criterion_04_bo_beats_random_search() {
    type Objective = fn(&BrainParams) -> Result<f64, std::convert::Infallible>;
    let cfg = BoConfig { n0: 4, n_final: 30, ..Default::default() };
    let functions: [(&str, Objective); 2] = [("sphere", sphere), ("rastrigin", rastrigin)];
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, f) in functions {
        for dim in [2usize, 10] {
            let mut wins = 0;
            for seed in 0..20u64 {
                let mut rng = stream(seed, &[4, dim as u64]);
                let init: Vec<BrainParams> =
                    (0..cfg.n0).map(|_| uniform_params(dim, cfg.bounds.0, cfg.bounds.1, &mut rng)).collect();
                let bo = bo_learn(f, &init, &cfg, &mut rng).unwrap().best().unwrap().y;
                let rs = random_learn(f, dim, &cfg, &mut stream(seed, &[5, dim as u64])).unwrap().best().unwrap().y;
                wins += usize::from(bo > rs);
            }
            pass &= wins * 4 >= 20 * 3;
            lines.push(format!("{name}-{dim}d {wins}/20"));
        }
    }
    verdict(4, "BO beats random search (>= 75% of seeds)", pass, lines.join(", "));
}

#[test]
fn criterion_05_physics_sanity() {
    let spec = ControllerSpec::default();
    let env = TaskEnv::new(TaskId::Simple);
    let mut rng = stream(2005, &[]);

    // closed loop: mirrored body and controller on Simple
    let mut closed: f64 = 0.0;
    let mut scale_bad = 0usize;
    for case in 0..6 {
        let body = random_body(&mut rng);
        let mut theta = random_params(&spec, &mut rng);
        if case % 3 == 2 {
            theta.iter_mut().for_each(|v| *v *= 50.0);
        }
        let mirrored = mirror_params(&spec, &theta);
        let (mut ta, mut tb) = (Vec::new(), Vec::new());
        let script = EpisodeScript::default();
        env.simulate(&body, &mut MlpPolicy::new(spec, &theta).unwrap(), 0, &script, Some(&mut ta)).unwrap();
        env.simulate(&body.mirrored(), &mut MlpPolicy::new(spec, &mirrored).unwrap(), 0, &script, Some(&mut tb)).unwrap();
        assert_eq!(ta.len(), 500);
        for (a, b) in ta.iter().zip(&tb) {
            closed = closed.max((a.com_x + b.com_x).abs()).max((a.com_y - b.com_y).abs());
            scale_bad += a.actuation.iter().filter(|s| !(ACTUATION_MIN..=ACTUATION_MAX).contains(*s)).count();
        }
    }

    // open loop: the same actuation sequence, mirrored, on every voxel
    let cfg = SimConfig::default();
    let terrain = Terrain::flat(0.0, -50.0, 50.0);
    let mut open: f64 = 0.0;
    for _ in 0..3 {
        let body = random_body(&mut rng);
        let mut a = assemble(&body, &cfg, &terrain, 0.0).unwrap();
        let mut b = assemble(&body.mirrored(), &cfg, &terrain, 0.0).unwrap();
        let phase: HashMap<(usize, usize), f64> =
            a.voxels.iter().map(|v| ((v.row, v.col), rng.random_range(0.0..std::f64::consts::TAU))).collect();
        let signal = |k: u64, row: usize, col: usize| 1.1 + 0.5 * (0.3 * k as f64 + phase[&(row, col)]).sin();
        for k in 0..500u64 {
            let act_a: Vec<f64> = a.voxels.iter().map(|v| signal(k, v.row, v.col)).collect();
            let act_b: Vec<f64> = b.voxels.iter().map(|v| signal(k, v.row, GRID - 1 - v.col)).collect();
            a.step(&act_a, &cfg, &terrain, None).unwrap();
            b.step(&act_b, &cfg, &terrain, None).unwrap();
            for v in &a.voxels {
                let j = b.voxel_at(v.row as i32, (GRID - 1 - v.col) as i32).unwrap();
                let (ca, cb) = (a.voxel_center(a.voxel_at(v.row as i32, v.col as i32).unwrap()), b.voxel_center(j));
                open = open.max((ca[0] + cb[0]).abs()).max((ca[1] - cb[1]).abs());
            }
            scale_bad += a.voxels.iter().filter(|v| !(ACTUATION_MIN..=ACTUATION_MAX).contains(&v.scale)).count();
        }
    }

    // an unactuated voxel dropped onto flat ground
    let mut single = assemble(&BodyGrid::from_voxels(&[(2, 2, VoxelType::Rigid)]), &cfg, &terrain, 0.0).unwrap();
    single.pos.iter_mut().for_each(|p| p[1] += 2.0);
    let x0 = single.center_of_mass()[0];
    for _ in 0..500 {
        single.step(&[1.0], &cfg, &terrain, None).unwrap();
    }
    let drift = (single.center_of_mass()[0] - x0).abs() / cfg.voxel_side;

    let pass = closed < 1e-3 && open < 1e-6 && drift < 1e-3 && scale_bad == 0;
    verdict(
        5,
        "physics sanity",
        pass,
        format!("closed-loop mirror {closed:.1e}, open-loop mirror {open:.1e}, drop drift {drift:.1e}, scales out of range {scale_bad}"),
    );
}

// ---- desk-scale campaign shared by criteria 6, 7 and 9 ----

const DESK: &str = "
strategies = best-n, il, nobo
tasks = simple
repetitions = 5
seed_base = 0
n_pop = 16
n_gen = 10
n_final = 20
n0 = 4
";

struct Desk {
    root: PathBuf,
    rows: Vec<QStarRow>,
    _dir: tempfile::TempDir,
}

fn desk() -> &'static Desk {
    static DESK_RUN: OnceLock<Desk> = OnceLock::new();
    DESK_RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = CampaignConfig::from_kv(DESK).unwrap();
        let report = run_campaign(&cfg, dir.path(), &pool(None).unwrap(), false).unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        Desk { root: dir.path().to_path_buf(), rows: report.rows, _dir: dir }
    })
}

fn q_stars(strategy: &str) -> Vec<f64> {
    desk().rows.iter().filter(|r| r.strategy == strategy).map(|r| r.q_star).collect()
}

#[test]
fn criterion_06_desk_scale_direction() {
    let (best, il, nobo) = (q_stars("best-n"), q_stars("il"), q_stars("nobo"));
    assert_eq!((best.len(), il.len(), nobo.len()), (5, 5, 5));
    let (mb, mi, mn) = (median(&best), median(&il), median(&nobo));
    verdict(
        6,
        "desk-scale Best-Many >= IL and >= NoBO (median q*)",
        mb >= mi && mb >= mn,
        format!("medians best-n {mb:.3}, il {mi:.3}, nobo {mn:.3}"),
    );
}

#[test]
fn criterion_07_fixed_body_learning_curves() {
    let desk = desk();
    let best_run = desk.rows.iter().filter(|r| r.strategy == "best-n").max_by(|a, b| a.q_star.total_cmp(&b.q_star)).unwrap();
    let dir = desk.root.join("simple").join("best-n").join(format!("rep_{}", best_run.repetition));
    let body = vsr_experiments::load_record(&dir).unwrap().best().unwrap().body;

    let cfg = CampaignConfig::from_kv(DESK).unwrap();
    let evo = cfg.run_config(&cfg.runs()[0]);
    let seeds = [0, 1, 2, 3, 4];
    let rows = learning_curves(&body, &evo, 100, &seeds, &CurveMode::ALL, &pool(None).unwrap()).unwrap();
    let at = |mode: &str, seed: u64, it: usize| -> f64 {
        rows.iter().find(|r: &&CurveRow| r.mode == mode && r.seed == seed && r.iteration == it).unwrap().best_so_far
    };
    let sl_early = seeds.iter().filter(|&&s| at("sl", s, 10) >= at("il", s, 10)).count();
    let il_mid = seeds.iter().filter(|&&s| at("il", s, 50) >= at("nobo", s, 50)).count();
    let sl_mid = seeds.iter().filter(|&&s| at("sl", s, 50) >= at("nobo", s, 50)).count();
    verdict(
        7,
        "fixed-body curve ordering",
        sl_early >= 3 && il_mid >= 4 && sl_mid >= 4,
        format!("body {body}; SL>=IL at 10: {sl_early}/5, IL>=NoBO at 50: {il_mid}/5, SL>=NoBO at 50: {sl_mid}/5"),
    );
}

#[test]
fn criterion_08_episode_budget() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (strategy, n_gen, n_pop, n_final) in
        [(StrategyId::BestMany, 3, 5, 4), (StrategyId::Il, 2, 6, 3), (StrategyId::NoBo, 3, 4, 5), (StrategyId::SimilarOne, 2, 5, 4)]
    {
        let dir = tempfile::tempdir().unwrap();
        let cfg = EvoConfig {
            strategy,
            n_gen,
            n_pop,
            seed: 8,
            bo: BoConfig { n0: 2, n_final, restarts: 2, max_iter: 20, ..Default::default() },
            ..Default::default()
        };
        let mut cfg = cfg;
        cfg.task_params.episode_steps = 50;
        let record = evolve_in(&cfg, dir.path()).unwrap();
        let stored: usize =
            (0..n_gen).map(|g| RunDir::load_generation(dir.path(), g).unwrap().iter().map(|i| i.learned.len()).sum::<usize>()).sum();
        let expected = (n_gen * n_pop * n_final) as u64;
        pass &= record.episodes == expected && stored as u64 == expected;
        lines.push(format!("{strategy}: counted {} stored {stored} expected {expected}", record.episodes));
    }

    // a single learner outside of evolution
    let env = TaskEnv::new(TaskId::Catch);
    let bo = BoConfig { n_final: 7, restarts: 2, max_iter: 20, ..Default::default() };
    let counter = AtomicU64::new(0);
    let ctx = EvalContext { env: &env, bo: &bo, no_bo: false, episodes: &counter };
    let body = random_body(&mut stream(1, &[]));
    let ind = evaluate(&body, &[BrainParams::zeros(321)], &ctx, 3, None, None);
    pass &= counter.into_inner() == 7 && ind.learned.len() == 7;
    verdict(8, "episode budget n_gen * n_pop * n_final", pass, lines.join("; "));
}

#[test]
fn criterion_09_determinism() {
    let desk = desk();
    let cfg = CampaignConfig::from_kv(DESK).unwrap();
    let mut again_cfg = cfg.clone();
    again_cfg.strategies = vec![StrategyId::BestMany];
    again_cfg.repetitions = 1;
    let dir = tempfile::tempdir().unwrap();
    let again = run_campaign(&again_cfg, dir.path(), &pool(Some(1)).unwrap(), false).unwrap();
    let spec = again_cfg.runs()[0];
    let first = fs::read(spec.dir(&desk.root).join(RunDir::SUMMARY)).unwrap();
    let second = fs::read(spec.dir(dir.path()).join(RunDir::SUMMARY)).unwrap();
    let q_first = desk.rows.iter().find(|r| r.strategy == "best-n" && r.repetition == 0).unwrap().q_star;
    let q_second = again.rows[0].q_star;
    verdict(
        9,
        "determinism",
        first == second && q_first.to_bits() == q_second.to_bits(),
        format!("summary.csv identical: {}, q* {q_first} vs {q_second}", first == second),
    );
}

#[test]
fn criterion_10_carry_drop_penalty() {
    let env = TaskEnv::new(TaskId::Carry);
    let body: BodyGrid = ".....-.....-RRRRR-SSSSS-.....".parse().unwrap();
    let mut idle = |_: u64, _: &SensorFrame, out: &mut [f64]| out.fill(1.0);
    let script = EpisodeScript { payload_kick: Some((50, [-8.0, 3.0])) };
    let r = env.simulate(&body, &mut idle, 0, &script, None).unwrap();
    verdict(10, "carry drop penalty", r.quality < 0.0 && !r.carried, format!("q = {:.4}, carried = {}", r.quality, r.carried));
}
