//! Gaussian-process Bayesian optimization of controller parameters.
//!
//! The surrogate is a zero-mean GP with a Matérn 5/2 kernel fitted to
//! standardized targets. New candidates maximize the upper confidence
//! bound `mu + beta * sigma` with a multi-start bounded L-BFGS.

use std::borrow::Cow;
use std::io::{self, BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{uniform_params, BrainParams};
use crate::optim::{self, LbfgsbOptions};

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot fit a surrogate to an empty archive")]
    EmptyArchive,
    #[error("kernel matrix not positive definite even with jitter {jitter:e}")]
    SingularKernel { jitter: f64 },
    #[error("expected a point of dimension {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Why a learning loop stopped early.
#[derive(Debug, Error)]
pub enum LearnFailure<E> {
    #[error("objective failed: {0}")]
    Objective(E),
    #[error("objective returned non-finite value {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Model(#[from] BoError),
}

/// A failed learning run together with everything evaluated before the failure.
#[derive(Debug, Error)]
#[error("learning stopped after {} samples: {failure}", archive.len())]
pub struct LearnError<E> {
    pub archive: SampleArchive,
    pub failure: LearnFailure<E>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    pub n0: usize,
    pub n_final: usize,
    pub beta: f64,
    /// Box bounds applied to every dimension.
    pub bounds: (f64, f64),
    pub restarts: usize,
    pub max_iter: usize,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub jitter: f64,
    pub max_jitter: f64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            n0: 8,
            n_final: 50,
            beta: 3.0,
            bounds: (-2.0, 2.0),
            restarts: 8,
            max_iter: 100,
            length_scale: 10.0,
            signal_variance: 1.0,
            jitter: 1e-6,
            max_jitter: 1e-2,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<(), BoError> {
        if self.n0 < 1 || self.n0 >= self.n_final {
            return Err(BoError::InvalidConfig("need 1 <= n0 < n_final".into()));
        }
        self.validate_search()
    }

    /// Checks the settings a learning loop relies on. Unlike `validate`
    /// this does not require `n0 < n_final`.
    pub fn validate_search(&self) -> Result<(), BoError> {
        let bad = |m: &str| Err(BoError::InvalidConfig(m.to_string()));
        if !(self.beta >= 0.0) {
            return bad("beta must be non-negative");
        }
        if !(self.bounds.0 < self.bounds.1) {
            return bad("lower bound must be below upper bound");
        }
        if !(self.length_scale > 0.0 && self.signal_variance > 0.0) {
            return bad("kernel hyperparameters must be positive");
        }
        if !(self.jitter > 0.0 && self.jitter <= self.max_jitter) {
            return bad("need 0 < jitter <= max_jitter");
        }
        Ok(())
    }

    fn clamp(&self, x: &BrainParams) -> BrainParams {
        x.clamped(self.bounds.0, self.bounds.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(rename = "theta")]
    pub x: BrainParams,
    pub y: f64,
}

/// Evaluated samples in evaluation order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleArchive {
    samples: Vec<Sample>,
}

#[derive(Serialize, Deserialize)]
struct ArchiveLine<'a> {
    index: usize,
    y: f64,
    theta: Cow<'a, [f64]>,
}

impl SampleArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: BrainParams, y: f64) {
        self.samples.push(Sample { x, y });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    /// Index of the largest observed value; the earliest wins ties.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.samples.iter().enumerate() {
            if best.is_none_or(|b| s.y > self.samples[b].y) {
                best = Some(i);
            }
        }
        best
    }

    pub fn best(&self) -> Option<&Sample> {
        self.best_index().map(|i| &self.samples[i])
    }

    /// Sample indices by decreasing `y`, earlier samples first among ties.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.samples.len()).collect();
        idx.sort_by(|&a, &b| self.samples[b].y.total_cmp(&self.samples[a].y));
        idx
    }

    pub fn best_n(&self, n: usize) -> Vec<&Sample> {
        self.ranked().into_iter().take(n).map(|i| &self.samples[i]).collect()
    }

    /// Running maximum of `y` over the evaluation order.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.samples
            .iter()
            .scan(f64::NEG_INFINITY, |m, s| {
                *m = m.max(s.y);
                Some(*m)
            })
            .collect()
    }

    /// One JSON object per line: `{"index":i,"y":y,"theta":[...]}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (index, s) in self.samples.iter().enumerate() {
            let line = ArchiveLine { index, y: s.y, theta: Cow::Borrowed(&s.x) };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<Self> {
        let mut out = Self::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ArchiveLine = serde_json::from_str(&line)?;
            if parsed.index != out.len() {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("expected sample index {}, found {}", out.len(), parsed.index),
                ));
            }
            out.push(BrainParams(parsed.theta.into_owned()), parsed.y);
        }
        Ok(out)
    }
}

impl FromIterator<Sample> for SampleArchive {
    fn from_iter<T: IntoIterator<Item = Sample>>(iter: T) -> Self {
        Self { samples: iter.into_iter().collect() }
    }
}

/// Matérn 5/2 covariance at distance `r`.
pub fn matern52(r: f64, length_scale: f64, signal_variance: f64) -> f64 {
    let a = SQRT5 * r / length_scale;
    signal_variance * (1.0 + a + a * a / 3.0) * (-a).exp()
}

// d k / d x = matern52_grad_factor(r) * (x - x')
fn matern52_grad_factor(r: f64, length_scale: f64, signal_variance: f64) -> f64 {
    let a = SQRT5 * r / length_scale;
    -signal_variance * 5.0 / (3.0 * length_scale * length_scale) * (1.0 + a) * (-a).exp()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A fitted surrogate. Immutable and safe to share across threads.
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    length_scale: f64,
    signal_variance: f64,
    jitter: f64,
    y_mean: f64,
    y_scale: f64,
    chol_l: DMatrix<f64>,
    alpha: DVector<f64>,
    best: usize,
}

pub fn fit_gp(samples: &SampleArchive, cfg: &BoConfig) -> Result<GpModel, BoError> {
    let best = samples.best_index().ok_or(BoError::EmptyArchive)?;
    let n = samples.len();
    let dim = samples.samples[0].x.len();
    if let Some(s) = samples.iter().find(|s| s.x.len() != dim) {
        return Err(BoError::ShapeMismatch { expected: dim, got: s.x.len() });
    }
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
    let y_scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    let targets = DVector::from_iterator(n, ys.iter().map(|y| (y - y_mean) / y_scale));

    let x: Vec<Vec<f64>> = samples.iter().map(|s| s.x.to_vec()).collect();
    let gram = DMatrix::from_fn(n, n, |i, j| matern52(distance(&x[i], &x[j]), cfg.length_scale, cfg.signal_variance));

    let mut jitter = cfg.jitter;
    loop {
        let k = &gram + DMatrix::identity(n, n) * jitter;
        if let Some(chol) = k.cholesky() {
            let alpha = chol.solve(&targets);
            return Ok(GpModel {
                x,
                length_scale: cfg.length_scale,
                signal_variance: cfg.signal_variance,
                jitter,
                y_mean,
                y_scale,
                chol_l: chol.unpack(),
                alpha,
                best,
            });
        }
        if jitter >= cfg.max_jitter {
            return Err(BoError::SingularKernel { jitter });
        }
        jitter = (jitter * 10.0).min(cfg.max_jitter);
    }
}

impl GpModel {
    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The jitter actually used to factorize the kernel matrix.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Training input with the largest observed target.
    pub fn best_x(&self) -> &[f64] {
        &self.x[self.best]
    }

    fn check(&self, x: &[f64]) -> Result<(), BoError> {
        if x.len() != self.dim() {
            return Err(BoError::ShapeMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Posterior mean and standard deviation in the original target units.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64), BoError> {
        self.check(x)?;
        let (mu, sigma, _) = self.evaluate(x, false);
        Ok((mu, sigma))
    }

    pub fn ucb(&self, x: &[f64], beta: f64) -> Result<f64, BoError> {
        let (mu, sigma) = self.posterior(x)?;
        Ok(mu + beta * sigma)
    }

    /// UCB value with its gradient written into `grad`.
    pub fn ucb_with_grad(&self, x: &[f64], beta: f64, grad: &mut [f64]) -> Result<f64, BoError> {
        self.check(x)?;
        let (mu, sigma, g) = self.evaluate(x, true);
        let (dmu, dvar_s, sigma_s) = g.expect("gradient requested");
        let dsigma = if sigma_s > 1e-12 { 0.5 / sigma_s } else { 0.0 };
        for ((out, m), v) in grad.iter_mut().zip(&dmu).zip(&dvar_s) {
            *out = self.y_scale * (m + beta * dsigma * v);
        }
        Ok(mu + beta * sigma)
    }

    // Returns (mu, sigma) and, on request, the standardized gradients of the
    // mean and variance together with the standardized sigma.
    #[allow(clippy::type_complexity)]
    fn evaluate(&self, x: &[f64], with_grad: bool) -> (f64, f64, Option<(Vec<f64>, Vec<f64>, f64)>) {
        let n = self.len();
        let mut kstar = DVector::zeros(n);
        let mut factors = Vec::new();
        for (i, xi) in self.x.iter().enumerate() {
            let r = distance(x, xi);
            kstar[i] = matern52(r, self.length_scale, self.signal_variance);
            if with_grad {
                factors.push(matern52_grad_factor(r, self.length_scale, self.signal_variance));
            }
        }
        let mu_s = kstar.dot(&self.alpha);
        let v = self.chol_l.solve_lower_triangular(&kstar).expect("Cholesky factor has a non-zero diagonal");
        let var_s = (self.signal_variance - v.dot(&v)).max(0.0);
        let sigma_s = var_s.sqrt();
        let mu = self.y_mean + self.y_scale * mu_s;
        let sigma = self.y_scale * sigma_s;
        if !with_grad {
            return (mu, sigma, None);
        }
        // K^-1 k* for the variance gradient
        let w = self.chol_l.tr_solve_lower_triangular(&v).expect("Cholesky factor has a non-zero diagonal");
        let d = x.len();
        let mut dmu = vec![0.0; d];
        let mut dvar = vec![0.0; d];
        for (i, xi) in self.x.iter().enumerate() {
            let (a, b) = (self.alpha[i] * factors[i], -2.0 * w[i] * factors[i]);
            for j in 0..d {
                let diff = x[j] - xi[j];
                dmu[j] += a * diff;
                dvar[j] += b * diff;
            }
        }
        (mu, sigma, Some((dmu, dvar, sigma_s)))
    }
}

/// Multi-start bounded ascent of the UCB. Starts from the best training
/// input plus `restarts - 1` uniform points; zero restarts returns the best
/// training input unchanged.
pub fn maximize_acquisition<R: Rng + ?Sized>(model: &GpModel, cfg: &BoConfig, rng: &mut R) -> BrainParams {
    let dim = model.dim();
    let best = BrainParams(model.best_x().to_vec());
    if cfg.restarts == 0 {
        return cfg.clamp(&best);
    }
    let lo = vec![cfg.bounds.0; dim];
    let hi = vec![cfg.bounds.1; dim];
    let opts = LbfgsbOptions { max_iter: cfg.max_iter, pg_tol: 1e-6, ..Default::default() };
    let mut starts = vec![best.0.clone()];
    starts.extend((1..cfg.restarts).map(|_| uniform_params(dim, cfg.bounds.0, cfg.bounds.1, rng).0));

    let mut winner: Option<(Vec<f64>, f64)> = None;
    for x0 in &starts {
        let objective = |x: &[f64], g: &mut [f64]| {
            let v = model.ucb_with_grad(x, cfg.beta, g).expect("dimension checked above");
            g.iter_mut().for_each(|gi| *gi = -*gi);
            -v
        };
        let m = optim::minimize(objective, x0, &lo, &hi, &opts);
        let value = -m.f;
        if value.is_finite() && winner.as_ref().is_none_or(|(_, w)| value > *w) {
            winner = Some((m.x, value));
        }
    }
    match winner {
        Some((x, _)) => cfg.clamp(&BrainParams(x)),
        None => cfg.clamp(&best),
    }
}

fn evaluate_into<E, F>(objective: &mut F, x: BrainParams, archive: &mut SampleArchive) -> Result<(), LearnFailure<E>>
where
    F: FnMut(&BrainParams) -> Result<f64, E>,
{
    let y = objective(&x).map_err(LearnFailure::Objective)?;
    if !y.is_finite() {
        return Err(LearnFailure::NonFinite(y));
    }
    archive.push(x, y);
    Ok(())
}

/// Evaluates `init` and then runs BO until the archive holds `n_final` samples.
pub fn bo_learn<E, F, R>(mut objective: F, init: &[BrainParams], cfg: &BoConfig, rng: &mut R) -> Result<SampleArchive, LearnError<E>>
where
    F: FnMut(&BrainParams) -> Result<f64, E>,
    R: Rng + ?Sized,
{
    let mut archive = SampleArchive::new();
    let fail = |archive: SampleArchive, failure| Err(LearnError { archive, failure });
    if let Err(e) = cfg.validate_search() {
        return fail(archive, e.into());
    }
    if init.is_empty() || init.len() > cfg.n_final {
        let msg = format!("need 1..={} initial candidates, got {}", cfg.n_final, init.len());
        return fail(archive, BoError::InvalidConfig(msg).into());
    }
    let dim = init[0].len();
    if let Some(x) = init.iter().find(|x| x.len() != dim) {
        return fail(archive, BoError::ShapeMismatch { expected: dim, got: x.len() }.into());
    }

    for x in init {
        if let Err(f) = evaluate_into(&mut objective, cfg.clamp(x), &mut archive) {
            return fail(archive, f);
        }
    }
    while archive.len() < cfg.n_final {
        let model = match fit_gp(&archive, cfg) {
            Ok(m) => m,
            Err(e) => return fail(archive, e.into()),
        };
        let mut x = maximize_acquisition(&model, cfg, rng);
        if archive.iter().any(|s| s.x == x) {
            for v in x.iter_mut() {
                *v += rng.random_range(-0.5e-6..0.5e-6);
            }
            x = cfg.clamp(&x);
        }
        if let Err(f) = evaluate_into(&mut objective, x, &mut archive) {
            return fail(archive, f);
        }
    }
    Ok(archive)
}

/// Baseline without a surrogate: `n_final` uniform points in the bounds.
pub fn random_learn<E, F, R>(mut objective: F, dim: usize, cfg: &BoConfig, rng: &mut R) -> Result<SampleArchive, LearnError<E>>
where
    F: FnMut(&BrainParams) -> Result<f64, E>,
    R: Rng + ?Sized,
{
    let mut archive = SampleArchive::new();
    for _ in 0..cfg.n_final {
        let x = uniform_params(dim, cfg.bounds.0, cfg.bounds.1, rng);
        if let Err(failure) = evaluate_into(&mut objective, x, &mut archive) {
            return Err(LearnError { archive, failure });
        }
    }
    Ok(archive)
}
