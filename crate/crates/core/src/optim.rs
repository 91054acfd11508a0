//! Bound-constrained limited-memory quasi-Newton minimization.
//!
//! A projected L-BFGS: the two-loop recursion supplies a search direction
//! over the variables that are not pinned at a bound, and a backtracking
//! Armijo search runs along the projected path `P(x + a d)`.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsbOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop once the projected gradient's infinity norm falls below this.
    pub pg_tol: f64,
    /// Stop once the relative decrease of `f` falls below this.
    pub f_tol: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        Self { memory: 10, max_iter: 100, pg_tol: 1e-8, f_tol: 1e-12, max_line_search: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&x, &g), (&l, &h))| ((x - g).clamp(l, h) - x).abs())
        .fold(0.0, f64::max)
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x0`.
///
/// `f` writes the gradient into its second argument and returns the value.
/// Non-finite values are treated as failed trial points; the search then
/// stops at the best point found so far.
pub fn minimize<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &LbfgsbOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    assert!(lo.len() == n && hi.len() == n, "bounds must match the dimension");
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    if !fx.is_finite() {
        return Minimum { x, f: fx, iterations: 0, converged: false };
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut alpha = vec![0.0; opts.memory];

    for iter in 0..opts.max_iter {
        if projected_gradient_norm(&x, &g, lo, hi) < opts.pg_tol {
            return Minimum { x, f: fx, iterations: iter, converged: true };
        }

        // variables held at a bound by the gradient are frozen this iteration
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        for i in 0..n {
            d[i] = if free[i] { -g[i] } else { 0.0 };
        }
        for (j, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &d);
            alpha[j] = a;
            for i in 0..n {
                d[i] -= a * y[i];
            }
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for (j, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &d);
            for i in 0..n {
                d[i] += (alpha[j] - b) * s[i];
            }
        }
        for i in 0..n {
            if !free[i] {
                d[i] = 0.0;
            }
        }
        if dot(&d, &g) >= 0.0 {
            history.clear();
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }

        let mut step = 1.0;
        if history.is_empty() {
            // first step of a fresh memory: unit length along the gradient
            let norm = dot(&d, &d).sqrt();
            if norm > 0.0 {
                step = (1.0 / norm).min(1.0);
            }
        }
        let mut accepted = None;
        for _ in 0..opts.max_line_search {
            for i in 0..n {
                trial[i] = x[i] + step * d[i];
            }
            project(&mut trial, lo, hi);
            let decrease: f64 = dot(&g, &trial) - dot(&g, &x);
            let ft = f(&trial, &mut g_trial);
            if ft.is_finite() && ft <= fx + 1e-4 * decrease {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
        }
        let Some(ft) = accepted else {
            return Minimum { x, f: fx, iterations: iter, converged: false };
        };

        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_trial.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let rel = (fx - ft) / fx.abs().max(ft.abs()).max(1.0);
        x.copy_from_slice(&trial);
        g.copy_from_slice(&g_trial);
        fx = ft;
        if rel < opts.f_tol {
            return Minimum { x, f: fx, iterations: iter + 1, converged: true };
        }
    }
    Minimum { x, f: fx, iterations: opts.max_iter, converged: false }
}
