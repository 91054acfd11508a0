//! Rank tests for comparing strategies.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Above this combined sample size, or with ties, the normal
/// approximation is used.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("both samples must be non-empty")]
    EmptySample,
    #[error("all values are identical; the test has no information")]
    DegenerateInput,
    #[error("samples contain NaN")]
    NaN,
    #[error("the exact distribution is only available without ties")]
    TiesInExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact for small untied samples, normal approximation otherwise.
    Auto,
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample, and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Number of arrangements giving each value of U, for sample sizes n and m.
fn u_counts(n: usize, m: usize) -> Vec<f64> {
    // c[i][j][u]: arrangements of i and j items with statistic u; the
    // largest item either belongs to the first sample (adding j) or not
    let max_u = n * m;
    let mut prev: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; m + 1];
    for row in prev.iter_mut() {
        row[0] = 1.0;
    }
    for i in 1..=n {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; m + 1];
        cur[0][0] = 1.0;
        for j in 1..=m {
            for u in 0..=i * j {
                let with_first = if u >= j { prev[j][u - j] } else { 0.0 };
                let with_second = cur[j - 1][u];
                cur[j][u] = with_first + with_second;
            }
        }
        prev = cur;
    }
    prev.swap_remove(m)
}

fn exact_p(n: usize, m: usize, u: f64) -> f64 {
    let counts = u_counts(n, m);
    let total: f64 = counts.iter().sum();
    let u = u.round() as usize;
    let below: f64 = counts[..=u].iter().sum();
    let above: f64 = counts[u..].iter().sum();
    (2.0 * below.min(above) / total).min(1.0)
}

fn normal_p(n: usize, m: usize, u: f64, ties: &[usize]) -> Result<f64, StatsError> {
    let (nf, mf) = (n as f64, m as f64);
    let big_n = nf + mf;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (big_n * (big_n - 1.0)).max(1.0);
    let var = nf * mf / 12.0 * ((big_n + 1.0) - tie_term);
    if var <= 0.0 {
        return Err(StatsError::DegenerateInput);
    }
    let z = ((u - nf * mf / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::standard();
    Ok((2.0 * std.sf(z)).min(1.0))
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    mann_whitney_u_with(a, b, Method::Auto)
}

pub fn mann_whitney_u_with(a: &[f64], b: &[f64], method: Method) -> Result<MannWhitney, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(StatsError::NaN);
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().all(|&v| v == pooled[0]) {
        return Err(StatsError::DegenerateInput);
    }
    let (ranks, ties) = midranks(&pooled);
    let (n, m) = (a.len(), b.len());
    let rank_sum: f64 = ranks[..n].iter().sum();
    let u = rank_sum - (n * (n + 1)) as f64 / 2.0;
    let tied = ties.iter().any(|&t| t > 1);
    let exact = match method {
        Method::Auto => !tied && n + m <= EXACT_MAX_N,
        Method::Exact if tied => return Err(StatsError::TiesInExact),
        Method::Exact => true,
        Method::Asymptotic => false,
    };
    let p = if exact { exact_p(n, m, u) } else { normal_p(n, m, u, &ties)? };
    Ok(MannWhitney { u, p, exact })
}

/// Step-up adjusted p-values, in the input order.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p[i].total_cmp(&p[j]));
    let mut adj = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(p[i] * (m as f64 / (rank + 1) as f64));
        adj[i] = running.min(1.0);
    }
    adj
}

/// Pairwise comparison of named groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResult {
    pub names: Vec<String>,
    pub raw: Vec<Vec<f64>>,
    pub adjusted: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    pub alpha: f64,
}

/// All-pairs Mann-Whitney tests with one BH correction over the pairs.
/// Pairs without information (all values equal) get p = 1.
pub fn pairwise(groups: &[(String, Vec<f64>)], alpha: f64) -> Result<StatsResult, StatsError> {
    let k = groups.len();
    let mut raw = vec![vec![1.0; k]; k];
    let mut pairs = Vec::new();
    let mut flat = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let p = match mann_whitney_u(&groups[i].1, &groups[j].1) {
                Ok(r) => r.p,
                Err(StatsError::DegenerateInput) => 1.0,
                Err(e) => return Err(e),
            };
            raw[i][j] = p;
            raw[j][i] = p;
            pairs.push((i, j));
            flat.push(p);
        }
    }
    let adj_flat = benjamini_hochberg(&flat);
    let mut adjusted = vec![vec![1.0; k]; k];
    let mut significant = vec![vec![false; k]; k];
    for (&(i, j), &a) in pairs.iter().zip(&adj_flat) {
        adjusted[i][j] = a;
        adjusted[j][i] = a;
        significant[i][j] = a < alpha;
        significant[j][i] = a < alpha;
    }
    Ok(StatsResult { names: groups.iter().map(|g| g.0.clone()).collect(), raw, adjusted, significant, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    // Every way of choosing which ranks belong to the first sample.
    fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let (ranks, _) = midranks(&pooled);
        let (n, total_n) = (a.len(), pooled.len());
        let observed: f64 = ranks[..n].iter().sum();
        let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
        for mask in 0u32..(1 << total_n) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let s: f64 = (0..total_n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            total += 1;
            le += (s <= observed + 1e-9) as u64;
            ge += (s >= observed - 1e-9) as u64;
        }
        (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
    }

    #[test]
    fn two_against_two() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert!((r.p - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identical_samples_give_one() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0, 5.0], &[5.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.p, 1.0);
        assert_eq!(mann_whitney_u(&[2.0, 2.0], &[2.0]), Err(StatsError::DegenerateInput));
        assert_eq!(mann_whitney_u(&[], &[2.0]), Err(StatsError::EmptySample));
        assert_eq!(mann_whitney_u(&[f64::NAN], &[2.0]), Err(StatsError::NaN));
    }

    #[test]
    fn exact_matches_enumeration() {
        let mut rng = stream(1, &[]);
        for _ in 0..300 {
            let total = rng.random_range(2..=10);
            let n = rng.random_range(1..total);
            let mut values: Vec<f64> = (0..total).map(|i| i as f64 * 1.5 - 3.0).collect();
            values.shuffle(&mut rng);
            let (a, b) = values.split_at(n);
            let r = mann_whitney_u(a, b).unwrap();
            assert!(r.exact);
            assert!((r.p - brute_force_p(a, b)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_and_normal_agree_for_moderate_samples() {
        let mut rng = stream(2, &[]);
        for _ in 0..200 {
            let n = rng.random_range(8..=10);
            let m = rng.random_range(8..=10);
            let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.3).collect();
            let e = mann_whitney_u_with(&a, &b, Method::Exact).unwrap();
            let z = mann_whitney_u_with(&a, &b, Method::Asymptotic).unwrap();
            assert!((e.p - z.p).abs() < 0.05, "{} vs {}", e.p, z.p);
        }
    }

    #[test]
    fn ties_use_the_normal_approximation() {
        let r = mann_whitney_u(&[1.0, 2.0, 2.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!(!r.exact);
        assert_eq!(r.u, 1.0);
        assert_eq!(mann_whitney_u_with(&[1.0, 2.0], &[2.0], Method::Exact), Err(StatsError::TiesInExact));
        // hand computation: N=6, ties {3}, var = 9/12 * (7 - 24/30) = 4.65
        let z: f64 = (4.5f64 - 1.0 - 0.5) / 4.65f64.sqrt();
        let expect = 2.0 * Normal::standard().sf(z);
        assert!((r.p - expect).abs() < 1e-12);
    }

    #[test]
    fn bh_examples() {
        let adj = benjamini_hochberg(&[0.01, 0.04, 0.03]);
        let expect = [0.03, 0.04, 0.04];
        for (a, e) in adj.iter().zip(expect) {
            assert!((a - e).abs() < 1e-15, "{adj:?}");
        }
        assert_eq!(benjamini_hochberg(&[0.2; 5]), vec![0.2; 5]);
        assert_eq!(benjamini_hochberg(&[0.37]), vec![0.37]);
        assert_eq!(benjamini_hochberg(&[0.9, 0.8]), vec![0.9, 0.9]);
    }

    #[test]
    fn pairwise_matrix_shape() {
        let groups = vec![
            ("a".to_string(), vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            ("b".to_string(), vec![11.0, 12.0, 13.0, 14.0, 15.0]),
            ("c".to_string(), vec![7.0, 7.0, 7.0]),
            ("d".to_string(), vec![7.0, 7.0]),
        ];
        let r = pairwise(&groups, 0.05).unwrap();
        for i in 0..4 {
            assert_eq!(r.raw[i][i], 1.0);
            assert!(!r.significant[i][i]);
            for j in 0..4 {
                assert_eq!(r.raw[i][j], r.raw[j][i]);
                assert_eq!(r.adjusted[i][j], r.adjusted[j][i]);
                assert!(r.adjusted[i][j] >= r.raw[i][j]);
                assert_eq!(r.significant[i][j], r.adjusted[i][j] < 0.05);
            }
        }
        assert_eq!(r.raw[2][3], 1.0);
        assert!((r.raw[0][1] - 2.0 / 252.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn rank_invariance(a in prop::collection::vec(-50.0f64..50.0, 1..8), b in prop::collection::vec(-50.0f64..50.0, 1..8)) {
            let f = |v: &f64| (v / 4.0).exp() * 3.0;
            let fa: Vec<f64> = a.iter().map(f).collect();
            let fb: Vec<f64> = b.iter().map(f).collect();
            match (mann_whitney_u(&a, &b), mann_whitney_u(&fa, &fb)) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(x), Err(y)) => prop_assert_eq!(x, y),
                (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
            }
        }

        #[test]
        fn bh_is_monotone_and_dominates(p in prop::collection::vec(0.0f64..=1.0, 1..30)) {
            let adj = benjamini_hochberg(&p);
            for i in 0..p.len() {
                prop_assert!(adj[i] >= p[i] && adj[i] <= 1.0);
                for j in 0..p.len() {
                    if p[i] <= p[j] {
                        prop_assert!(adj[i] <= adj[j]);
                    }
                }
            }
        }

        #[test]
        fn u_statistics_sum_to_nm(a in prop::collection::vec(-5i32..5, 1..9), b in prop::collection::vec(-5i32..5, 1..9)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            if let (Ok(x), Ok(y)) = (mann_whitney_u(&a, &b), mann_whitney_u(&b, &a)) {
                prop_assert_eq!(x.u + y.u, (a.len() * b.len()) as f64);
                prop_assert!((x.p - y.p).abs() < 1e-12);
            }
        }
    }
}
