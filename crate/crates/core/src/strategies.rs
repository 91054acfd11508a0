//! Teacher selection for warm-starting a learner's BO run.
//!
//! Social-learning modes hand the learner `n0` evaluated controllers taken
//! from the previous generation; IL hands over the genotype's own θ and
//! NoBO draws uniformly.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{uniform_params, BrainParams};
use crate::evolution::Individual;
use crate::morphology::{hamming_distance_aligned, BodyGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("{strategy} needs {needed} teacher samples but only {available} are available")]
    InsufficientTeachers { strategy: StrategyId, needed: usize, available: usize },
    #[error("learner has no parent in the previous generation")]
    MissingParent,
    #[error("IL needs a genotype θ")]
    MissingGenotype,
    #[error("unknown strategy {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyId {
    Il,
    NoBo,
    Parent,
    BestOne,
    BestMany,
    SimilarOne,
    SimilarMany,
    RandomOne,
    RandomMany,
}

impl StrategyId {
    pub const ALL: [StrategyId; 9] = [
        StrategyId::Il,
        StrategyId::NoBo,
        StrategyId::Parent,
        StrategyId::BestOne,
        StrategyId::BestMany,
        StrategyId::SimilarOne,
        StrategyId::SimilarMany,
        StrategyId::RandomOne,
        StrategyId::RandomMany,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::Il => "il",
            StrategyId::NoBo => "nobo",
            StrategyId::Parent => "parent",
            StrategyId::BestOne => "best-1",
            StrategyId::BestMany => "best-n",
            StrategyId::SimilarOne => "similar-1",
            StrategyId::SimilarMany => "similar-n",
            StrategyId::RandomOne => "random-1",
            StrategyId::RandomMany => "random-n",
        }
    }

    /// Modes that inherit samples from other individuals.
    pub fn is_social(self) -> bool {
        !matches!(self, StrategyId::Il | StrategyId::NoBo)
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| StrategyError::Unknown(s.to_string()))
    }
}

impl TryFrom<String> for StrategyId {
    type Error = StrategyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<StrategyId> for String {
    fn from(s: StrategyId) -> Self {
        s.name().to_string()
    }
}

/// Where a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Random,
    Genotype,
    /// Sample `sample` (archive index) of individual `teacher`.
    Teacher { teacher: usize, sample: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub theta: BrainParams,
    pub source: Provenance,
}

/// What the selector needs to know about the learner.
#[derive(Debug, Clone, Copy)]
pub struct Learner<'a> {
    pub body: &'a BodyGrid,
    pub parent: Option<usize>,
    pub genotype: Option<&'a BrainParams>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub n0: usize,
    pub dim: usize,
    /// Candidates are clamped into these bounds.
    pub bounds: (f64, f64),
}

/// Uniform candidates in [-1, 1], used wherever no teachers exist yet.
pub fn bootstrap_candidates<R: Rng + ?Sized>(n0: usize, dim: usize, rng: &mut R) -> Vec<Candidate> {
    (0..n0).map(|_| Candidate { theta: uniform_params(dim, -1.0, 1.0, rng), source: Provenance::Random }).collect()
}

/// Builds the initial candidate list for one learner.
///
/// An empty `prev` means generation 0: social modes fall back to
/// [`bootstrap_candidates`].
pub fn select_init_candidates<R: Rng + ?Sized>(
    strategy: StrategyId,
    learner: Learner<'_>,
    prev: &[Individual],
    cfg: &SelectionConfig,
    rng: &mut R,
) -> Result<Vec<Candidate>, StrategyError> {
    let n0 = cfg.n0;
    let mut out = match strategy {
        StrategyId::Il => {
            let theta = learner.genotype.ok_or(StrategyError::MissingGenotype)?;
            vec![Candidate { theta: theta.clone(), source: Provenance::Genotype }]
        }
        StrategyId::NoBo => (0..n0)
            .map(|_| Candidate { theta: uniform_params(cfg.dim, cfg.bounds.0, cfg.bounds.1, rng), source: Provenance::Random })
            .collect(),
        _ if prev.is_empty() => bootstrap_candidates(n0, cfg.dim, rng),
        StrategyId::Parent => {
            let parent = learner.parent.filter(|&p| p < prev.len()).ok_or(StrategyError::MissingParent)?;
            from_one(strategy, prev, parent, n0)?
        }
        StrategyId::BestOne | StrategyId::SimilarOne | StrategyId::RandomOne => {
            let eligible: Vec<usize> = (0..prev.len()).filter(|&i| prev[i].learned.len() >= n0).collect();
            if eligible.is_empty() {
                let available = prev.iter().map(|p| p.learned.len()).max().unwrap_or(0);
                return Err(StrategyError::InsufficientTeachers { strategy, needed: n0, available });
            }
            let teacher = match strategy {
                StrategyId::BestOne => by_quality(prev, &eligible)[0],
                StrategyId::SimilarOne => by_similarity(prev, &eligible, learner.body)[0],
                _ => eligible[rng.random_range(0..eligible.len())],
            };
            from_one(strategy, prev, teacher, n0)?
        }
        StrategyId::BestMany | StrategyId::SimilarMany | StrategyId::RandomMany => {
            let eligible: Vec<usize> = (0..prev.len()).filter(|&i| !prev[i].learned.is_empty()).collect();
            let teachers: Vec<usize> = match strategy {
                StrategyId::BestMany => by_quality(prev, &eligible),
                StrategyId::SimilarMany => by_similarity(prev, &eligible, learner.body),
                _ => index::sample(rng, eligible.len(), n0.min(eligible.len())).into_iter().map(|i| eligible[i]).collect(),
            };
            from_many(strategy, prev, &teachers, n0)?
        }
    };
    for c in &mut out {
        c.theta = c.theta.clamped(cfg.bounds.0, cfg.bounds.1);
    }
    Ok(out)
}

fn from_one(strategy: StrategyId, prev: &[Individual], teacher: usize, n0: usize) -> Result<Vec<Candidate>, StrategyError> {
    let archive = &prev[teacher].learned;
    if archive.len() < n0 {
        return Err(StrategyError::InsufficientTeachers { strategy, needed: n0, available: archive.len() });
    }
    Ok(archive
        .ranked()
        .into_iter()
        .take(n0)
        .map(|s| Candidate { theta: archive.samples()[s].x.clone(), source: Provenance::Teacher { teacher, sample: s } })
        .collect())
}

// One best sample from each of the first n0 teachers. With fewer teachers
// than n0 the list cycles, taking each teacher's next-best sample.
fn from_many(strategy: StrategyId, prev: &[Individual], teachers: &[usize], n0: usize) -> Result<Vec<Candidate>, StrategyError> {
    let available: usize = teachers.iter().map(|&t| prev[t].learned.len()).sum();
    if teachers.is_empty() || available < n0 {
        return Err(StrategyError::InsufficientTeachers { strategy, needed: n0, available });
    }
    let teachers = &teachers[..teachers.len().min(n0)];
    let rankings: Vec<Vec<usize>> = teachers.iter().map(|&t| prev[t].learned.ranked()).collect();
    let mut out = Vec::with_capacity(n0);
    let mut depth = 0;
    while out.len() < n0 {
        for (k, &t) in teachers.iter().enumerate() {
            if out.len() == n0 {
                break;
            }
            if let Some(&s) = rankings[k].get(depth) {
                out.push(Candidate { theta: prev[t].learned.samples()[s].x.clone(), source: Provenance::Teacher { teacher: t, sample: s } });
            }
        }
        depth += 1;
    }
    Ok(out)
}

// Higher quality first, lower index among ties.
fn by_quality(prev: &[Individual], eligible: &[usize]) -> Vec<usize> {
    let mut order = eligible.to_vec();
    order.sort_by(|&a, &b| prev[b].quality.total_cmp(&prev[a].quality).then(a.cmp(&b)));
    order
}

// Smaller aligned distance first, then higher quality, then lower index.
fn by_similarity(prev: &[Individual], eligible: &[usize], body: &BodyGrid) -> Vec<usize> {
    let mut keyed: Vec<(usize, usize)> = eligible.iter().map(|&i| (hamming_distance_aligned(body, &prev[i].body), i)).collect();
    keyed.sort_by(|&(da, a), &(db, b)| da.cmp(&db).then(prev[b].quality.total_cmp(&prev[a].quality)).then(a.cmp(&b)));
    keyed.into_iter().map(|(_, i)| i).collect()
}
