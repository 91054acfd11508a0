//! Body-brain co-optimization of 2-D voxel soft robots.
//!
//! Bodies (5x5 voxel polyominoes) evolve under a generational genetic
//! algorithm; each body's brain, a shared-weight per-voxel MLP, is learned
//! by Gaussian-process Bayesian optimization whose initial candidates can
//! be taken from other robots' experience (social learning).

pub mod bayesopt;
pub mod controller;
pub mod evolution;
pub mod morphology;
pub mod optim;
pub mod physics;
pub mod seeding;
pub mod stats;
pub mod strategies;
pub mod tasks;
