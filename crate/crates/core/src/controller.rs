//! The shared-weight per-voxel MLP brain.
//!
//! Every voxel runs the same one-hidden-layer network on its own sensor
//! frame. Parameters are stored flat in the order `[W1 (row-major,
//! hidden x inputs), b1, W2 (row-major, outputs x hidden), b2]`; that
//! layout is part of the checkpoint format and must not change.

use std::io::{self, Read, Write};
use std::ops::{Deref, DerefMut};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::{DISTANCE_X_INPUT, DISTANCE_Y_INPUT, SENSOR_LEN, TIME_INPUT};

/// Lower and upper bound of the rescaled actuation output.
pub const ACTUATION_MIN: f64 = 0.6;
pub const ACTUATION_MAX: f64 = 1.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self { n_inputs: SENSOR_LEN, n_hidden: 10, n_outputs: 1 }
    }
}

impl ControllerSpec {
    pub fn param_count(&self) -> usize {
        param_count(self)
    }
}

pub fn param_count(spec: &ControllerSpec) -> usize {
    (spec.n_inputs + 1) * spec.n_hidden + (spec.n_hidden + 1) * spec.n_outputs
}

/// Flat controller parameter vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BrainParams(pub Vec<f64>);

impl BrainParams {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with every entry clamped to `[lo, hi]`.
    pub fn clamped(&self, lo: f64, hi: f64) -> Self {
        Self(self.0.iter().map(|v| v.clamp(lo, hi)).collect())
    }

    /// Little-endian `f64` array preceded by its length as a `u64`.
    pub fn write_le<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.0.len() as u64).to_le_bytes())?;
        for v in &self.0 {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_le<R: Read>(mut r: R) -> io::Result<Self> {
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        let mut out = Vec::with_capacity(len.min(1 << 20));
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(Self(out))
    }
}

impl From<Vec<f64>> for BrainParams {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for BrainParams {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for BrainParams {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// A parameter vector bound to its architecture, ready for evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Mlp<'a> {
    spec: ControllerSpec,
    theta: &'a [f64],
}

impl<'a> Mlp<'a> {
    pub fn new(spec: ControllerSpec, theta: &'a [f64]) -> Result<Self, ControllerError> {
        let expected = spec.param_count();
        if theta.len() != expected {
            return Err(ControllerError::ShapeMismatch { expected, got: theta.len() });
        }
        if spec.n_outputs != 1 {
            return Err(ControllerError::ShapeMismatch { expected: 1, got: spec.n_outputs });
        }
        Ok(Self { spec, theta })
    }

    pub fn spec(&self) -> ControllerSpec {
        self.spec
    }

    /// Actuation target in `(0.6, 1.6)` for one voxel's inputs.
    pub fn forward(&self, inputs: &[f64]) -> Result<f64, ControllerError> {
        if inputs.len() != self.spec.n_inputs {
            return Err(ControllerError::ShapeMismatch { expected: self.spec.n_inputs, got: inputs.len() });
        }
        Ok(self.forward_unchecked(inputs))
    }

    pub(crate) fn forward_unchecked(&self, inputs: &[f64]) -> f64 {
        let (n_in, n_hid) = (self.spec.n_inputs, self.spec.n_hidden);
        let (w1, rest) = self.theta.split_at(n_in * n_hid);
        let (b1, rest) = rest.split_at(n_hid);
        let (w2, b2) = rest.split_at(n_hid);
        let symmetric = n_in == SENSOR_LEN;
        let mut z = b2[0];
        for h in 0..n_hid {
            let row = &w1[h * n_in..(h + 1) * n_in];
            let dot = if symmetric {
                mirror_invariant_dot(row, inputs)
            } else {
                row.iter().zip(inputs).map(|(w, x)| w * x).sum::<f64>()
            };
            z += w2[h] * (dot + b1[h]).max(0.0);
        }
        // saturated sigmoids would round onto the closed bounds
        (ACTUATION_MIN + sigmoid(z) * (ACTUATION_MAX - ACTUATION_MIN))
            .clamp(ACTUATION_MIN.next_up(), ACTUATION_MAX.next_down())
    }
}

// Dot product over the standard sensor layout in which the left and right
// neighbour columns are added pairwise. The mirrored controller sees the
// same products with left and right swapped, and IEEE addition is
// commutative, so both evaluate to the same bits.
fn mirror_invariant_dot(w: &[f64], x: &[f64]) -> f64 {
    let p = |i: usize| w[i] * x[i];
    let mut acc = 0.0;
    for row in 0..3 {
        for comp in 0..3 {
            let left = 3 * (row * 3) + comp;
            let mid = left + 3;
            let right = left + 6;
            acc += p(mid) + (p(left) + p(right));
        }
    }
    acc + p(DISTANCE_X_INPUT) + p(DISTANCE_Y_INPUT) + p(TIME_INPUT)
}

/// One-shot forward pass; see [`Mlp::forward`].
pub fn forward(spec: &ControllerSpec, theta: &BrainParams, inputs: &[f64]) -> Result<f64, ControllerError> {
    Mlp::new(*spec, theta)?.forward(inputs)
}

/// I.i.d. uniform entries on `[-1, 1]`.
pub fn random_params<R: Rng + ?Sized>(spec: &ControllerSpec, rng: &mut R) -> BrainParams {
    uniform_params(spec.param_count(), -1.0, 1.0, rng)
}

pub fn uniform_params<R: Rng + ?Sized>(len: usize, lo: f64, hi: f64, rng: &mut R) -> BrainParams {
    BrainParams((0..len).map(|_| rng.random_range(lo..=hi)).collect())
}

/// `theta + N(0, sigma^2 I)`.
pub fn gaussian_perturb<R: Rng + ?Sized>(theta: &BrainParams, sigma: f64, rng: &mut R) -> BrainParams {
    if sigma == 0.0 {
        return theta.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    BrainParams(theta.iter().map(|v| v + normal.sample(rng)).collect())
}
