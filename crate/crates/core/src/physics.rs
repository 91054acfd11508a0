//! Deterministic 2-D mass-spring simulation of voxel bodies.
//!
//! Each voxel is a square of four corner point masses joined by four edge
//! springs and two diagonal shear springs. Corners are shared between
//! adjacent voxels, springs are not: every voxel owns its six springs, so
//! an edge shared by two voxels is held by two springs. Integration is
//! semi-implicit Euler with a fixed number of substeps per control step.
//!
//! World frame: x to the right, y up. Grid row 0 is the top of the body.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{ACTUATION_MAX, ACTUATION_MIN};
use crate::morphology::{BodyGrid, VoxelType, GRID};

/// Sensor values per voxel: 9 neighbours x (vx, vy, area), 2 distances, time.
pub const SENSOR_LEN: usize = 3 * 9 + 2 + 1;
/// Period of the time signal, in control steps.
pub const TIME_PERIOD: u64 = 25;

/// Offsets inside a voxel's sensor slice.
pub const DISTANCE_X_INPUT: usize = 27;
pub const DISTANCE_Y_INPUT: usize = 28;
pub const TIME_INPUT: usize = 29;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("cannot place body: {0}")]
    SpawnCollision(String),
    #[error("simulation diverged at step {step}")]
    NumericalBlowup { step: u64 },
    #[error("expected {expected} actuation values, got {got}")]
    ActuationShape { expected: usize, got: usize },
    #[error("invalid terrain: {0}")]
    InvalidTerrain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration step in seconds.
    pub dt: f64,
    /// Integration steps per control step.
    pub substeps: u32,
    pub gravity: f64,
    pub soft_stiffness: f64,
    pub rigid_stiffness: f64,
    /// Dashpot coefficient along every spring.
    pub damping: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub friction: f64,
    pub voxel_side: f64,
    pub corner_mass: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 600.0,
            substeps: 12,
            gravity: 9.81,
            soft_stiffness: 3_000.0,
            rigid_stiffness: 30_000.0,
            damping: 20.0,
            contact_stiffness: 30_000.0,
            contact_damping: 100.0,
            friction: 0.7,
            voxel_side: 1.0,
            corner_mass: 1.0,
        }
    }
}

impl SimConfig {
    pub fn control_dt(&self) -> f64 {
        self.dt * self.substeps as f64
    }

    pub fn steps_per_second(&self) -> f64 {
        1.0 / self.control_dt()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0) || self.substeps == 0 {
            return Err("dt and substeps must be positive".into());
        }
        if !(self.rigid_stiffness > self.soft_stiffness && self.soft_stiffness > 0.0) {
            return Err("need rigid stiffness > soft stiffness > 0".into());
        }
        if !(self.friction >= 0.0) || !(self.corner_mass > 0.0) || !(self.voxel_side > 0.0) {
            return Err("friction must be >= 0, mass and side > 0".into());
        }
        Ok(())
    }

    // Saturating viscous model of Coulomb friction: below the Coulomb limit
    // tangential velocity is damped almost to rest within one step.
    fn friction_viscosity(&self, mass: f64) -> f64 {
        0.5 * mass / self.dt
    }
}

/// Piecewise-linear height field, clamped flat beyond its end points.
#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    points: Vec<(f64, f64)>,
    flat: Option<f64>,
}

impl Terrain {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, PhysicsError> {
        if points.len() < 2 {
            return Err(PhysicsError::InvalidTerrain("need at least two breakpoints".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(PhysicsError::InvalidTerrain("breakpoints must be strictly increasing in x".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(PhysicsError::InvalidTerrain("non-finite breakpoint".into()));
        }
        let flat = points.iter().all(|p| p.1 == points[0].1).then_some(points[0].1);
        Ok(Self { points, flat })
    }

    pub fn flat(y: f64, x_min: f64, x_max: f64) -> Self {
        Self::new(vec![(x_min, y), (x_max, y)]).expect("valid flat terrain")
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Mirror image about `x = axis`.
    pub fn mirrored(&self, axis: f64) -> Self {
        let pts = self.points.iter().rev().map(|&(x, y)| (2.0 * axis - x, y)).collect();
        Self::new(pts).expect("mirror of a valid terrain is valid")
    }

    /// Height and slope at `x`.
    pub fn height_slope(&self, x: f64) -> (f64, f64) {
        if let Some(y) = self.flat {
            return (y, 0.0);
        }
        let pts = &self.points;
        if x <= pts[0].0 {
            return (pts[0].1, 0.0);
        }
        if x >= pts[pts.len() - 1].0 {
            return (pts[pts.len() - 1].1, 0.0);
        }
        // first index with point.x > x; segment is [i-1, i]
        let i = pts.partition_point(|p| p.0 <= x);
        let (x0, y0) = pts[i - 1];
        let (x1, y1) = pts[i];
        let s = (y1 - y0) / (x1 - x0);
        (y0 + s * (x - x0), s)
    }

    pub fn height(&self, x: f64) -> f64 {
        self.height_slope(x).0
    }
}

/// Axis-aligned rigid box that translates without rotating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayloadBox {
    pub width: f64,
    pub height: f64,
    /// Centre position.
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub mass: f64,
}

impl PayloadBox {
    pub fn bottom(&self) -> f64 {
        self.pos[1] - 0.5 * self.height
    }

    pub fn top(&self) -> f64 {
        self.pos[1] + 0.5 * self.height
    }

    pub fn left(&self) -> f64 {
        self.pos[0] - 0.5 * self.width
    }

    pub fn right(&self) -> f64 {
        self.pos[0] + 0.5 * self.width
    }

    /// Closest point of the box to `p` (p itself when inside).
    pub fn closest_point(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.left(), self.right()), p[1].clamp(self.bottom(), self.top())]
    }

    /// Whether `p` lies inside the box grown by `margin` on every side.
    pub fn contains(&self, p: [f64; 2], margin: f64) -> bool {
        p[0] >= self.left() - margin
            && p[0] <= self.right() + margin
            && p[1] >= self.bottom() - margin
            && p[1] <= self.top() + margin
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring {
    pub a: usize,
    pub b: usize,
    pub rest: f64,
    pub stiffness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voxel {
    pub row: usize,
    pub col: usize,
    pub kind: VoxelType,
    /// Corner mass indices: top-left, top-right, bottom-right, bottom-left.
    pub corners: [usize; 4],
    /// Index of the first of this voxel's six springs: top, bottom, left,
    /// right, then the two diagonals.
    pub first_spring: usize,
    /// Current rest-length scale along the actuated axis.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftBodyState {
    pub pos: Vec<[f64; 2]>,
    pub vel: Vec<[f64; 2]>,
    pub springs: Vec<Spring>,
    pub voxels: Vec<Voxel>,
    /// Control steps taken so far.
    pub k: u64,
    slots: [[Option<usize>; GRID]; GRID],
    force: Vec<[i64; 2]>,
}

// Forces are accumulated in fixed point so that the sum over a mass's
// springs is independent of the order the springs are visited in. This
// makes a mirrored body evolve as the exact mirror image of the original.
const FORCE_SCALE: f64 = (1u64 << 32) as f64;

#[inline]
fn to_fixed(f: f64) -> i64 {
    (f * FORCE_SCALE) as i64
}

#[inline]
fn from_fixed(f: i64) -> f64 {
    f as f64 / FORCE_SCALE
}

/// Builds the mass-spring assembly of `body`, resting on `terrain` with the
/// horizontal centre of its bounding box at `spawn_x`.
pub fn assemble(body: &BodyGrid, cfg: &SimConfig, terrain: &Terrain, spawn_x: f64) -> Result<SoftBodyState, PhysicsError> {
    let cells: Vec<(usize, usize, VoxelType)> = body.occupied().collect();
    if cells.is_empty() {
        return Err(PhysicsError::SpawnCollision("empty body".into()));
    }
    let side = cfg.voxel_side;
    let col_min = cells.iter().map(|c| c.1).min().unwrap_or(0);
    let col_max = cells.iter().map(|c| c.1).max().unwrap_or(0);
    let row_max = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let center_col = (col_min + col_max + 1) as f64 / 2.0;

    let (tx0, tx1) = terrain.x_range();
    let left = spawn_x - (center_col - col_min as f64) * side;
    let right = spawn_x + (col_max as f64 + 1.0 - center_col) * side;
    if left < tx0 || right > tx1 {
        return Err(PhysicsError::SpawnCollision(format!(
            "footprint [{left}, {right}] outside terrain [{tx0}, {tx1}]"
        )));
    }

    // corner (r, c) for r, c in 0..=GRID, instantiated only when used
    let mut corner_index = [[usize::MAX; GRID + 1]; GRID + 1];
    for &(r, c, _) in &cells {
        for (cr, cc) in [(r, c), (r, c + 1), (r + 1, c + 1), (r + 1, c)] {
            corner_index[cr][cc] = 0;
        }
    }
    let mut rel = Vec::new();
    for (r, row) in corner_index.iter_mut().enumerate() {
        for (c, idx) in row.iter_mut().enumerate() {
            if *idx == 0 {
                *idx = rel.len();
                let x = spawn_x + (c as f64 - center_col) * side;
                let y = (row_max + 1 - r) as f64 * side;
                rel.push([x, y]);
            }
        }
    }
    let base = rel
        .iter()
        .map(|p| terrain.height(p[0]) - p[1])
        .fold(f64::NEG_INFINITY, f64::max);
    if !base.is_finite() {
        return Err(PhysicsError::SpawnCollision("terrain height is not finite under the body".into()));
    }
    let pos: Vec<[f64; 2]> = rel.iter().map(|p| [p[0], p[1] + base]).collect();

    let mut springs = Vec::with_capacity(6 * cells.len());
    let mut voxels = Vec::with_capacity(cells.len());
    let mut slots = [[None; GRID]; GRID];
    for &(r, c, kind) in &cells {
        let corners = [
            corner_index[r][c],
            corner_index[r][c + 1],
            corner_index[r + 1][c + 1],
            corner_index[r + 1][c],
        ];
        let k = if kind == VoxelType::Rigid { cfg.rigid_stiffness } else { cfg.soft_stiffness };
        let [tl, tr, br, bl] = corners;
        let diag = side * std::f64::consts::SQRT_2;
        let first_spring = springs.len();
        for (a, b, rest) in [(tl, tr, side), (bl, br, side), (tl, bl, side), (tr, br, side), (tl, br, diag), (tr, bl, diag)] {
            springs.push(Spring { a, b, rest, stiffness: k });
        }
        slots[r][c] = Some(voxels.len());
        voxels.push(Voxel { row: r, col: c, kind, corners, first_spring, scale: 1.0 });
    }
    let n = pos.len();
    Ok(SoftBodyState { vel: vec![[0.0; 2]; n], force: vec![[0; 2]; n], pos, springs, voxels, k: 0, slots })
}

/// Per-voxel sensor readings, `SENSOR_LEN` values per voxel in voxel order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorFrame {
    data: Vec<f64>,
}

impl SensorFrame {
    pub fn voxel_count(&self) -> usize {
        self.data.len() / SENSOR_LEN
    }

    pub fn voxel(&self, i: usize) -> &[f64] {
        &self.data[i * SENSOR_LEN..(i + 1) * SENSOR_LEN]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

// Sums are grouped as (top pair) + (bottom pair) so that swapping left and
// right corners yields bit-identical results.
fn corner_mean(v: &[[f64; 2]], [tl, tr, br, bl]: [usize; 4]) -> [f64; 2] {
    [
        ((v[tl][0] + v[tr][0]) + (v[br][0] + v[bl][0])) / 4.0,
        ((v[tl][1] + v[tr][1]) + (v[br][1] + v[bl][1])) / 4.0,
    ]
}

/// Area of a quad from the cross product of its diagonals; positive for
/// the clockwise (TL, TR, BR, BL) order of an undeformed voxel.
fn quad_area([tl, tr, br, bl]: [[f64; 2]; 4]) -> f64 {
    let d1 = [br[0] - tl[0], br[1] - tl[1]];
    let d2 = [tr[0] - bl[0], tr[1] - bl[1]];
    0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
}

impl SoftBodyState {
    pub fn mass_count(&self) -> usize {
        self.pos.len()
    }

    pub fn voxel_count(&self) -> usize {
        self.voxels.len()
    }

    pub fn center_of_mass(&self) -> [f64; 2] {
        let n = self.pos.len() as f64;
        let (sx, sy) = self.pos.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n, sy / n]
    }

    pub fn max_y(&self) -> f64 {
        self.pos.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_y(&self) -> f64 {
        self.pos.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min)
    }

    pub fn voxel_center(&self, i: usize) -> [f64; 2] {
        corner_mean(&self.pos, self.voxels[i].corners)
    }

    pub fn voxel_velocity(&self, i: usize) -> [f64; 2] {
        corner_mean(&self.vel, self.voxels[i].corners)
    }

    pub fn voxel_area(&self, i: usize) -> f64 {
        let c = self.voxels[i].corners;
        quad_area([self.pos[c[0]], self.pos[c[1]], self.pos[c[2]], self.pos[c[3]]])
    }

    /// Voxel index at grid cell `(row, col)`, if occupied.
    pub fn voxel_at(&self, row: i32, col: i32) -> Option<usize> {
        if (0..GRID as i32).contains(&row) && (0..GRID as i32).contains(&col) {
            self.slots[row as usize][col as usize]
        } else {
            None
        }
    }

    /// Kinetic + gravitational + elastic energy of the body.
    pub fn energy(&self, cfg: &SimConfig) -> f64 {
        let m = cfg.corner_mass;
        let mut e = 0.0;
        for (p, v) in self.pos.iter().zip(&self.vel) {
            e += 0.5 * m * (v[0] * v[0] + v[1] * v[1]) + m * cfg.gravity * p[1];
        }
        for s in &self.springs {
            let d = [self.pos[s.b][0] - self.pos[s.a][0], self.pos[s.b][1] - self.pos[s.a][1]];
            let stretch = (d[0] * d[0] + d[1] * d[1]).sqrt() - s.rest;
            e += 0.5 * s.stiffness * stretch * stretch;
        }
        e
    }

    fn apply_actuation(&mut self, actuation: &[f64], side: f64) {
        for (voxel, &target) in self.voxels.iter_mut().zip(actuation) {
            let horizontal = match voxel.kind {
                VoxelType::ActHorizontal => true,
                VoxelType::ActVertical => false,
                _ => continue,
            };
            let scale = if target.is_nan() { 1.0 } else { target.clamp(ACTUATION_MIN, ACTUATION_MAX) };
            voxel.scale = scale;
            let (w, h) = if horizontal { (scale * side, side) } else { (side, scale * side) };
            let s = voxel.first_spring;
            self.springs[s].rest = w;
            self.springs[s + 1].rest = w;
            self.springs[s + 2].rest = h;
            self.springs[s + 3].rest = h;
            let diag = (w * w + h * h).sqrt();
            self.springs[s + 4].rest = diag;
            self.springs[s + 5].rest = diag;
        }
    }

    /// Advances one control step. `actuation` holds one target per voxel
    /// (in voxel order); entries of non-actuated voxels are ignored.
    pub fn step(
        &mut self,
        actuation: &[f64],
        cfg: &SimConfig,
        terrain: &Terrain,
        mut payload: Option<&mut PayloadBox>,
    ) -> Result<(), PhysicsError> {
        if actuation.len() != self.voxels.len() {
            return Err(PhysicsError::ActuationShape { expected: self.voxels.len(), got: actuation.len() });
        }
        self.apply_actuation(actuation, cfg.voxel_side);
        for _ in 0..cfg.substeps {
            self.substep(cfg, terrain, payload.as_deref_mut());
        }
        self.k += 1;
        let finite = self.pos.iter().chain(&self.vel).all(|p| p[0].is_finite() && p[1].is_finite())
            && payload.as_deref().is_none_or(|b| b.pos.iter().chain(&b.vel).all(|v| v.is_finite()));
        if !finite {
            return Err(PhysicsError::NumericalBlowup { step: self.k });
        }
        Ok(())
    }

    fn substep(&mut self, cfg: &SimConfig, terrain: &Terrain, payload: Option<&mut PayloadBox>) {
        let m = cfg.corner_mass;
        let dt = cfg.dt;
        for f in self.force.iter_mut() {
            *f = [0, 0];
        }
        for s in &self.springs {
            let (pa, pb) = (self.pos[s.a], self.pos[s.b]);
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if len < 1e-12 {
                continue;
            }
            let u = [d[0] / len, d[1] / len];
            let (va, vb) = (self.vel[s.a], self.vel[s.b]);
            let closing = (vb[0] - va[0]) * u[0] + (vb[1] - va[1]) * u[1];
            let mag = s.stiffness * (len - s.rest) + cfg.damping * closing;
            let f = [to_fixed(mag * u[0]), to_fixed(mag * u[1])];
            self.force[s.a][0] += f[0];
            self.force[s.a][1] += f[1];
            self.force[s.b][0] -= f[0];
            self.force[s.b][1] -= f[1];
        }

        if let Some(bx) = payload {
            let mut on_box = [0i64; 2];
            let box_gamma = cfg.friction_viscosity(m.min(bx.mass));
            for i in 0..self.pos.len() {
                if let Some(f) = box_contact(bx, self.pos[i], self.vel[i], cfg, box_gamma) {
                    let f = [to_fixed(f[0]), to_fixed(f[1])];
                    self.force[i][0] += f[0];
                    self.force[i][1] += f[1];
                    on_box[0] -= f[0];
                    on_box[1] -= f[1];
                }
            }
            let mut box_force = [from_fixed(on_box[0]), from_fixed(on_box[1]) - bx.mass * cfg.gravity];
            let corner_gamma = cfg.friction_viscosity(0.5 * bx.mass);
            let ground = [
                ground_contact([bx.left(), bx.bottom()], bx.vel, cfg, terrain, corner_gamma),
                ground_contact([bx.right(), bx.bottom()], bx.vel, cfg, terrain, corner_gamma),
            ];
            // pairwise sum keeps the left/right corners interchangeable
            box_force[0] += ground[0][0] + ground[1][0];
            box_force[1] += ground[0][1] + ground[1][1];
            bx.vel[0] += box_force[0] / bx.mass * dt;
            bx.vel[1] += box_force[1] / bx.mass * dt;
            bx.pos[0] += bx.vel[0] * dt;
            bx.pos[1] += bx.vel[1] * dt;
        }

        let gamma = cfg.friction_viscosity(m);
        for i in 0..self.pos.len() {
            let contact = ground_contact(self.pos[i], self.vel[i], cfg, terrain, gamma);
            let f = [
                from_fixed(self.force[i][0]) + contact[0],
                from_fixed(self.force[i][1]) + contact[1] - m * cfg.gravity,
            ];
            self.vel[i][0] += f[0] / m * dt;
            self.vel[i][1] += f[1] / m * dt;
            self.pos[i][0] += self.vel[i][0] * dt;
            self.pos[i][1] += self.vel[i][1] * dt;
        }
    }

    /// Sensor frame for every voxel.
    pub fn observe(&self, payload: Option<&PayloadBox>, mask_distance: bool) -> SensorFrame {
        let mut frame = SensorFrame::default();
        self.observe_into(payload, mask_distance, &mut frame);
        frame
    }

    /// As [`observe`](Self::observe), reusing `frame`'s allocation.
    pub fn observe_into(&self, payload: Option<&PayloadBox>, mask_distance: bool, frame: &mut SensorFrame) {
        let n = self.voxels.len();
        frame.data.clear();
        frame.data.resize(n * SENSOR_LEN, 0.0);
        let per_voxel: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                let v = self.voxel_velocity(i);
                [v[0], v[1], self.voxel_area(i)]
            })
            .collect();
        let time = (self.k % TIME_PERIOD) as f64 / TIME_PERIOD as f64;
        for (i, voxel) in self.voxels.iter().enumerate() {
            let out = &mut frame.data[i * SENSOR_LEN..(i + 1) * SENSOR_LEN];
            let mut slot = 0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    if let Some(j) = self.voxel_at(voxel.row as i32 + dr, voxel.col as i32 + dc) {
                        out[slot..slot + 3].copy_from_slice(&per_voxel[j]);
                    }
                    slot += 3;
                }
            }
            if let (false, Some(bx)) = (mask_distance, payload) {
                let c = self.voxel_center(i);
                let q = bx.closest_point(c);
                out[DISTANCE_X_INPUT] = q[0] - c[0];
                out[DISTANCE_Y_INPUT] = q[1] - c[1];
            }
            out[TIME_INPUT] = time;
        }
    }
}

fn ground_contact(p: [f64; 2], v: [f64; 2], cfg: &SimConfig, terrain: &Terrain, gamma: f64) -> [f64; 2] {
    let (h, slope) = terrain.height_slope(p[0]);
    if p[1] >= h {
        return [0.0, 0.0];
    }
    let norm = (1.0 + slope * slope).sqrt();
    let n = [-slope / norm, 1.0 / norm];
    let t = [1.0 / norm, slope / norm];
    let depth = (h - p[1]) / norm;
    let vn = v[0] * n[0] + v[1] * n[1];
    let fn_mag = (cfg.contact_stiffness * depth - cfg.contact_damping * vn).max(0.0);
    let vt = v[0] * t[0] + v[1] * t[1];
    let limit = cfg.friction * fn_mag;
    let ft = -(gamma * vt).clamp(-limit, limit);
    [fn_mag * n[0] + ft * t[0], fn_mag * n[1] + ft * t[1]]
}

/// Force on a robot mass at `p` penetrating the box, if any.
fn box_contact(bx: &PayloadBox, p: [f64; 2], v: [f64; 2], cfg: &SimConfig, gamma: f64) -> Option<[f64; 2]> {
    if !bx.contains(p, 0.0) {
        return None;
    }
    let candidates = [
        (p[0] - bx.left(), [-1.0, 0.0]),
        (bx.right() - p[0], [1.0, 0.0]),
        (p[1] - bx.bottom(), [0.0, -1.0]),
        (bx.top() - p[1], [0.0, 1.0]),
    ];
    let (depth, n) = candidates
        .into_iter()
        .fold((f64::INFINITY, [0.0, 0.0]), |best, c| if c.0 < best.0 { c } else { best });
    let rel = [v[0] - bx.vel[0], v[1] - bx.vel[1]];
    let vn = rel[0] * n[0] + rel[1] * n[1];
    let fn_mag = (cfg.contact_stiffness * depth - cfg.contact_damping * vn).max(0.0);
    let t = [-n[1], n[0]];
    let vt = rel[0] * t[0] + rel[1] * t[1];
    let limit = cfg.friction * fn_mag;
    let ft = -(gamma * vt).clamp(-limit, limit);
    Some([fn_mag * n[0] + ft * t[0], fn_mag * n[1] + ft * t[1]])
}

/// One control step of a trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub k: u64,
    pub com_x: f64,
    pub com_y: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub payload_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub payload_y: Option<f64>,
    pub actuation: Vec<f64>,
}
