//! Task environments and their episode quality functions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{BrainParams, ControllerError, ControllerSpec, Mlp};
use crate::morphology::BodyGrid;
use crate::physics::{
    self, PayloadBox, PhysicsError, SensorFrame, SimConfig, SoftBodyState, Terrain, TrajectoryRecord,
    DISTANCE_X_INPUT, SENSOR_LEN,
};
use crate::seeding::{self, domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("unstable simulation: {0}")]
    UnstableSimulation(#[from] PhysicsError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("task {0} has no payload")]
    NoPayload(TaskId),
    #[error("unknown task {0:?} (expected simple, steps, carry or catch)")]
    UnknownTask(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskId {
    Simple,
    Steps,
    Carry,
    Catch,
}

impl TaskId {
    pub const ALL: [TaskId; 4] = [TaskId::Simple, TaskId::Steps, TaskId::Carry, TaskId::Catch];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::Simple => "simple",
            TaskId::Steps => "steps",
            TaskId::Carry => "carry",
            TaskId::Catch => "catch",
        }
    }

    /// Locomotion tasks run with the distance sensors zeroed.
    pub fn masks_distance(self) -> bool {
        matches!(self, TaskId::Simple | TaskId::Steps)
    }

    pub fn has_payload(self) -> bool {
        matches!(self, TaskId::Carry | TaskId::Catch)
    }

    /// Whether the same (body, brain) always scores the same.
    pub fn is_static(self) -> bool {
        self != TaskId::Catch
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskId {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| TaskError::UnknownTask(s.to_string()))
    }
}

/// Geometry and episode settings shared by the four tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskParams {
    pub episode_steps: u64,
    pub spawn_x: f64,
    pub terrain_min_x: f64,
    pub terrain_max_x: f64,
    pub step_rise: f64,
    pub step_run: f64,
    /// x at which the first step starts.
    pub step_start: f64,
    /// Horizontal extent of each riser (breakpoints must be strictly increasing).
    pub riser_width: f64,
    pub box_w: f64,
    pub box_h: f64,
    pub box_mass: f64,
    pub drop_height: f64,
    pub gap_max: f64,
    /// Contact tolerance of the "still carried" test.
    pub carry_tolerance: f64,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self {
            episode_steps: 500,
            spawn_x: 0.0,
            terrain_min_x: -100.0,
            terrain_max_x: 400.0,
            step_rise: 0.3,
            step_run: 3.0,
            step_start: 3.0,
            riser_width: 0.1,
            box_w: 2.0,
            box_h: 1.0,
            box_mass: 2.0,
            drop_height: 3.0,
            gap_max: 2.0,
            carry_tolerance: 0.05,
        }
    }
}

/// Terrain of a task: flat ground, or an ascending staircase for Steps.
pub fn build_terrain(task: TaskId, params: &TaskParams) -> Terrain {
    let (x0, x1) = (params.terrain_min_x, params.terrain_max_x);
    if task != TaskId::Steps {
        return Terrain::flat(0.0, x0, x1);
    }
    let mut pts = vec![(x0, 0.0)];
    let mut x = params.step_start;
    let mut h = 0.0;
    while x + params.riser_width < x1 {
        pts.push((x, h));
        h += params.step_rise;
        pts.push((x + params.riser_width, h));
        x += params.step_run;
    }
    pts.push((x1, h));
    Terrain::new(pts).expect("staircase breakpoints are increasing")
}

/// Initial payload for Carry/Catch given the freshly assembled body.
pub fn spawn_payload<R: Rng + ?Sized>(
    task: TaskId,
    state: &SoftBodyState,
    params: &TaskParams,
    sim: &SimConfig,
    rng: &mut R,
) -> Result<PayloadBox, TaskError> {
    let (w, h) = (params.box_w * sim.voxel_side, params.box_h * sim.voxel_side);
    let cx = params.spawn_x;
    match task {
        TaskId::Carry => {
            // highest robot point under the box footprint
            let top = state
                .pos
                .iter()
                .filter(|p| p[0] >= cx - 0.5 * w && p[0] <= cx + 0.5 * w)
                .map(|p| p[1])
                .fold(f64::NEG_INFINITY, f64::max);
            let top = if top.is_finite() { top } else { state.max_y() };
            Ok(PayloadBox { width: w, height: h, pos: [cx, top + 0.5 * h], vel: [0.0; 2], mass: params.box_mass })
        }
        TaskId::Catch => {
            let gap = if params.gap_max > 0.0 { rng.random_range(-params.gap_max..=params.gap_max) } else { 0.0 };
            let bottom = state.max_y() + params.drop_height * sim.voxel_side;
            Ok(PayloadBox {
                width: w,
                height: h,
                pos: [cx + gap * sim.voxel_side, bottom + 0.5 * h],
                vel: [0.0; 2],
                mass: params.box_mass,
            })
        }
        other => Err(TaskError::NoPayload(other)),
    }
}

/// Something that maps sensor frames to per-voxel actuation targets.
pub trait Policy {
    fn actuate(&mut self, k: u64, frame: &SensorFrame, out: &mut [f64]);
}

/// The shared-weight MLP applied to every voxel.
pub struct MlpPolicy<'a> {
    mlp: Mlp<'a>,
}

impl<'a> MlpPolicy<'a> {
    pub fn new(spec: ControllerSpec, theta: &'a BrainParams) -> Result<Self, ControllerError> {
        Ok(Self { mlp: Mlp::new(spec, theta)? })
    }
}

impl Policy for MlpPolicy<'_> {
    fn actuate(&mut self, _k: u64, frame: &SensorFrame, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.mlp.forward_unchecked(frame.voxel(i));
        }
    }
}

impl<F: FnMut(u64, &SensorFrame, &mut [f64])> Policy for F {
    fn actuate(&mut self, k: u64, frame: &SensorFrame, out: &mut [f64]) {
        self(k, frame, out)
    }
}

/// Scripted interventions, used to stage specific scenarios.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeScript {
    /// Overwrite the payload velocity right before control step `k`.
    pub payload_kick: Option<(u64, [f64; 2])>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub quality: f64,
    /// Whether the payload is still on the robot at the end (Carry/Catch).
    pub carried: bool,
    pub start_com: [f64; 2],
    pub end_com: [f64; 2],
    pub payload_start: Option<[f64; 2]>,
    pub payload_end: Option<[f64; 2]>,
}

/// A task bound to its physical and controller settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEnv {
    pub task: TaskId,
    pub params: TaskParams,
    pub sim: SimConfig,
    pub controller: ControllerSpec,
}

impl TaskEnv {
    pub fn new(task: TaskId) -> Self {
        Self { task, params: TaskParams::default(), sim: SimConfig::default(), controller: ControllerSpec::default() }
    }

    pub fn terrain(&self) -> Terrain {
        build_terrain(self.task, &self.params)
    }

    /// Quality of `body` driven by `theta`; pure in `(body, theta, seed)`.
    pub fn run_episode(&self, body: &BodyGrid, theta: &BrainParams, episode_seed: u64) -> Result<EpisodeResult, TaskError> {
        let mut policy = MlpPolicy::new(self.controller, theta)?;
        self.simulate(body, &mut policy, episode_seed, &EpisodeScript::default(), None)
    }

    /// Runs one episode under an arbitrary policy, optionally recording
    /// a per-step trajectory.
    pub fn simulate(
        &self,
        body: &BodyGrid,
        policy: &mut dyn Policy,
        episode_seed: u64,
        script: &EpisodeScript,
        mut trace: Option<&mut Vec<TrajectoryRecord>>,
    ) -> Result<EpisodeResult, TaskError> {
        let terrain = self.terrain();
        let mut state = physics::assemble(body, &self.sim, &terrain, self.params.spawn_x)?;
        let mut rng = seeding::stream(episode_seed, &[domain::EPISODE]);
        let mut payload = if self.task.has_payload() {
            Some(spawn_payload(self.task, &state, &self.params, &self.sim, &mut rng)?)
        } else {
            None
        };
        let start_com = state.center_of_mass();
        let payload_start = payload.map(|b| b.pos);
        let mask = self.task.masks_distance();
        let mut frame = SensorFrame::default();
        let mut actuation = vec![1.0; state.voxel_count()];
        for k in 0..self.params.episode_steps {
            if let (Some((at, vel)), Some(bx)) = (script.payload_kick, payload.as_mut()) {
                if at == k {
                    bx.vel = vel;
                }
            }
            state.observe_into(payload.as_ref(), mask, &mut frame);
            policy.actuate(state.k, &frame, &mut actuation);
            state.step(&actuation, &self.sim, &terrain, payload.as_mut())?;
            if let Some(trace) = trace.as_deref_mut() {
                let com = state.center_of_mass();
                trace.push(TrajectoryRecord {
                    k: state.k,
                    com_x: com[0],
                    com_y: com[1],
                    payload_x: payload.map(|b| b.pos[0]),
                    payload_y: payload.map(|b| b.pos[1]),
                    actuation: actuation.clone(),
                });
            }
        }
        let end_com = state.center_of_mass();
        let (quality, carried) = match payload {
            None => (end_com[0] - start_com[0], false),
            Some(bx) => {
                let carried = is_carried(&state, &bx, self.params.carry_tolerance * self.sim.voxel_side);
                let start = payload_start.expect("payload present from the start");
                if carried {
                    (bx.pos[0] - start[0], true)
                } else {
                    (-(end_com[0] - bx.pos[0]).abs(), false)
                }
            }
        };
        Ok(EpisodeResult { quality, carried, start_com, end_com, payload_start, payload_end: payload.map(|b| b.pos) })
    }
}

/// Box touches the robot and sits above the robot's centre of mass.
pub fn is_carried(state: &SoftBodyState, bx: &PayloadBox, tolerance: f64) -> bool {
    let touching = state.pos.iter().any(|&p| bx.contains(p, tolerance));
    touching && bx.pos[1] > state.center_of_mass()[1]
}

/// Convenience wrapper using default task settings.
pub fn run_episode(body: &BodyGrid, theta: &BrainParams, task: TaskId, episode_seed: u64) -> Result<EpisodeResult, TaskError> {
    TaskEnv::new(task).run_episode(body, theta, episode_seed)
}

/// Parameters of the left-right mirrored controller: fed the sensor frames
/// of the mirrored body, it produces the same actuation per mirrored voxel.
pub fn mirror_params(spec: &ControllerSpec, theta: &BrainParams) -> BrainParams {
    assert_eq!(spec.n_inputs, SENSOR_LEN, "mirroring needs the standard sensor layout");
    let n = spec.n_inputs;
    let mut out = theta.clone();
    for h in 0..spec.n_hidden {
        let row = &theta[h * n..(h + 1) * n];
        let dst = &mut out[h * n..(h + 1) * n];
        for dr in 0..3 {
            for dc in 0..3 {
                let to = 3 * (dr * 3 + dc);
                let from = 3 * (dr * 3 + (2 - dc));
                dst[to] = -row[from];
                dst[to + 1] = row[from + 1];
                dst[to + 2] = row[from + 2];
            }
        }
        dst[DISTANCE_X_INPUT] = -row[DISTANCE_X_INPUT];
    }
    out
}
