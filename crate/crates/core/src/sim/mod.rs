//! Deterministic closed-loop simulation: a unicycle robot on a 2D floor,
//! two synthetic cameras, and the controller in between.
//!
//! All randomness comes from one ChaCha stream seeded per episode and
//! consumed in frame order (lower frame, then upper frame), so a world,
//! configuration and seed fix the whole trajectory.

mod render;
mod world;

pub use render::{
    add_noise, canonical_layout, render_board, render_lower, render_upper, visible_board,
    BoardFace, LowerCamera, UpperCamera, DOT_RADIUS_FRACTION, LAYOUT_FRACTION,
    UPPER_FOV_HALF_ANGLE,
};
pub use world::{Board, BoardPattern, World, WorldError};

use std::f64::consts::{PI, TAU};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{Controller, ControllerConfig, ControllerError, StopReason};
use crate::imaging::{save_pnm, Image};
use crate::path_tracker::SteeringCommand;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    /// Radians in `(-π, π]`, counter-clockwise from +x.
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }
}

/// Unicycle update: rotate first, then translate along the new heading.
pub fn advance(pose: &Pose2D, cmd: &SteeringCommand, dt: f64) -> Pose2D {
    let heading = normalize_angle(pose.heading + cmd.angular_velocity * dt);
    let (s, c) = heading.sin_cos();
    Pose2D {
        x: pose.x + cmd.linear_velocity * c * dt,
        y: pose.y + cmd.linear_velocity * s * dt,
        heading,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub controller: ControllerConfig,
    pub lower: LowerCamera,
    pub upper: UpperCamera,
    pub dt: f64,
    pub max_steps: usize,
    pub seed: u64,
    /// Keep every n-th pose in the report trajectory; 0 disables it.
    pub trajectory_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            controller: ControllerConfig::default(),
            lower: LowerCamera::default(),
            upper: UpperCamera::default(),
            dt: 0.05,
            max_steps: 5000,
            seed: 0,
            trajectory_stride: 0,
        }
    }
}

impl SimConfig {
    /// Defaults with the seed taken from the world description.
    pub fn for_world(world: &World) -> Self {
        Self {
            seed: world.seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    ReachedDestination,
    LostPath,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub outcome: Outcome,
    pub steps: usize,
    pub final_pose: Pose2D,
    pub max_cross_track_error: f64,
    pub terminals_seen: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<Pose2D>,
}

impl EpisodeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything the loop saw and did at one step.
pub struct StepFrames<'a> {
    pub step: usize,
    pub pose: &'a Pose2D,
    pub lower: &'a Image,
    pub upper: &'a Image,
}

pub fn run_episode(world: &World, cfg: &SimConfig) -> Result<EpisodeReport, ControllerError> {
    run_episode_with(world, cfg, |_| Ok::<(), std::convert::Infallible>(())).map_err(|e| match e {
        EpisodeError::Controller(c) => c,
        EpisodeError::Observer(never) => match never {},
    })
}

#[derive(Debug, thiserror::Error)]
pub enum EpisodeError<E> {
    #[error(transparent)]
    Controller(ControllerError),
    #[error("frame observer failed: {0}")]
    Observer(E),
}

/// Runs the loop `render → controller.step → advance` until the controller
/// stops or `max_steps` is reached, handing every frame pair to `observer`.
pub fn run_episode_with<E, F>(
    world: &World,
    cfg: &SimConfig,
    mut observer: F,
) -> Result<EpisodeReport, EpisodeError<E>>
where
    F: FnMut(&StepFrames<'_>) -> Result<(), E>,
{
    let mut controller = Controller::new(cfg.controller).map_err(EpisodeError::Controller)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = world.path[0];
    let mut pose = Pose2D::new(start[0], start[1], world.initial_heading());
    let mut max_xte = world.distance_to_path(pose.x, pose.y);
    let mut trajectory = Vec::new();
    if cfg.trajectory_stride > 0 {
        trajectory.push(pose);
    }

    let mut steps = 0;
    while steps < cfg.max_steps && !controller.is_stopped() {
        let lower = render_lower(world, &pose, &cfg.lower, &mut rng);
        let upper = render_upper(world, &pose, &cfg.upper, &mut rng);
        observer(&StepFrames {
            step: steps,
            pose: &pose,
            lower: &lower,
            upper: &upper,
        })
        .map_err(EpisodeError::Observer)?;

        let cmd = controller.step(&lower, &upper, cfg.dt);
        pose = advance(&pose, &cmd, cfg.dt);
        steps += 1;
        max_xte = max_xte.max(world.distance_to_path(pose.x, pose.y));
        if cfg.trajectory_stride > 0 && steps % cfg.trajectory_stride == 0 {
            trajectory.push(pose);
        }
    }

    let outcome = match controller.stop_reason() {
        Some(StopReason::Destination) => Outcome::ReachedDestination,
        Some(StopReason::LostPath) => Outcome::LostPath,
        None => Outcome::Timeout,
    };
    Ok(EpisodeReport {
        outcome,
        steps,
        final_pose: pose,
        max_cross_track_error: max_xte,
        terminals_seen: controller.terminals_seen(),
        trajectory,
    })
}

/// Writes `lower_%06d.pgm` and `upper_%06d.pgm` into a directory.
pub struct FrameDump {
    dir: PathBuf,
}

impl FrameDump {
    pub fn create(dir: impl AsRef<Path>) -> io::Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn write(&self, frames: &StepFrames<'_>) -> io::Result<()> {
        fs::write(
            self.dir.join(format!("lower_{:06}.pgm", frames.step)),
            save_pnm(frames.lower),
        )?;
        fs::write(
            self.dir.join(format!("upper_{:06}.pgm", frames.step)),
            save_pnm(frames.upper),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn angle_wrapping() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * FRAC_PI_2) + FRAC_PI_2).abs() < 1e-12);
        assert!((normalize_angle(7.0) - (7.0 - TAU)).abs() < 1e-12);
    }

    #[test]
    fn kinematics_examples() {
        let p = Pose2D::new(1.0, 2.0, 0.3);
        assert_eq!(advance(&p, &SteeringCommand::STOP, 0.5), p);

        let straight = SteeringCommand {
            linear_velocity: 1.0,
            angular_velocity: 0.0,
        };
        let q = advance(&Pose2D::new(0.0, 0.0, 0.0), &straight, 1.0);
        assert_eq!((q.x, q.y, q.heading), (1.0, 0.0, 0.0));

        let spin = SteeringCommand::rotate(PI);
        let r = advance(&Pose2D::new(0.0, 0.0, FRAC_PI_2), &spin, 1.0);
        assert!((r.heading + FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn boardless_world_never_arrives() {
        let mut world = World::two_turn_course();
        world.boards.clear();
        let cfg = SimConfig {
            max_steps: 1200,
            ..SimConfig::for_world(&world)
        };
        let report = run_episode(&world, &cfg).unwrap();
        assert_ne!(report.outcome, Outcome::ReachedDestination);
        assert_eq!(report.terminals_seen, 0);
    }
}
