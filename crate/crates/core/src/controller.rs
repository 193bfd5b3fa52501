//! Follow / turn / reacquire / stop state machine.
//!
//! While following, the upper frame is checked for boards. A one-dot board
//! starts an open-loop left quarter turn, a triangle a right one. The first
//! square board is the start marker; the second stops the robot at the
//! destination. After a turn the robot keeps rotating until the strip is
//! back near the centre of the lower frame.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiducial::{detect_fiducial, FiducialConfig, FiducialPattern};
use crate::imaging::Image;
use crate::path_tracker::{
    estimate_path, extract_path_mask, steering, PathEstimate, SteeringCommand, SteeringError,
    SteeringGains, DEFAULT_CRUISE_V,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error(transparent)]
    Gains(#[from] SteeringError),
    #[error("turn_rate must be finite and positive, got {0}")]
    TurnRate(f64),
    #[error("cruise velocity must be finite and non-negative, got {0}")]
    CruiseVelocity(f64),
    #[error("{name} must be finite and positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TurnDirection {
    Left,
    Right,
}

impl TurnDirection {
    /// Sign of the angular velocity for this direction (left is positive).
    pub fn sign(self) -> f64 {
        match self {
            Self::Left => 1.0,
            Self::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    Destination,
    LostPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    Following,
    Turning {
        direction: TurnDirection,
        turned_angle: f64,
    },
    Reacquiring {
        direction: TurnDirection,
        elapsed: f64,
    },
    Stopped(StopReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub gains: SteeringGains,
    pub cruise_v: f64,
    /// Angular rate used for turns and reacquisition, rad/s.
    pub turn_rate: f64,
    /// Frames after a board event during which boards are ignored.
    pub cooldown_frames: u32,
    pub path_threshold: u8,
    pub fiducial: FiducialConfig,
    /// Reacquisition succeeds once `|offset|` drops below this.
    pub reacquire_offset: f64,
    /// Seconds of reacquisition before giving up.
    pub lost_timeout: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            gains: SteeringGains::default(),
            cruise_v: DEFAULT_CRUISE_V,
            turn_rate: 1.0,
            cooldown_frames: 30,
            path_threshold: 128,
            fiducial: FiducialConfig::default(),
            reacquire_offset: 0.3,
            lost_timeout: 5.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        self.gains.validate()?;
        if !(self.turn_rate.is_finite() && self.turn_rate > 0.0) {
            return Err(ControllerError::TurnRate(self.turn_rate));
        }
        if !(self.cruise_v.is_finite() && self.cruise_v >= 0.0) {
            return Err(ControllerError::CruiseVelocity(self.cruise_v));
        }
        for (name, value) in [
            ("reacquire_offset", self.reacquire_offset),
            ("lost_timeout", self.lost_timeout),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ControllerError::NonPositive { name, value });
            }
        }
        Ok(())
    }
}

/// Controller state. `step` is the only mutator.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    config: ControllerConfig,
    mode: Mode,
    terminals_seen: u32,
    cooldown_remaining: u32,
}

impl Controller {
    pub fn new(config: ControllerConfig) -> Result<Self, ControllerError> {
        config.validate()?;
        Ok(Self {
            config,
            mode: Mode::Following,
            terminals_seen: 0,
            cooldown_remaining: 0,
        })
    }

    /// Default thresholds with the given gains, turn rate and debounce.
    pub fn with_gains(
        gains: SteeringGains,
        turn_rate: f64,
        cooldown_frames: u32,
    ) -> Result<Self, ControllerError> {
        Self::new(ControllerConfig {
            gains,
            turn_rate,
            cooldown_frames,
            ..ControllerConfig::default()
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn terminals_seen(&self) -> u32 {
        self.terminals_seen
    }

    pub fn cooldown_remaining(&self) -> u32 {
        self.cooldown_remaining
    }

    pub fn is_stopped(&self) -> bool {
        matches!(self.mode, Mode::Stopped(_))
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        match self.mode {
            Mode::Stopped(r) => Some(r),
            _ => None,
        }
    }

    fn track(&self, lower: &Image) -> (PathEstimate, SteeringCommand) {
        let mask = extract_path_mask(lower, self.config.path_threshold);
        let est = estimate_path(&mask);
        let cmd = steering(&est, &self.config.gains, self.config.cruise_v);
        (est, cmd)
    }

    /// Advance one frame pair taken `dt` seconds after the previous one.
    ///
    /// # Panics
    /// Panics if `dt` is not positive.
    pub fn step(&mut self, lower: &Image, upper: &Image, dt: f64) -> SteeringCommand {
        assert!(dt > 0.0, "dt must be positive, got {dt}");
        match self.mode {
            Mode::Stopped(_) => SteeringCommand::STOP,
            Mode::Following => self.follow(lower, upper),
            Mode::Turning {
                direction,
                turned_angle,
            } => {
                let turned_angle = turned_angle + self.config.turn_rate * dt;
                self.mode = if turned_angle >= FRAC_PI_2 {
                    Mode::Reacquiring {
                        direction,
                        elapsed: 0.0,
                    }
                } else {
                    Mode::Turning {
                        direction,
                        turned_angle,
                    }
                };
                SteeringCommand::rotate(direction.sign() * self.config.turn_rate)
            }
            Mode::Reacquiring { direction, elapsed } => {
                let (est, cmd) = self.track(lower);
                if est.valid && est.offset.abs() < self.config.reacquire_offset {
                    self.mode = Mode::Following;
                    return cmd;
                }
                let elapsed = elapsed + dt;
                if elapsed > self.config.lost_timeout {
                    self.mode = Mode::Stopped(StopReason::LostPath);
                    return SteeringCommand::STOP;
                }
                self.mode = Mode::Reacquiring { direction, elapsed };
                SteeringCommand::rotate(direction.sign() * self.config.turn_rate)
            }
        }
    }

    fn follow(&mut self, lower: &Image, upper: &Image) -> SteeringCommand {
        if self.cooldown_remaining > 0 {
            self.cooldown_remaining -= 1;
        } else {
            let det = detect_fiducial(upper, &self.config.fiducial);
            match det.pattern {
                FiducialPattern::LeftTurn | FiducialPattern::RightTurn => {
                    let direction = if det.pattern == FiducialPattern::LeftTurn {
                        TurnDirection::Left
                    } else {
                        TurnDirection::Right
                    };
                    self.mode = Mode::Turning {
                        direction,
                        turned_angle: 0.0,
                    };
                    self.cooldown_remaining = self.config.cooldown_frames;
                    return SteeringCommand::STOP;
                }
                FiducialPattern::Terminal => {
                    self.terminals_seen += 1;
                    if self.terminals_seen >= 2 {
                        self.mode = Mode::Stopped(StopReason::Destination);
                        return SteeringCommand::STOP;
                    }
                    self.cooldown_remaining = self.config.cooldown_frames;
                }
                FiducialPattern::Unknown | FiducialPattern::None => {}
            }
        }
        self.track(lower).1
    }
}
