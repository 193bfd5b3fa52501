//! World description and its JSON form.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiducial::FiducialPattern;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("malformed world config at `{key}`: {message}")]
    Parse { key: String, message: String },
    #[error("invalid world config `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl WorldError {
    /// JSON path of the offending key.
    pub fn key(&self) -> &str {
        match self {
            Self::Parse { key, .. } | Self::Invalid { key, .. } => key,
        }
    }

    fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoardPattern {
    Left,
    Right,
    Terminal,
}

impl From<BoardPattern> for FiducialPattern {
    fn from(p: BoardPattern) -> Self {
        match p {
            BoardPattern::Left => FiducialPattern::LeftTurn,
            BoardPattern::Right => FiducialPattern::RightTurn,
            BoardPattern::Terminal => FiducialPattern::Terminal,
        }
    }
}

/// A marker board standing on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Board {
    pub pos: [f64; 2],
    /// Direction the printed face points, radians.
    pub facing_rad: f64,
    pub pattern: BoardPattern,
    /// The upper camera sees the board from at most this far, metres.
    pub trigger_m: f64,
}

/// Floor layout: a bright strip along a polyline plus marker boards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub path: Vec<[f64; 2]>,
    pub strip_width: f64,
    pub boards: Vec<Board>,
    pub floor_intensity: u8,
    pub strip_intensity: u8,
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn finite(key: &str, v: f64) -> Result<(), WorldError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(WorldError::invalid(key, "must be finite"))
    }
}

impl World {
    /// Parse and validate a JSON world description. Unknown top-level keys
    /// are ignored so configs can carry `_comment` entries.
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let world: World = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            WorldError::Parse {
                key,
                message: e.into_inner().to_string(),
            }
        })?;
        world.validate()?;
        Ok(world)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if self.path.len() < 2 {
            return Err(WorldError::invalid("path", "needs at least 2 waypoints"));
        }
        for (i, p) in self.path.iter().enumerate() {
            finite(&format!("path[{i}]"), p[0])?;
            finite(&format!("path[{i}]"), p[1])?;
        }
        let (a, b) = (self.path[0], self.path[1]);
        if a == b {
            return Err(WorldError::invalid(
                "path[1]",
                "first segment has zero length",
            ));
        }
        if !(self.strip_width.is_finite() && self.strip_width > 0.0) {
            return Err(WorldError::invalid("strip_width", "must be positive"));
        }
        if u16::from(self.strip_intensity) <= u16::from(self.floor_intensity) + 50 {
            return Err(WorldError::invalid(
                "strip_intensity",
                "must exceed floor_intensity by more than 50",
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(WorldError::invalid("noise_sigma", "must be non-negative"));
        }
        for (i, board) in self.boards.iter().enumerate() {
            finite(&format!("boards[{i}].pos"), board.pos[0])?;
            finite(&format!("boards[{i}].pos"), board.pos[1])?;
            finite(&format!("boards[{i}].facing_rad"), board.facing_rad)?;
            if !(board.trigger_m.is_finite() && board.trigger_m > 0.0) {
                return Err(WorldError::invalid(
                    format!("boards[{i}].trigger_m"),
                    "must be positive",
                ));
            }
        }
        Ok(())
    }

    /// Three 3 m segments joined by a right and then a left right-angle turn.
    ///
    /// The start board stands ahead and to the left of the first waypoint so
    /// it leaves the upper camera's field within the debounce window. Turn
    /// boards stand `trigger_m` beyond their corner, facing the approaching
    /// robot, so they come into range as the robot reaches the corner. The
    /// destination board is a little closer since the robot halts where the
    /// strip ends.
    pub fn two_turn_course() -> Self {
        let trigger = 0.5;
        World {
            path: vec![[0.0, 0.0], [3.0, 0.0], [3.0, -3.0], [6.0, -3.0]],
            strip_width: 0.1,
            boards: vec![
                Board {
                    pos: [0.4, 0.15],
                    facing_rad: PI,
                    pattern: BoardPattern::Terminal,
                    trigger_m: trigger,
                },
                Board {
                    pos: [3.0 + trigger, 0.0],
                    facing_rad: PI,
                    pattern: BoardPattern::Right,
                    trigger_m: trigger,
                },
                Board {
                    pos: [3.0, -3.0 - trigger],
                    facing_rad: FRAC_PI_2,
                    pattern: BoardPattern::Left,
                    trigger_m: trigger,
                },
                Board {
                    pos: [6.0 + 0.8 * trigger, -3.0],
                    facing_rad: PI,
                    pattern: BoardPattern::Terminal,
                    trigger_m: trigger,
                },
            ],
            floor_intensity: 40,
            strip_intensity: 220,
            noise_sigma: 4.0,
            seed: 7,
        }
    }

    /// Distance from `(x, y)` to the nearest point of the path polyline.
    pub fn distance_to_path(&self, x: f64, y: f64) -> f64 {
        self.path
            .windows(2)
            .map(|seg| point_segment_distance([x, y], seg[0], seg[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Heading of the first path segment.
    pub fn initial_heading(&self) -> f64 {
        let (a, b) = (self.path[0], self.path[1]);
        (b[1] - a[1]).atan2(b[0] - a[0])
    }
}

pub(crate) fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    (p[0] - cx).hypot(p[1] - cy)
}
