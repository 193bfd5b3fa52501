//! Strip segmentation and the offset/gradient steering law.
//!
//! Image conventions: x grows to the right, y grows downward, and the bottom
//! of a lower-camera frame is the floor closest to the robot. Angular
//! velocity is positive counter-clockwise (a left turn).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{binarize_fixed, label_components, BinaryImage, Image, Polarity};

/// Fraction of rows, counted from the bottom, used for the offset.
pub const OFFSET_BAND_FRACTION: f64 = 0.25;
/// Minimum foreground pixels in the offset band for a valid estimate.
pub const MIN_BAND_PIXELS: usize = 5;
/// Minimum rows with foreground for a valid line fit.
pub const MIN_FIT_ROWS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteeringError {
    #[error("gain {name} must be finite and non-negative, got {value}")]
    NegativeGain { name: &'static str, value: f64 },
    #[error("max_rate must be finite and positive, got {0}")]
    NonPositiveMaxRate(f64),
}

/// Where the strip sits in the frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEstimate {
    /// Near-field centroid displacement from the vertical centreline,
    /// normalised by half the width; positive means the strip is to the right.
    pub offset: f64,
    /// Angle of the strip axis from vertical in radians; positive when the
    /// strip leans right going up the frame.
    pub gradient: f64,
    pub valid: bool,
}

impl PathEstimate {
    pub const INVALID: PathEstimate = PathEstimate {
        offset: 0.0,
        gradient: 0.0,
        valid: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringGains {
    pub k_offset: f64,
    pub k_gradient: f64,
    /// Angular rate cap in rad/s.
    pub max_rate: f64,
}

impl SteeringGains {
    pub fn new(k_offset: f64, k_gradient: f64, max_rate: f64) -> Result<Self, SteeringError> {
        let g = Self {
            k_offset,
            k_gradient,
            max_rate,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), SteeringError> {
        for (name, value) in [("k_offset", self.k_offset), ("k_gradient", self.k_gradient)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(SteeringError::NegativeGain { name, value });
            }
        }
        if !(self.max_rate.is_finite() && self.max_rate > 0.0) {
            return Err(SteeringError::NonPositiveMaxRate(self.max_rate));
        }
        Ok(())
    }
}

impl Default for SteeringGains {
    /// Gradient outweighs offset when the two disagree.
    fn default() -> Self {
        Self {
            k_offset: 1.0,
            k_gradient: 1.5,
            max_rate: 1.2,
        }
    }
}

/// Default forward speed while following, m/s.
pub const DEFAULT_CRUISE_V: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SteeringCommand {
    /// m/s, never negative.
    pub linear_velocity: f64,
    /// rad/s, positive turns left.
    pub angular_velocity: f64,
}

impl SteeringCommand {
    pub const STOP: SteeringCommand = SteeringCommand {
        linear_velocity: 0.0,
        angular_velocity: 0.0,
    };

    pub fn rotate(rate: f64) -> Self {
        Self {
            linear_velocity: 0.0,
            angular_velocity: rate,
        }
    }
}

/// Bright-threshold the frame and keep only its largest component.
///
/// Equal-area ties go to the component that comes first in `(y_min, x_min)`
/// order.
pub fn extract_path_mask(img: &Image, threshold: u8) -> BinaryImage {
    let bin = binarize_fixed(img, threshold, Polarity::Bright);
    let labels = label_components(&bin);
    let largest = labels
        .blobs
        .iter()
        .fold(None::<&crate::imaging::Blob>, |best, b| match best {
            Some(cur) if cur.area >= b.area => Some(cur),
            _ => Some(b),
        });
    match largest {
        Some(blob) => labels.mask_of(blob.label),
        None => BinaryImage::empty(img.width(), img.height()),
    }
}

/// Offset from the bottom quarter of the frame, gradient from a least-squares
/// fit `x = a·y + b` through the per-row foreground centroids.
pub fn estimate_path(mask: &BinaryImage) -> PathEstimate {
    let (w, h) = (mask.width(), mask.height());
    let band_rows = ((h as f64 * OFFSET_BAND_FRACTION).ceil() as usize).max(1);
    let band_start = h - band_rows;

    let mut band_count = 0usize;
    let mut band_sum_x = 0u64;
    // (row y, centroid x) for each row with foreground
    let mut rows: Vec<(f64, f64)> = Vec::with_capacity(h);
    for y in 0..h {
        let mut n = 0usize;
        let mut sum_x = 0u64;
        for x in 0..w {
            if mask.get(x, y) {
                n += 1;
                sum_x += x as u64;
            }
        }
        if n == 0 {
            continue;
        }
        if y >= band_start {
            band_count += n;
            band_sum_x += sum_x;
        }
        rows.push((y as f64, sum_x as f64 / n as f64));
    }

    if band_count < MIN_BAND_PIXELS || rows.len() < MIN_FIT_ROWS {
        return PathEstimate::INVALID;
    }

    let half = (w as f64 - 1.0) / 2.0;
    let offset = if half > 0.0 {
        ((band_sum_x as f64 / band_count as f64 - half) / half).clamp(-1.0, 1.0)
    } else {
        0.0
    };

    let n = rows.len() as f64;
    let mean_y = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let mean_x = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let (mut syy, mut sxy) = (0.0, 0.0);
    for &(y, x) in &rows {
        syy += (y - mean_y) * (y - mean_y);
        sxy += (y - mean_y) * (x - mean_x);
    }
    let slope = sxy / syy;
    // y points down the frame, so leaning right going up means dx/dy < 0
    // `+ 0.0` turns a -0 from a vertical fit into 0
    let gradient = (-slope).atan() + 0.0;

    PathEstimate {
        offset,
        gradient,
        valid: true,
    }
}

/// Linear combination of offset and gradient, clamped to the rate cap.
/// A lost strip stops the robot.
pub fn steering(est: &PathEstimate, gains: &SteeringGains, cruise_v: f64) -> SteeringCommand {
    if !est.valid {
        return SteeringCommand::STOP;
    }
    let raw = 0.0 - (gains.k_offset * est.offset + gains.k_gradient * est.gradient);
    SteeringCommand {
        linear_velocity: cruise_v.max(0.0),
        angular_velocity: raw.clamp(-gains.max_rate, gains.max_rate),
    }
}
