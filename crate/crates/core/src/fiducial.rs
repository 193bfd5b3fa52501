//! Dot-pattern boards: one dot marks a left turn, three dots in a triangle a
//! right turn, four dots in a square the start or destination.
//!
//! Shape tests use scale-free distance ratios so no calibration is needed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::imaging::{binarize_fixed, connected_components, Blob, Image, Polarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FiducialPattern {
    LeftTurn,
    RightTurn,
    Terminal,
    Unknown,
    None,
}

impl FiducialPattern {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LeftTurn => "LeftTurn",
            Self::RightTurn => "RightTurn",
            Self::Terminal => "Terminal",
            Self::Unknown => "Unknown",
            Self::None => "None",
        }
    }

    /// Number of dots a board of this pattern carries, if fixed.
    pub fn dot_count(self) -> Option<usize> {
        match self {
            Self::LeftTurn => Some(1),
            Self::RightTurn => Some(3),
            Self::Terminal => Some(4),
            Self::None => Some(0),
            Self::Unknown => Option::None,
        }
    }
}

impl fmt::Display for FiducialPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FiducialPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "leftturn" | "left" => Ok(Self::LeftTurn),
            "rightturn" | "right" => Ok(Self::RightTurn),
            "terminal" => Ok(Self::Terminal),
            "unknown" => Ok(Self::Unknown),
            "none" => Ok(Self::None),
            _ => Err(format!("unknown pattern {s:?}")),
        }
    }
}

/// Thresholds for the upper-camera pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiducialConfig {
    /// Pixels below this are dot candidates; at or above it count as board.
    pub threshold: u8,
    pub min_area: usize,
    /// Relative tolerance of the square test.
    pub tol: f64,
    /// Bright-pixel fraction needed before a frame is treated as a board.
    pub min_board_fraction: f64,
}

impl Default for FiducialConfig {
    fn default() -> Self {
        Self {
            threshold: 128,
            min_area: 9,
            tol: 0.15,
            min_board_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiducialDetection {
    pub pattern: FiducialPattern,
    /// Dots behind the classification; empty when no board is in view.
    pub dots: Vec<Blob>,
    pub board_fraction: f64,
}

/// Triangle area over squared longest side below which three dots count as
/// collinear. An equilateral triangle scores about 0.433.
pub const TRIANGLE_DEGENERACY: f64 = 0.05;

/// Dark components that lie fully inside the frame.
pub fn detect_dots(img: &Image, threshold: u8, min_area: usize) -> Vec<Blob> {
    let bin = binarize_fixed(img, threshold, Polarity::Dark);
    connected_components(&bin, min_area)
        .into_iter()
        .filter(|b| !b.bbox.touches_border(img.width(), img.height()))
        .enumerate()
        .map(|(i, mut b)| {
            b.label = i as u32 + 1;
            b
        })
        .collect()
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol * target
}

fn is_triangle(c: &[(f64, f64)]) -> bool {
    let (a, b, p) = (c[0], c[1], c[2]);
    let area = 0.5 * ((b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1)).abs();
    let longest = dist(a, b).max(dist(b, p)).max(dist(a, p));
    longest > 0.0 && area / (longest * longest) > TRIANGLE_DEGENERACY
}

fn is_square(c: &[(f64, f64)], tol: f64) -> bool {
    let mut d = Vec::with_capacity(6);
    for i in 0..4 {
        for j in i + 1..4 {
            d.push(dist(c[i], c[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    let side = d[..4].iter().sum::<f64>() / 4.0;
    let diag = (d[4] + d[5]) / 2.0;
    side > 0.0
        && d[..4].iter().all(|&s| within(s, side, tol))
        && d[4..].iter().all(|&s| within(s, diag, tol))
        && within(diag / side, std::f64::consts::SQRT_2, tol)
}

/// Classify dot centroids by count and arrangement.
pub fn classify_centroids(centroids: &[(f64, f64)], tol: f64) -> FiducialPattern {
    match centroids.len() {
        0 => FiducialPattern::None,
        1 => FiducialPattern::LeftTurn,
        3 if is_triangle(centroids) => FiducialPattern::RightTurn,
        4 if is_square(centroids, tol) => FiducialPattern::Terminal,
        _ => FiducialPattern::Unknown,
    }
}

pub fn classify_pattern(dots: &[Blob], tol: f64) -> FiducialPattern {
    let centroids: Vec<_> = dots.iter().map(|b| b.centroid).collect();
    classify_centroids(&centroids, tol)
}

/// Fraction of pixels at or above `threshold`.
pub fn board_fraction(img: &Image, threshold: u8) -> f64 {
    let bright = img.pixels().iter().filter(|&&p| p >= threshold).count();
    bright as f64 / img.pixels().len() as f64
}

pub fn detect_fiducial(img: &Image, cfg: &FiducialConfig) -> FiducialDetection {
    let board_fraction = board_fraction(img, cfg.threshold);
    if board_fraction < cfg.min_board_fraction {
        return FiducialDetection {
            pattern: FiducialPattern::None,
            dots: Vec::new(),
            board_fraction,
        };
    }
    let dots = detect_dots(img, cfg.threshold, cfg.min_area);
    let pattern = classify_pattern(&dots, cfg.tol);
    FiducialDetection {
        pattern,
        dots,
        board_fraction,
    }
}
