//! Synthetic floor and board cameras.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::{point_segment_distance, World};
use super::{normalize_angle, Pose2D};
use crate::fiducial::FiducialPattern;
use crate::imaging::Image;

/// Half-angle of the upper camera's field of view.
pub const UPPER_FOV_HALF_ANGLE: f64 = PI / 6.0;
/// Dot radius as a fraction of the reference frame width.
pub const DOT_RADIUS_FRACTION: f64 = 0.06;
/// Pattern size as a fraction of the reference frame width.
pub const LAYOUT_FRACTION: f64 = 0.6;

/// Orthographic, downward-looking camera. Image up is robot forward.
///
/// The default patch is a shallow band just ahead of the robot. A taller
/// patch shows a perpendicular outgoing segment early enough that the
/// strip tracker starts rounding the corner before the turn board is in
/// range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerCamera {
    pub view_width_m: f64,
    pub view_height_m: f64,
    pub px_w: usize,
    pub px_h: usize,
    /// Distance from the robot origin to the centre of the viewed patch.
    pub forward_offset_m: f64,
}

impl Default for LowerCamera {
    fn default() -> Self {
        Self {
            view_width_m: 0.25,
            view_height_m: 0.05,
            px_w: 64,
            px_h: 64,
            forward_offset_m: 0.075,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperCamera {
    pub px_w: usize,
    pub px_h: usize,
}

impl Default for UpperCamera {
    fn default() -> Self {
        Self { px_w: 96, px_h: 96 }
    }
}

/// Adds rounded Gaussian noise, clamped to the 8-bit range. Draws nothing
/// from `rng` when `sigma` is zero.
pub fn add_noise<R: Rng + ?Sized>(img: &mut Image, sigma: f64, rng: &mut R) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
    for p in img.pixels_mut() {
        let v = f64::from(*p) + normal.sample(rng);
        *p = v.round().clamp(0.0, 255.0) as u8;
    }
}

pub fn render_lower<R: Rng + ?Sized>(
    world: &World,
    pose: &Pose2D,
    cam: &LowerCamera,
    rng: &mut R,
) -> Image {
    let (sin_h, cos_h) = pose.heading.sin_cos();
    let half_strip = world.strip_width / 2.0;
    let segments: Vec<([f64; 2], [f64; 2])> = world.path.windows(2).map(|s| (s[0], s[1])).collect();

    let mut img = Image::from_fn(cam.px_w, cam.px_h, |i, j| {
        let right = ((i as f64 + 0.5) / cam.px_w as f64 - 0.5) * cam.view_width_m;
        let forward =
            cam.forward_offset_m + (0.5 - (j as f64 + 0.5) / cam.px_h as f64) * cam.view_height_m;
        let wx = pose.x + forward * cos_h + right * sin_h;
        let wy = pose.y + forward * sin_h - right * cos_h;
        let on_strip = segments
            .iter()
            .any(|&(a, b)| point_segment_distance([wx, wy], a, b) <= half_strip);
        if on_strip {
            world.strip_intensity
        } else {
            world.floor_intensity
        }
    });
    add_noise(&mut img, world.noise_sigma, rng);
    img
}

/// Geometry of a rendered board face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardFace {
    pub px_w: usize,
    pub px_h: usize,
    /// Frame width that the dot radius and layout fractions refer to at
    /// `scale = 1`.
    pub reference_width: f64,
    pub scale: f64,
    /// Rotation of the pattern about the frame centre, radians.
    pub rotation: f64,
    pub background: u8,
    pub dot: u8,
}

/// Canonical dot centres in units of the reference width, relative to the
/// frame centre (x right, y down).
pub fn canonical_layout(pattern: FiducialPattern) -> Vec<(f64, f64)> {
    let r = LAYOUT_FRACTION / 2.0;
    match pattern {
        FiducialPattern::LeftTurn => vec![(0.0, 0.0)],
        FiducialPattern::RightTurn => [-90.0f64, 30.0, 150.0]
            .iter()
            .map(|deg| {
                let a = deg.to_radians();
                (r * a.cos(), r * a.sin())
            })
            .collect(),
        FiducialPattern::Terminal => vec![(-r, -r), (r, -r), (r, r), (-r, r)],
        FiducialPattern::Unknown | FiducialPattern::None => Vec::new(),
    }
}

/// Noise-free board face: bright background, dark filled circular dots.
pub fn render_board(pattern: FiducialPattern, face: &BoardFace) -> Image {
    let (s, c) = face.rotation.sin_cos();
    let unit = face.reference_width * face.scale;
    let (cx, cy) = (
        (face.px_w as f64 - 1.0) / 2.0,
        (face.px_h as f64 - 1.0) / 2.0,
    );
    let centres: Vec<(f64, f64)> = canonical_layout(pattern)
        .into_iter()
        .map(|(x, y)| (cx + unit * (c * x - s * y), cy + unit * (s * x + c * y)))
        .collect();
    let r2 = (DOT_RADIUS_FRACTION * unit).powi(2);
    Image::from_fn(face.px_w, face.px_h, |x, y| {
        let inside = centres.iter().any(|&(dx, dy)| {
            let (ex, ey) = (x as f64 - dx, y as f64 - dy);
            ex * ex + ey * ey <= r2
        });
        if inside {
            face.dot
        } else {
            face.background
        }
    })
}

/// Index of the nearest board within its trigger distance and inside the
/// upper camera's bearing cone. Equidistant boards resolve to the first one
/// listed.
pub fn visible_board(world: &World, pose: &Pose2D) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in world.boards.iter().enumerate() {
        let (dx, dy) = (b.pos[0] - pose.x, b.pos[1] - pose.y);
        let d = dx.hypot(dy);
        if d > b.trigger_m {
            continue;
        }
        let bearing = normalize_angle(dy.atan2(dx) - pose.heading);
        if bearing.abs() > UPPER_FOV_HALF_ANGLE {
            continue;
        }
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

pub fn render_upper<R: Rng + ?Sized>(
    world: &World,
    pose: &Pose2D,
    cam: &UpperCamera,
    rng: &mut R,
) -> Image {
    let mut img = match visible_board(world, pose) {
        Some(i) => {
            let board = &world.boards[i];
            // a robot looking straight at the face sees it unrotated
            let rotation = normalize_angle(pose.heading - (board.facing_rad + PI));
            render_board(
                board.pattern.into(),
                &BoardFace {
                    px_w: cam.px_w,
                    px_h: cam.px_h,
                    reference_width: cam.px_w as f64,
                    scale: 1.0,
                    rotation,
                    background: world.strip_intensity,
                    dot: world.floor_intensity,
                },
            )
        }
        None => Image::filled(cam.px_w, cam.px_h, world.floor_intensity),
    };
    add_noise(&mut img, world.noise_sigma, rng);
    img
}
