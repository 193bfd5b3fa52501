//! Marker surveying: recover each disc's 3D position from its 2D detections
//! in frames with known projection matrices.
//!
//! Every disc is solved independently, so non-planar (curled, bent) boards
//! are handled without any shape prior. Each solve is a linear homogeneous
//! triangulation followed by damped Gauss-Newton on the summed squared
//! reprojection error.

mod io;

pub use io::{read_cameras, read_observations, write_results, CsvError};

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, Matrix2x3, Matrix3, Matrix3x4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `|w|` at or below this is treated as a point on the camera plane.
pub const PROJECTION_EPS: f64 = 1e-12;
/// Homogeneous scale below which a triangulated point is at infinity.
pub const INFINITY_EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurveyError {
    #[error("point projects onto the camera plane (w = {w:e})")]
    ProjectionSingular { w: f64 },
    #[error("need observations in at least 2 distinct frames, got {distinct_frames}")]
    Underdetermined { distinct_frames: usize },
    #[error("all observing cameras are identical")]
    IdenticalCameras,
    #[error("triangulated point is at infinity")]
    PointAtInfinity,
    #[error("no camera for frame {0}")]
    MissingCamera(u32),
    #[error("camera left 3x3 block is singular")]
    SingularCamera,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("reprojection error became non-finite; last good point {last_good:?} with error {last_error}")]
    Numeric { last_good: Point3D, last_error: f64 },
    #[error("no disc records to survey")]
    EmptyInput,
    #[error("disc {marker_id}/{disc_id} appears more than once")]
    DuplicateDisc { marker_id: String, disc_id: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &Point3D) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    fn homogeneous(self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.z, 1.0)
    }
}

/// Finite 3x4 projection matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraMatrix(Matrix3x4<f64>);

impl CameraMatrix {
    pub fn new(p: Matrix3x4<f64>) -> Result<Self, SurveyError> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(SurveyError::NonFinite);
        }
        let left: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into_owned();
        if left.determinant() == 0.0 {
            return Err(SurveyError::SingularCamera);
        }
        Ok(Self(p))
    }

    /// From 12 row-major entries `p11, p12, ..., p34`.
    pub fn from_row_slice(entries: &[f64; 12]) -> Result<Self, SurveyError> {
        Self::new(Matrix3x4::from_row_slice(entries))
    }

    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.0
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self, SurveyError> {
        Self::new(self.0 * lambda)
    }
}

/// One detection of a disc: image position `(x, y)` in frame `frame`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscRecord {
    pub marker_id: String,
    /// 0..=3 within its marker.
    pub disc_id: u8,
    pub observations: Vec<Observation>,
}

pub type CameraSet = BTreeMap<u32, CameraMatrix>;

fn camera_for(cams: &CameraSet, frame: u32) -> Result<&CameraMatrix, SurveyError> {
    cams.get(&frame).ok_or(SurveyError::MissingCamera(frame))
}

/// Perspective projection of `pt` through `cam`: `(u/w, v/w)` where
/// `(u, v, w) = P · (x, y, z, 1)`.
pub fn project(cam: &CameraMatrix, pt: Point3D) -> Result<(f64, f64), SurveyError> {
    let h = cam.0 * pt.homogeneous();
    if h.z.abs() <= PROJECTION_EPS {
        return Err(SurveyError::ProjectionSingular { w: h.z });
    }
    Ok((h.x / h.z, h.y / h.z))
}

/// Projection together with its 2x3 Jacobian with respect to the point.
///
/// With `x = u/w`, `∂x/∂X_j = (P_1j − x·P_3j) / w`, and likewise for `y`.
pub fn project_with_jacobian(
    cam: &CameraMatrix,
    pt: Point3D,
) -> Result<((f64, f64), Matrix2x3<f64>), SurveyError> {
    let p = &cam.0;
    let h = p * pt.homogeneous();
    let w = h.z;
    if w.abs() <= PROJECTION_EPS {
        return Err(SurveyError::ProjectionSingular { w });
    }
    let (x, y) = (h.x / w, h.y / w);
    let mut jac = Matrix2x3::zeros();
    for j in 0..3 {
        jac[(0, j)] = (p[(0, j)] - x * p[(2, j)]) / w;
        jac[(1, j)] = (p[(1, j)] - y * p[(2, j)]) / w;
    }
    Ok(((x, y), jac))
}

/// Sum of squared pixel distances between observations and projections.
pub fn reprojection_error(
    pt: Point3D,
    obs: &[Observation],
    cams: &CameraSet,
) -> Result<f64, SurveyError> {
    let mut total = 0.0;
    for o in obs {
        let (px, py) = project(camera_for(cams, o.frame)?, pt)?;
        let (dx, dy) = (px - o.x, py - o.y);
        total += dx * dx + dy * dy;
    }
    Ok(total)
}

/// Linear triangulation from two or more views.
///
/// Each observation contributes `x·(P3·X) − P1·X = 0` and
/// `y·(P3·X) − P2·X = 0`, scaled by `1 / max(|x|, |y|, 1)`. The homogeneous
/// solution is the right singular vector of the smallest singular value.
pub fn dlt_triangulate(obs: &[Observation], cams: &CameraSet) -> Result<Point3D, SurveyError> {
    if obs.iter().any(|o| !(o.x.is_finite() && o.y.is_finite())) {
        return Err(SurveyError::NonFinite);
    }
    let frames: BTreeSet<u32> = obs.iter().map(|o| o.frame).collect();
    if frames.len() < 2 {
        return Err(SurveyError::Underdetermined {
            distinct_frames: frames.len(),
        });
    }
    let used: Vec<&CameraMatrix> = frames
        .iter()
        .map(|&f| camera_for(cams, f))
        .collect::<Result<_, _>>()?;
    if used.windows(2).all(|w| w[0] == w[1]) {
        return Err(SurveyError::IdenticalCameras);
    }

    let mut a = DMatrix::<f64>::zeros(2 * obs.len(), 4);
    for (i, o) in obs.iter().enumerate() {
        let p = camera_for(cams, o.frame)?.matrix();
        let s = 1.0 / o.x.abs().max(o.y.abs()).max(1.0);
        for j in 0..4 {
            a[(2 * i, j)] = s * (o.x * p[(2, j)] - p[(0, j)]);
            a[(2 * i + 1, j)] = s * (o.y * p[(2, j)] - p[(1, j)]);
        }
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t was requested");
    let (best, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("four singular values");
    let row = v_t.row(best);
    let norm = row.norm();
    let hom = Vector4::new(row[0], row[1], row[2], row[3]) / norm;
    if hom.w.abs() < INFINITY_EPS {
        return Err(SurveyError::PointAtInfinity);
    }
    Ok(Point3D::new(hom.x / hom.w, hom.y / hom.w, hom.z / hom.w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub max_iters: usize,
    /// Stop once an accepted step improves the error by less than this
    /// fraction.
    pub rel_tol: f64,
    pub initial_damping: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub point: Point3D,
    pub error: f64,
    pub initial_error: f64,
    pub iterations: usize,
}

const MAX_DAMPING: f64 = 1e16;

/// Levenberg-Marquardt on the reprojection error. Damping scales the
/// diagonal of the normal matrix; it grows ×10 after a rejected step and
/// shrinks ÷10 after an accepted one. Only error-decreasing steps are taken,
/// so the returned error never exceeds the initial one.
pub fn refine_triangulation(
    init: Point3D,
    obs: &[Observation],
    cams: &CameraSet,
    opts: &RefineOptions,
) -> Result<Refinement, SurveyError> {
    let initial_error = reprojection_error(init, obs, cams)?;
    if !initial_error.is_finite() {
        return Err(SurveyError::NonFinite);
    }
    let mut point = init;
    let mut error = initial_error;
    let mut damping = opts.initial_damping;
    let mut iterations = 0;

    while iterations < opts.max_iters && error > 0.0 {
        iterations += 1;

        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for o in obs {
            let ((px, py), jac) = project_with_jacobian(camera_for(cams, o.frame)?, point)?;
            let r = nalgebra::Vector2::new(px - o.x, py - o.y);
            jtj += jac.transpose() * jac;
            jtr += jac.transpose() * r;
        }

        let mut lhs = jtj;
        for k in 0..3 {
            lhs[(k, k)] += damping * jtj[(k, k)].max(f64::MIN_POSITIVE);
        }
        let Some(step) = lhs.cholesky().map(|c| c.solve(&(-jtr))) else {
            damping *= 10.0;
            if damping > MAX_DAMPING {
                break;
            }
            continue;
        };

        let trial = Point3D::from_vector(&(point.to_vector() + step));
        let trial_error = match reprojection_error(trial, obs, cams) {
            Ok(e) => e,
            Err(SurveyError::ProjectionSingular { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if trial_error.is_nan() || !step.iter().all(|v| v.is_finite()) {
            return Err(SurveyError::Numeric {
                last_good: point,
                last_error: error,
            });
        }

        if trial_error < error {
            let improvement = (error - trial_error) / error;
            point = trial;
            error = trial_error;
            damping /= 10.0;
            if improvement < opts.rel_tol {
                break;
            }
        } else {
            damping *= 10.0;
            if damping > MAX_DAMPING {
                break;
            }
        }
    }

    Ok(Refinement {
        point,
        error,
        initial_error,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiscKey {
    pub marker_id: String,
    pub disc_id: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurveyedDisc {
    pub point: Point3D,
    pub reprojection_error: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedDisc {
    pub key: DiscKey,
    pub n_obs: usize,
    pub reason: SurveyError,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurveyResult {
    pub discs: BTreeMap<DiscKey, SurveyedDisc>,
    pub skipped: Vec<SkippedDisc>,
}

fn survey_disc(record: &DiscRecord, cams: &CameraSet) -> Result<SurveyedDisc, SurveyError> {
    let init = dlt_triangulate(&record.observations, cams)?;
    let refined =
        refine_triangulation(init, &record.observations, cams, &RefineOptions::default())?;
    Ok(SurveyedDisc {
        point: refined.point,
        reprojection_error: refined.error,
        n_obs: record.observations.len(),
    })
}

/// Triangulate and refine every disc independently. Discs that cannot be
/// solved are listed in `skipped` with the reason.
pub fn survey_markers(
    records: &[DiscRecord],
    cams: &CameraSet,
) -> Result<SurveyResult, SurveyError> {
    if records.is_empty() {
        return Err(SurveyError::EmptyInput);
    }
    let mut result = SurveyResult::default();
    let mut seen = BTreeSet::new();
    for record in records {
        let key = DiscKey {
            marker_id: record.marker_id.clone(),
            disc_id: record.disc_id,
        };
        if !seen.insert(key.clone()) {
            return Err(SurveyError::DuplicateDisc {
                marker_id: key.marker_id,
                disc_id: key.disc_id,
            });
        }
        match survey_disc(record, cams) {
            Ok(disc) => {
                result.discs.insert(key, disc);
            }
            Err(reason) => result.skipped.push(SkippedDisc {
                key,
                n_obs: record.observations.len(),
                reason,
            }),
        }
    }
    Ok(result)
}
