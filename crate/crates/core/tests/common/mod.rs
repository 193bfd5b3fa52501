//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hfmt_core::imaging::BoundingBox;
use hfmt_core::survey::{project, CameraSet, Observation};
use hfmt_core::{BinaryImage, CameraMatrix, Point3D};
use nalgebra::{Matrix3, Matrix3x4, Vector3};
use rand::Rng;

/// Component statistics as computed by the stack-based flood fill below.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBlob {
    pub area: usize,
    pub centroid: (f64, f64),
    pub bbox: BoundingBox,
    pub first: usize,
}

/// 8-connected components by explicit-stack flood fill from every unvisited
/// foreground pixel in raster order.
pub fn flood_fill(mask: &BinaryImage, min_area: usize) -> Vec<OracleBlob> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if seen[start] || !mask.mask()[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let (mut area, mut sx, mut sy) = (0usize, 0u64, 0u64);
        let mut bbox = BoundingBox {
            x_min: usize::MAX,
            y_min: usize::MAX,
            x_max: 0,
            y_max: 0,
        };
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            area += 1;
            sx += x as u64;
            sy += y as u64;
            bbox.x_min = bbox.x_min.min(x);
            bbox.y_min = bbox.y_min.min(y);
            bbox.x_max = bbox.x_max.max(x);
            bbox.y_max = bbox.y_max.max(y);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let n = ny as usize * w + nx as usize;
                    if mask.mask()[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        if area >= min_area {
            out.push(OracleBlob {
                area,
                centroid: (sx as f64 / area as f64, sy as f64 / area as f64),
                bbox,
                first: start,
            });
        }
    }
    out.sort_by_key(|b| (b.bbox.y_min, b.bbox.x_min, b.first));
    out
}

pub fn random_mask<R: Rng>(rng: &mut R, w: usize, h: usize, density: f64) -> BinaryImage {
    BinaryImage::from_fn(w, h, |_, _| rng.random_bool(density))
}

/// `K [R | -R c]` for a camera at `centre` looking at `target`, with `up`
/// roughly along +z.
pub fn look_at(
    centre: Vector3<f64>,
    target: Vector3<f64>,
    focal: f64,
    pp: (f64, f64),
) -> CameraMatrix {
    let fwd = (target - centre).normalize();
    let helper = if fwd.z.abs() > 0.9 {
        Vector3::x()
    } else {
        Vector3::z()
    };
    let right = fwd.cross(&helper).normalize();
    let down = fwd.cross(&right);
    let r = Matrix3::from_rows(&[right.transpose(), down.transpose(), fwd.transpose()]);
    let t = -(r * centre);
    let k = Matrix3::new(focal, 0.0, pp.0, 0.0, focal, pp.1, 0.0, 0.0, 1.0);
    let mut rt = Matrix3x4::zeros();
    rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    rt.set_column(3, &t);
    CameraMatrix::new(k * rt).expect("look-at camera is non-singular")
}

/// Camera on a sphere of radius 4..8 around the origin, looking at it.
pub fn random_camera<R: Rng>(rng: &mut R) -> CameraMatrix {
    loop {
        let dir = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = dir.norm();
        if !(0.2..=1.0).contains(&n) {
            continue;
        }
        let centre = dir / n * rng.random_range(4.0..8.0);
        let focal = rng.random_range(400.0..1200.0);
        let pp = (
            rng.random_range(200.0..400.0),
            rng.random_range(150.0..300.0),
        );
        return look_at(centre, Vector3::zeros(), focal, pp);
    }
}

pub fn random_point<R: Rng>(rng: &mut R) -> Point3D {
    Point3D::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
}

pub fn random_cameras<R: Rng>(rng: &mut R, n: usize) -> CameraSet {
    (0..n as u32).map(|f| (f, random_camera(rng))).collect()
}

/// Exact projections of `pt` into every camera.
pub fn observe(cams: &CameraSet, pt: Point3D) -> Vec<Observation> {
    cams.iter()
        .map(|(&frame, cam)| {
            let (x, y) = project(cam, pt).expect("point in front of camera");
            Observation { frame, x, y }
        })
        .collect()
}

/// Reprojection error written out from the camera entries directly.
pub fn reference_reprojection_error(
    pt: Point3D,
    obs: &[Observation],
    cams: &BTreeMap<u32, CameraMatrix>,
) -> f64 {
    obs.iter()
        .map(|o| {
            let p = cams[&o.frame].matrix();
            let row = |i: usize| p[(i, 0)] * pt.x + p[(i, 1)] * pt.y + p[(i, 2)] * pt.z + p[(i, 3)];
            let w = row(2);
            let (dx, dy) = (row(0) / w - o.x, row(1) / w - o.y);
            dx * dx + dy * dy
        })
        .sum()
}
