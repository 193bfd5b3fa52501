//! Runs every acceptance criterion and prints one PASS/FAIL line for each.
//! Exits non-zero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hfmt_core::fiducial::detect_fiducial;
use hfmt_core::imaging::connected_components;
use hfmt_core::path_tracker::{estimate_path, extract_path_mask, steering, DEFAULT_CRUISE_V};
use hfmt_core::sim::{
    add_noise, render_board, render_lower, run_episode, run_episode_with, BoardFace, FrameDump,
    LowerCamera, SimConfig,
};
use hfmt_core::survey::{
    dlt_triangulate, project_with_jacobian, refine_triangulation, RefineOptions,
};
use hfmt_core::{
    BinaryImage, FiducialConfig, FiducialPattern, Observation, Outcome, PathEstimate, Point3D,
    Pose2D, SteeringGains, World,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const HEADLINE_BUDGET: Duration = Duration::from_secs(10);
const RENDER_BUDGET: Duration = Duration::from_secs(5);
const DLT_TOL: f64 = 1e-9;
const JACOBIAN_REL_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;
const CLOSURE_TOL: f64 = 0.05;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn end_to_end_navigation() -> Verdict {
    let world = World::two_turn_course();
    let cfg = SimConfig::for_world(&world);
    let start = Instant::now();
    let report = run_episode(&world, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        report.outcome == Outcome::ReachedDestination
            && report.steps < 5000
            && report.max_cross_track_error < world.strip_width
            && elapsed < HEADLINE_BUDGET,
        format!(
            "{:?} in {} steps, max cross-track {:.4} m (limit {}), {:.2?}",
            report.outcome, report.steps, report.max_cross_track_error, world.strip_width, elapsed
        ),
    )
}

fn fiducial_robustness() -> Verdict {
    let patterns = [
        FiducialPattern::LeftTurn,
        FiducialPattern::RightTurn,
        FiducialPattern::Terminal,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = FiducialConfig::default();
    let start = Instant::now();
    let mut correct = 0;
    let mut misses = Vec::new();
    for i in 0..500 {
        let pattern = patterns[i % 3];
        let face = BoardFace {
            px_w: 192,
            px_h: 192,
            reference_width: 96.0,
            scale: rng.random_range(0.5..=2.0),
            rotation: rng.random_range(0.0..TAU),
            background: 220,
            dot: 40,
        };
        let sigma = rng.random_range(0.0..=8.0);
        let mut img = render_board(pattern, &face);
        add_noise(&mut img, sigma, &mut rng);
        let got = detect_fiducial(&img, &cfg).pattern;
        if got == pattern {
            correct += 1;
        } else if misses.len() < 3 {
            misses.push(format!("#{i} {pattern}->{got}"));
        }
    }
    let elapsed = start.elapsed();
    check(
        correct == 500 && elapsed < RENDER_BUDGET,
        format!(
            "{correct}/500 correct in {elapsed:.2?}{}",
            misses.iter().map(|m| format!(" {m}")).collect::<String>()
        ),
    )
}

fn blob_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut compared = 0;
    for i in 0..100 {
        let density = 0.05 + 0.6 * (i as f64 / 99.0);
        let mask = common::random_mask(&mut rng, 64, 64, density);
        for min_area in [1, 5] {
            let blobs = connected_components(&mask, min_area);
            let oracle = common::flood_fill(&mask, min_area);
            if blobs.len() != oracle.len() {
                return Err(format!(
                    "mask {i} min_area {min_area}: {} vs {} blobs",
                    blobs.len(),
                    oracle.len()
                ));
            }
            for (b, o) in blobs.iter().zip(&oracle) {
                if (b.area, b.centroid, b.bbox) != (o.area, o.centroid, o.bbox) {
                    return Err(format!("mask {i} min_area {min_area}: {b:?} vs {o:?}"));
                }
            }
            compared += blobs.len();
        }
    }
    Ok(format!(
        "100 masks x 2 min_area, {compared} blobs identical"
    ))
}

fn triangulation_accuracy() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut worst = 0.0f64;
    for i in 0..200 {
        let n = 2 + i % 9;
        let cams = common::random_cameras(&mut rng, n);
        let truth = common::random_point(&mut rng);
        let exact = common::observe(&cams, truth);
        let est = dlt_triangulate(&exact, &cams).map_err(|e| format!("point {i}: {e}"))?;
        worst = worst.max(est.distance(&truth));

        let noisy: Vec<Observation> = exact
            .iter()
            .map(|o| Observation {
                frame: o.frame,
                x: o.x + noise.sample(&mut rng),
                y: o.y + noise.sample(&mut rng),
            })
            .collect();
        for obs in [&exact, &noisy] {
            let init = dlt_triangulate(obs, &cams).map_err(|e| format!("point {i}: {e}"))?;
            let r = refine_triangulation(init, obs, &cams, &RefineOptions::default())
                .map_err(|e| format!("point {i}: {e}"))?;
            if r.error > r.initial_error {
                return Err(format!(
                    "point {i}: LM raised error {} -> {}",
                    r.initial_error, r.error
                ));
            }
        }
    }
    check(
        worst < DLT_TOL,
        format!("200 points, 2-10 cameras, worst DLT error {worst:.2e}, LM never increased error"),
    )
}

fn jacobian_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let cam = common::random_camera(&mut rng);
        let pt: Point3D = common::random_point(&mut rng);
        let (_, jac) = project_with_jacobian(&cam, pt).map_err(|e| e.to_string())?;
        let scale = jac.amax();
        for k in 0..3 {
            let at = |d: f64| {
                let mut v = pt.to_vector();
                v[k] += d;
                project_with_jacobian(&cam, Point3D::from_vector(&v)).map(|r| r.0)
            };
            let (p, m) = (
                at(FD_STEP).map_err(|e| e.to_string())?,
                at(-FD_STEP).map_err(|e| e.to_string())?,
            );
            let fd = [(p.0 - m.0) / (2.0 * FD_STEP), (p.1 - m.1) / (2.0 * FD_STEP)];
            for r in 0..2 {
                worst = worst.max((jac[(r, k)] - fd[r]).abs() / scale);
            }
        }
    }
    check(
        worst <= JACOBIAN_REL_TOL,
        format!("100 camera/point pairs, worst relative deviation {worst:.2e}"),
    )
}

fn path_closure() -> Verdict {
    let mut world = World::two_turn_course();
    world.noise_sigma = 0.0;
    let cam = LowerCamera::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut poses = Vec::new();
    for i in 0..10 {
        let t = 0.3 + 2.4 * i as f64 / 9.0;
        poses.push(Pose2D::new(t, 0.0, 0.0));
        poses.push(Pose2D::new(3.0, -t, -FRAC_PI_2));
        poses.push(Pose2D::new(3.0 + t, -3.0, 0.0));
    }
    let (mut worst_o, mut worst_g) = (0.0f64, 0.0f64);
    for pose in &poses {
        let e = estimate_path(&extract_path_mask(
            &render_lower(&world, pose, &cam, &mut rng),
            128,
        ));
        if !e.valid {
            return Err(format!("invalid estimate at {pose:?}"));
        }
        worst_o = worst_o.max(e.offset.abs());
        worst_g = worst_g.max(e.gradient.abs());
    }
    let diagonal = BinaryImage::from_fn(128, 128, |x, y| {
        (x as f64 - (127.0 - y as f64)).abs() <= 4.0
    });
    let d = estimate_path(&diagonal);
    check(
        worst_o <= CLOSURE_TOL && worst_g <= CLOSURE_TOL && d.valid && (d.gradient - FRAC_PI_4).abs() <= CLOSURE_TOL,
        format!(
            "{} straight frames: max |offset| {worst_o:.4}, max |gradient| {worst_g:.4}; 45 degree strip gradient {:.4}",
            poses.len(),
            d.gradient
        ),
    )
}

fn dump_run(world: &World, cfg: &SimConfig, dir: &Path) -> Result<String, String> {
    let dump = FrameDump::create(dir).map_err(|e| e.to_string())?;
    let report = run_episode_with(world, cfg, |f| dump.write(f)).map_err(|e| e.to_string())?;
    Ok(report.to_json())
}

fn determinism() -> Verdict {
    let world = World::two_turn_course();
    let cfg = SimConfig::for_world(&world);
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    let a = dump_run(&world, &cfg, dirs[0].path())?;
    let b = dump_run(&world, &cfg, dirs[1].path())?;
    if a != b {
        return Err("reports differ".into());
    }
    let mut names: Vec<_> = fs::read_dir(dirs[0].path())
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    names.sort();
    for name in &names {
        let read = |d: &Path| fs::read(d.join(name)).map_err(|e| e.to_string());
        if read(dirs[0].path())? != read(dirs[1].path())? {
            return Err(format!("{name:?} differs"));
        }
    }
    Ok(format!(
        "identical report ({} bytes) and {} frame files",
        a.len(),
        names.len()
    ))
}

fn steering_law() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let est = |offset, gradient| PathEstimate {
        offset,
        gradient,
        valid: true,
    };
    for i in 0..1000 {
        let gains = SteeringGains::new(
            rng.random_range(0.0..5.0),
            rng.random_range(0.0..5.0),
            rng.random_range(0.01..5.0),
        )
        .map_err(|e| e.to_string())?;
        let (o, g) = (rng.random_range(-1.0..=1.0), rng.random_range(-1.5..=1.5));
        let o2 = rng.random_range(-1.0..=1.0);
        let w = |o, g| steering(&est(o, g), &gains, DEFAULT_CRUISE_V).angular_velocity;
        if w(o, g) != -w(-o, -g) {
            return Err(format!("sample {i}: not antisymmetric"));
        }
        let (lo, hi) = if o <= o2 { (o, o2) } else { (o2, o) };
        if w(hi, g) > w(lo, g) {
            return Err(format!("sample {i}: not monotone in offset"));
        }
        if w(o, g).abs() > gains.max_rate {
            return Err(format!("sample {i}: exceeds rate cap"));
        }
    }
    Ok("1000 samples: antisymmetric, offset-monotone, clamped".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("end-to-end navigation", end_to_end_navigation),
        ("fiducial robustness", fiducial_robustness),
        ("blob oracle equivalence", blob_oracle),
        ("triangulation accuracy", triangulation_accuracy),
        ("jacobian correctness", jacobian_correctness),
        ("path estimation closure", path_closure),
        ("determinism", determinism),
        ("steering law", steering_law),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
