//! `hfmt`: classify board images, replay strip tracking over frame dumps,
//! run the closed-loop simulator, and survey marker discs.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage or input error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use hfmt_core::fiducial::detect_fiducial;
use hfmt_core::imaging::load_pnm;
use hfmt_core::path_tracker::{estimate_path, extract_path_mask, steering, DEFAULT_CRUISE_V};
use hfmt_core::sim::{run_episode_with, FrameDump, SimConfig};
use hfmt_core::survey::{read_cameras, read_observations, survey_markers, write_results};
use hfmt_core::{FiducialConfig, FiducialPattern, Outcome, SteeringGains, World};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "hfmt",
    version,
    about = "Fiducial-guided strip following toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the dot pattern in a board image and print it as JSON.
    Classify {
        image: PathBuf,
        /// Pixels darker than this are dot candidates.
        #[arg(long, default_value_t = 128)]
        threshold: u8,
        /// Smallest dot area in pixels.
        #[arg(long, default_value_t = 9)]
        min_area: usize,
        /// Relative tolerance of the square test.
        #[arg(long, default_value_t = 0.15)]
        tol: f64,
        /// Exit 1 unless the image classifies as this pattern.
        #[arg(long)]
        expect: Option<FiducialPattern>,
    },
    /// Print offset, gradient and turn rate for every lower_*.pgm frame in a
    /// directory as CSV.
    Track {
        dir: PathBuf,
        /// Offset and gradient gains, `k_o,k_g`.
        #[arg(long, default_value = "1.0,1.5", value_parser = parse_gains)]
        gains: (f64, f64),
        /// Pixels at or above this are strip candidates.
        #[arg(long, default_value_t = 128)]
        threshold: u8,
    },
    /// Run one episode on a world description and print the report as JSON.
    /// Exits 0 only when the robot reaches its destination.
    Sim {
        world: PathBuf,
        /// Noise seed; defaults to the world's own seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 5000)]
        max_steps: usize,
        /// Write every frame pair as numbered PGM files into this directory.
        #[arg(long)]
        dump_frames: Option<PathBuf>,
    },
    /// Triangulate marker discs. Results go to stdout as CSV, skipped discs
    /// to stderr.
    Survey {
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        cams: PathBuf,
    },
}

fn parse_gains(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected k_o,k_g, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

enum Failure {
    /// The command ran but the result is a failure (exit 1).
    Domain(anyhow::Error),
    /// Bad input or environment (exit 2).
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn classify(image: &Path, cfg: &FiducialConfig, expect: Option<FiducialPattern>) -> CmdResult {
    let bytes = fs::read(image).with_context(|| format!("reading {}", image.display()))?;
    let img = load_pnm(&bytes).with_context(|| format!("decoding {}", image.display()))?;
    let det = detect_fiducial(&img, cfg);
    let dots: Vec<_> = det
        .dots
        .iter()
        .map(|b| json!({ "x": b.centroid.0, "y": b.centroid.1, "area": b.area }))
        .collect();
    let out = json!({
        "pattern": det.pattern.as_str(),
        "dot_count": det.dots.len(),
        "dots": dots,
        "board_fraction": det.board_fraction,
    });
    println!("{out}");
    match expect {
        Some(want) if want != det.pattern => Err(Failure::Domain(anyhow!(
            "expected {want}, classified as {}",
            det.pattern
        ))),
        _ => Ok(()),
    }
}

fn is_frame(name: &str) -> bool {
    name.starts_with("lower_") && name.ends_with(".pgm")
}

fn track(dir: &Path, gains: SteeringGains, threshold: u8) -> CmdResult {
    let mut names: Vec<String> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();

    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "frame,offset,gradient,omega,valid")?;
    let mut rows = 0;
    for name in names {
        if !is_frame(&name) {
            // the upper frames of a dump sit next to the lower ones
            if !(name.starts_with("upper_") && name.ends_with(".pgm")) {
                eprintln!("warning: skipping {name}: not a lower_*.pgm frame");
            }
            continue;
        }
        let decoded = fs::read(dir.join(&name))
            .map_err(anyhow::Error::from)
            .and_then(|bytes| load_pnm(&bytes).map_err(anyhow::Error::from));
        let img = match decoded {
            Ok(img) => img,
            Err(e) => {
                eprintln!("warning: skipping {name}: {e}");
                continue;
            }
        };
        let est = estimate_path(&extract_path_mask(&img, threshold));
        if est.valid {
            let omega = steering(&est, &gains, DEFAULT_CRUISE_V).angular_velocity;
            writeln!(out, "{name},{},{},{omega},true", est.offset, est.gradient)?;
        } else {
            writeln!(out, "{name},,,0,false")?;
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Failure::Domain(anyhow!("no frames in {}", dir.display())));
    }
    Ok(())
}

fn sim(world: &Path, seed: Option<u64>, max_steps: usize, dump: Option<&Path>) -> CmdResult {
    let text = fs::read_to_string(world).with_context(|| format!("reading {}", world.display()))?;
    let world = World::from_json(&text).map_err(anyhow::Error::from)?;
    let mut cfg = SimConfig::for_world(&world);
    cfg.max_steps = max_steps;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let dump = dump
        .map(|d| FrameDump::create(d).with_context(|| format!("creating {}", d.display())))
        .transpose()?;
    let report = run_episode_with(&world, &cfg, |frames| match &dump {
        Some(d) => d.write(frames),
        None => Ok(()),
    })
    .map_err(anyhow::Error::from)?;
    println!("{}", report.to_json());
    if report.outcome == Outcome::ReachedDestination {
        Ok(())
    } else {
        Err(Failure::Domain(anyhow!(
            "episode ended with {:?}",
            report.outcome
        )))
    }
}

fn survey(obs: &Path, cams: &Path) -> CmdResult {
    let open = |p: &Path| fs::File::open(p).with_context(|| format!("opening {}", p.display()));
    let records = read_observations(open(obs)?).with_context(|| obs.display().to_string())?;
    let cameras = read_cameras(open(cams)?).with_context(|| cams.display().to_string())?;
    if records.is_empty() {
        return Err(Failure::Domain(anyhow!(
            "{} has no observations",
            obs.display()
        )));
    }
    let result = survey_markers(&records, &cameras).map_err(anyhow::Error::from)?;
    for skipped in &result.skipped {
        eprintln!("{skipped}");
    }
    write_results(io::stdout().lock(), &result)?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Classify {
            image,
            threshold,
            min_area,
            tol,
            expect,
        } => {
            let cfg = FiducialConfig {
                threshold,
                min_area,
                tol,
                ..FiducialConfig::default()
            };
            classify(&image, &cfg, expect)
        }
        Command::Track {
            dir,
            gains: (k_o, k_g),
            threshold,
        } => {
            let gains = SteeringGains::new(k_o, k_g, SteeringGains::default().max_rate)
                .map_err(anyhow::Error::from)?;
            track(&dir, gains, threshold)
        }
        Command::Sim {
            world,
            seed,
            max_steps,
            dump_frames,
        } => sim(&world, seed, max_steps, dump_frames.as_deref()),
        Command::Survey { obs, cams } => survey(&obs, &cams),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("hfmt: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
