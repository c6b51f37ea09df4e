//! `clotquant` command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or decode failure, 3 degenerate
//! analysis, 4 empty result.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::binarize::{BinarizeError, Polarity, ThresholdMode, ThresholdPolicy};
use crate::image_core::{decode_image, encode_pgm, RoiMask};
use crate::labeling::Connectivity;
use crate::metrics::{write_csv, AlarmConfig, DEFAULT_MIN_SIZE};
use crate::monitor::{
    read_manifest, run_branches, write_manifest, ManifestEntry, MonitorError, OnsetConfig,
    SessionConfig, SessionSeries,
};
use crate::pipeline::{
    analyze, AnalysisConfig, AnalysisError, DegeneratePolicy, DEFAULT_MIN_CONTRAST,
};
use crate::plot::session_svg;
use crate::synth::{render_frame, SceneFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_EMPTY: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "clotquant",
    version,
    about = "Quantify clot burden in blood-filter images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze one filter image and print its clot report.
    Analyze {
        image: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Analyze a frame manifest and write one session per branch.
    Batch {
        manifest: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Calibrated clot-free cumulative area (pixels).
        #[arg(long, default_value_t = 0)]
        noise_floor: u64,
        /// Consecutive frames above the noise floor that mark onset.
        #[arg(long = "onset-k", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        onset_k: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Render synthetic frames and a manifest from a scene description.
    Synth {
        scene: PathBuf,
        #[arg(long, default_value_t = 1)]
        frames: usize,
        /// Minutes between frames.
        #[arg(long, default_value_t = 10.0)]
        interval: f64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides the growth model's noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plot a session's cumulative clot area against time as SVG.
    Plot { session: PathBuf, out: PathBuf },
}

#[derive(Args, Debug)]
struct AnalysisArgs {
    /// Fixed threshold 0-255, or "otsu".
    #[arg(long, default_value = "otsu")]
    threshold: ThresholdMode,
    #[arg(long, default_value = "dark")]
    polarity: Polarity,
    #[arg(long, default_value = "8")]
    connectivity: Connectivity,
    #[arg(long, default_value_t = DEFAULT_MIN_SIZE)]
    min_size: u64,
    /// "full" or "disk:cx,cy,r".
    #[arg(long, default_value = "full", value_parser = parse_roi)]
    roi: RoiMask,
    #[arg(long)]
    alarm_occlusion: Option<f64>,
    #[arg(long)]
    alarm_area: Option<u64>,
    /// Median filter radius applied before thresholding (0 = off).
    #[arg(long, default_value_t = 0)]
    median: usize,
    /// Minimum Otsu class-mean separation for a frame to contain clots.
    #[arg(long, default_value_t = DEFAULT_MIN_CONTRAST)]
    min_contrast: u8,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_roi(s: &str) -> Result<RoiMask, String> {
    if s == "full" {
        return Ok(RoiMask::FullFrame);
    }
    let spec = s
        .strip_prefix("disk:")
        .ok_or_else(|| format!("ROI must be 'full' or 'disk:cx,cy,r', got {s:?}"))?;
    let parts: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("bad disk ROI {s:?}"))?;
    match parts[..] {
        [cx, cy, r] => RoiMask::disk(cx, cy, r).map_err(|e| e.to_string()),
        _ => Err(format!("disk ROI needs three numbers, got {s:?}")),
    }
}

struct Failure(i32, String);

impl AnalysisArgs {
    fn to_config(&self) -> Result<AnalysisConfig, Failure> {
        let alarm = if self.alarm_occlusion.is_some() || self.alarm_area.is_some() {
            Some(
                AlarmConfig::new(self.alarm_occlusion, self.alarm_area, 0)
                    .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?,
            )
        } else {
            None
        };
        Ok(AnalysisConfig {
            policy: ThresholdPolicy {
                mode: self.threshold,
                polarity: self.polarity,
            },
            connectivity: self.connectivity,
            min_size: self.min_size,
            roi: self.roi,
            median_radius: self.median,
            min_contrast: self.min_contrast,
            alarm,
        })
    }
}

/// Run the CLI with explicit argument and output streams; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze {
            image,
            analysis,
            format,
        } => cmd_analyze(&image, &analysis, format, stdout),
        Command::Batch {
            manifest,
            analysis,
            noise_floor,
            onset_k,
            out_dir,
        } => cmd_batch(
            &manifest,
            &analysis,
            noise_floor,
            onset_k as usize,
            &out_dir,
            stdout,
            stderr,
        ),
        Command::Synth {
            scene,
            frames,
            interval,
            out_dir,
            seed,
        } => cmd_synth(&scene, frames, interval, &out_dir, seed, stdout),
        Command::Plot { session, out } => cmd_plot(&session, &out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_IO, format!("{}: {e}", path.display()))
}

fn cmd_analyze(
    image: &Path,
    args: &AnalysisArgs,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let cfg = args.to_config()?;
    let img = decode_image(image).map_err(|e| io_failure(image, e))?;
    let report = analyze(&img, &cfg, DegeneratePolicy::Fail).map_err(|e| match e {
        AnalysisError::Binarize(BinarizeError::DegenerateHistogram) | AnalysisError::Metrics(_) => {
            Failure(EXIT_DEGENERATE, format!("{}: {e}", image.display()))
        }
    })?;
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            writeln!(stdout, "{text}").map_err(|e| Failure(EXIT_IO, e.to_string()))
        }
        Format::Csv => write_csv(std::slice::from_ref(&report), stdout)
            .map_err(|e| Failure(EXIT_IO, e.to_string())),
    }
}

fn session_stem(branch: Option<u32>) -> String {
    match branch {
        None => "session".into(),
        Some(b) => format!("session_branch{b}"),
    }
}

fn cmd_batch(
    manifest: &Path,
    args: &AnalysisArgs,
    noise_floor: u64,
    onset_k: usize,
    out_dir: &Path,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let cfg = SessionConfig {
        analysis: args.to_config()?,
        onset: OnsetConfig {
            noise_floor,
            k_consecutive: onset_k,
        },
    };
    let events = read_manifest(manifest).map_err(|e| io_failure(manifest, e))?;
    if events.is_empty() {
        return Err(Failure(
            EXIT_EMPTY,
            format!("{}: manifest lists no frames", manifest.display()),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| io_failure(out_dir, e))?;

    let mut empty_branches = Vec::new();
    for (branch, outcome) in run_branches(&events, &cfg) {
        let series: SessionSeries = match outcome {
            Ok(s) => s,
            Err(MonitorError::AllFramesFailed { skipped }) => {
                let _ = writeln!(
                    stderr,
                    "warning: branch {branch:?}: none of {skipped} frames could be analyzed"
                );
                empty_branches.push(branch);
                continue;
            }
            Err(e) => return Err(io_failure(manifest, e)),
        };
        for skip in &series.skipped_frames {
            let _ = writeln!(
                stderr,
                "warning: skipped frame at t={} ({}): {}",
                skip.timestamp, skip.source, skip.reason
            );
        }
        let stem = session_stem(branch);
        let json_path = out_dir.join(format!("{stem}.json"));
        let csv_path = out_dir.join(format!("{stem}.csv"));
        std::fs::write(&json_path, series.to_json()).map_err(|e| io_failure(&json_path, e))?;
        let mut csv_buf = Vec::new();
        series
            .write_csv(&mut csv_buf)
            .map_err(|e| io_failure(&csv_path, e))?;
        std::fs::write(&csv_path, csv_buf).map_err(|e| io_failure(&csv_path, e))?;
        let _ = writeln!(stdout, "{}", json_path.display());
        let _ = writeln!(stdout, "{}", csv_path.display());
    }
    if !empty_branches.is_empty() {
        return Err(Failure(
            EXIT_EMPTY,
            format!("no frames analyzed for branch(es) {empty_branches:?}"),
        ));
    }
    Ok(())
}

fn cmd_synth(
    scene_path: &Path,
    frames: usize,
    interval: f64,
    out_dir: &Path,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    if frames == 0 {
        return Err(Failure(EXIT_USAGE, "--frames must be at least 1".into()));
    }
    if !(interval.is_finite() && interval > 0.0) {
        return Err(Failure(EXIT_USAGE, "--interval must be positive".into()));
    }
    let mut file = SceneFile::load(scene_path).map_err(|e| io_failure(scene_path, e))?;
    if let Some(s) = seed {
        file.model.seed = s;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| io_failure(out_dir, e))?;
    let digits = (frames - 1).to_string().len().max(3);
    let mut entries = Vec::with_capacity(frames);
    for i in 0..frames {
        let t = i as f64 * interval;
        let img = render_frame(&file.scene, &file.model, t, i);
        let name = format!("frame_{i:0digits$}.pgm");
        let path = out_dir.join(&name);
        std::fs::write(&path, encode_pgm(&img)).map_err(|e| io_failure(&path, e))?;
        entries.push(ManifestEntry {
            timestamp_min: t,
            branch_id: None,
            image_path: name,
        });
    }
    let manifest_path = out_dir.join("manifest.csv");
    let mut buf = Vec::new();
    write_manifest(&entries, &mut buf).map_err(|e| io_failure(&manifest_path, e))?;
    std::fs::write(&manifest_path, buf).map_err(|e| io_failure(&manifest_path, e))?;
    let _ = writeln!(stdout, "{}", manifest_path.display());
    Ok(())
}

fn cmd_plot(session: &Path, out: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(session).map_err(|e| io_failure(session, e))?;
    let series: SessionSeries = serde_json::from_str(&text).map_err(|e| io_failure(session, e))?;
    if series.reports.is_empty() {
        return Err(Failure(
            EXIT_EMPTY,
            format!("{}: session has no reports", session.display()),
        ));
    }
    std::fs::write(out, session_svg(&series)).map_err(|e| io_failure(out, e))
}
