//! Periodic branch monitoring: analyze a timed frame series, detect clot
//! formation onset and threshold alarms, and correlate clot burden with
//! elapsed time.
//!
//! Each manifold branch is its own session; nothing is fused across branches.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image_core::{decode_bytes, decode_image, encode_pgm, GrayImage};
use crate::metrics::{check_alarm, AlarmConfig, ClotReport};
use crate::pipeline::{analyze, AnalysisConfig, DegeneratePolicy};
use crate::stats::{pearson, CorrelationResult, PairedSeries, StatsError};
use crate::synth::{render_frame, ClotScene, GrowthModel};

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("session has no frames")]
    NoFrames,
    #[error("no frame in the session could be analyzed ({skipped} skipped)")]
    AllFramesFailed { skipped: usize },
    #[error("timestamps must be finite and strictly increasing (frame {index}: {timestamp})")]
    NonIncreasingTimestamps { index: usize, timestamp: f64 },
    #[error("session mixes branches {0:?} and {1:?}")]
    MixedBranches(Option<u32>, Option<u32>),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrameSource {
    Path(PathBuf),
    /// Encoded PGM or PNG bytes.
    Bytes(Vec<u8>),
    Image(GrayImage),
}

impl FrameSource {
    fn describe(&self) -> String {
        match self {
            FrameSource::Path(p) => p.display().to_string(),
            FrameSource::Bytes(b) => format!("<{} bytes in memory>", b.len()),
            FrameSource::Image(i) => format!("<{}x{} image in memory>", i.width(), i.height()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameEvent {
    /// Minutes since session start.
    pub timestamp: f64,
    pub source: FrameSource,
    pub branch_id: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnsetConfig {
    /// Calibrated clot-free level of cumulative area, in pixels.
    pub noise_floor: u64,
    /// Consecutive exceedances required.
    pub k_consecutive: usize,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            noise_floor: 0,
            k_consecutive: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SessionConfig {
    pub analysis: AnalysisConfig,
    pub onset: OnsetConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationUnavailable {
    TooFewSamples,
    ZeroVariance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedFrame {
    pub timestamp: f64,
    pub source: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSeries {
    pub branch_id: Option<u32>,
    pub reports: Vec<ClotReport>,
    pub onset_time: Option<f64>,
    pub alarm_time: Option<f64>,
    /// Pearson correlation of cumulative area against timestamp.
    pub correlation: Option<CorrelationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_unavailable: Option<CorrelationUnavailable>,
    #[serde(default)]
    pub skipped_frames: Vec<SkippedFrame>,
}

impl SessionSeries {
    pub fn timestamps(&self) -> Vec<f64> {
        self.reports
            .iter()
            .enumerate()
            .map(|(i, r)| r.timestamp.unwrap_or(i as f64))
            .collect()
    }

    pub fn cumulative_areas(&self) -> Vec<f64> {
        self.reports
            .iter()
            .map(|r| r.cumulative_area as f64)
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("session serializes");
        s.push('\n');
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        crate::metrics::write_csv(&self.reports, out)
    }
}

/// Index of the first report that starts a run of at least `k` consecutive
/// reports with `cumulative_area > noise_floor`.
pub fn onset_index(reports: &[ClotReport], noise_floor: u64, k: usize) -> Option<usize> {
    assert!(k >= 1, "k must be at least 1");
    let mut run_start = 0;
    let mut run_len = 0;
    for (i, r) in reports.iter().enumerate() {
        if r.cumulative_area > noise_floor {
            if run_len == 0 {
                run_start = i;
            }
            run_len += 1;
            if run_len >= k {
                return Some(run_start);
            }
        } else {
            run_len = 0;
        }
    }
    None
}

/// Timestamp at which clot formation is first sustained above the floor.
pub fn detect_onset(reports: &[ClotReport], noise_floor: u64, k: usize) -> Option<f64> {
    onset_index(reports, noise_floor, k).and_then(|i| reports[i].timestamp)
}

pub fn first_alarm(reports: &[ClotReport], cfg: &AlarmConfig) -> Option<f64> {
    reports
        .iter()
        .find(|r| check_alarm(r, cfg).is_alarm())
        .and_then(|r| r.timestamp)
}

/// Non-normative noise-floor suggestion from clot-free calibration frames:
/// median plus three median absolute deviations of cumulative area.
pub fn recommend_noise_floor(clean: &[ClotReport]) -> Option<u64> {
    fn median(v: &mut [f64]) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }
    if clean.is_empty() {
        return None;
    }
    let mut areas: Vec<f64> = clean.iter().map(|r| r.cumulative_area as f64).collect();
    let med = median(&mut areas);
    let mut dev: Vec<f64> = areas.iter().map(|a| (a - med).abs()).collect();
    let mad = median(&mut dev);
    Some((med + 3.0 * mad).ceil() as u64)
}

fn load_frame(source: &FrameSource) -> Result<GrayImage, String> {
    match source {
        FrameSource::Path(p) => decode_image(p).map_err(|e| e.to_string()),
        FrameSource::Bytes(b) => decode_bytes(b).map_err(|e| e.to_string()),
        FrameSource::Image(img) => Ok(img.clone()),
    }
}

/// Analyze one branch's frames in timestamp order.
///
/// Frames that fail to decode or analyze are recorded in `skipped_frames`
/// and left out of `reports`; frames whose ROI holds a single intensity are
/// reported as clot-free.
pub fn run_session(
    events: &[FrameEvent],
    cfg: &SessionConfig,
) -> Result<SessionSeries, MonitorError> {
    let first = events.first().ok_or(MonitorError::NoFrames)?;
    let branch_id = first.branch_id;
    let mut prev: Option<f64> = None;
    for (index, ev) in events.iter().enumerate() {
        if ev.branch_id != branch_id {
            return Err(MonitorError::MixedBranches(branch_id, ev.branch_id));
        }
        if !ev.timestamp.is_finite() || prev.is_some_and(|p| ev.timestamp <= p) {
            return Err(MonitorError::NonIncreasingTimestamps {
                index,
                timestamp: ev.timestamp,
            });
        }
        prev = Some(ev.timestamp);
    }

    let mut reports = Vec::with_capacity(events.len());
    let mut skipped_frames = Vec::new();
    for ev in events {
        let outcome = load_frame(&ev.source).and_then(|img| {
            analyze(&img, &cfg.analysis, DegeneratePolicy::NoForeground).map_err(|e| e.to_string())
        });
        match outcome {
            Ok(report) => reports.push(report.with_timestamp(ev.timestamp)),
            Err(reason) => skipped_frames.push(SkippedFrame {
                timestamp: ev.timestamp,
                source: ev.source.describe(),
                reason,
            }),
        }
    }
    if reports.is_empty() {
        return Err(MonitorError::AllFramesFailed {
            skipped: skipped_frames.len(),
        });
    }

    let onset_time = detect_onset(&reports, cfg.onset.noise_floor, cfg.onset.k_consecutive);
    let alarm_time = cfg
        .analysis
        .alarm
        .as_ref()
        .and_then(|a| first_alarm(&reports, a));

    let mut series = SessionSeries {
        branch_id,
        reports,
        onset_time,
        alarm_time,
        correlation: None,
        correlation_unavailable: None,
        skipped_frames,
    };
    let paired = PairedSeries::new(series.timestamps(), series.cumulative_areas())
        .expect("timestamps and areas are finite and equal length");
    match pearson(&paired) {
        Ok(c) => series.correlation = Some(c),
        Err(StatsError::ZeroVariance) => {
            series.correlation_unavailable = Some(CorrelationUnavailable::ZeroVariance)
        }
        Err(_) => series.correlation_unavailable = Some(CorrelationUnavailable::TooFewSamples),
    }
    Ok(series)
}

/// Split events by branch (ordered by branch id, unbranched first) and run
/// one session per branch.
pub fn run_branches(
    events: &[FrameEvent],
    cfg: &SessionConfig,
) -> Vec<(Option<u32>, Result<SessionSeries, MonitorError>)> {
    let mut groups: BTreeMap<Option<u32>, Vec<FrameEvent>> = BTreeMap::new();
    for ev in events {
        groups.entry(ev.branch_id).or_default().push(ev.clone());
    }
    groups
        .into_iter()
        .map(|(branch, evs)| (branch, run_session(&evs, cfg)))
        .collect()
}

/// Simulate periodic exclusion and imaging of one branch: frames at
/// `t = i * interval` are rendered from the growth model, encoded as PGM and
/// analyzed as a session.
pub fn simulate_manifold(
    scene0: &ClotScene,
    model: &GrowthModel,
    interval: f64,
    n_frames: usize,
    cfg: &SessionConfig,
) -> Result<SessionSeries, MonitorError> {
    if !(interval.is_finite() && interval > 0.0) {
        return Err(MonitorError::InvalidSchedule(format!(
            "interval must be positive, got {interval}"
        )));
    }
    if n_frames == 0 {
        return Err(MonitorError::InvalidSchedule(
            "need at least one frame".into(),
        ));
    }
    let events: Vec<FrameEvent> = (0..n_frames)
        .map(|i| {
            let t = i as f64 * interval;
            FrameEvent {
                timestamp: t,
                source: FrameSource::Bytes(encode_pgm(&render_frame(scene0, model, t, i))),
                branch_id: None,
            }
        })
        .collect();
    run_session(&events, cfg)
}

pub const MANIFEST_HEADER: [&str; 3] = ["timestamp_min", "branch_id", "image_path"];

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub timestamp_min: f64,
    pub branch_id: Option<u32>,
    pub image_path: String,
}

/// Parse a frame manifest. Relative image paths resolve against `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<FrameEvent>, MonitorError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| MonitorError::Manifest(e.to_string()))?
        .clone();
    if headers.iter().map(str::trim).ne(MANIFEST_HEADER) {
        return Err(MonitorError::Manifest(format!(
            "expected header {:?}, found {:?}",
            MANIFEST_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut events = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| MonitorError::Manifest(format!("line {line}: {e}")))?;
        let field = |k: usize| record.get(k).unwrap_or("").trim();
        let timestamp: f64 = field(0).parse().map_err(|_| {
            MonitorError::Manifest(format!("line {line}: bad timestamp {:?}", field(0)))
        })?;
        let branch_id = match field(1) {
            "" => None,
            s => Some(s.parse::<u32>().map_err(|_| {
                MonitorError::Manifest(format!("line {line}: bad branch_id {s:?}"))
            })?),
        };
        let path = field(2);
        if path.is_empty() {
            return Err(MonitorError::Manifest(format!(
                "line {line}: empty image_path"
            )));
        }
        events.push(FrameEvent {
            timestamp,
            source: FrameSource::Path(base_dir.join(path)),
            branch_id,
        });
    }
    Ok(events)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<FrameEvent>, MonitorError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new("")))
}

pub fn write_manifest<W: Write>(entries: &[ManifestEntry], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(MANIFEST_HEADER)?;
    for e in entries {
        w.write_record([
            e.timestamp_min.to_string(),
            e.branch_id.map(|b| b.to_string()).unwrap_or_default(),
            e.image_path.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
