//! Per-image clot quantification and threshold alarms.
//!
//! A clot's "density" is its member pixel count. The normalized burden is the
//! occlusion fraction: cumulative clot area over the filter ROI area.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::Component;
use crate::pipeline::AnalysisSettings;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("ROI area must be at least one pixel")]
    RoiTooSmall,
    #[error("cumulative clot area {area} exceeds ROI area {roi_area}")]
    AreaExceedsRoi { area: u64, roi_area: u64 },
    #[error("invalid alarm configuration: {0}")]
    InvalidAlarmConfig(String),
}

/// Default noise floor: components smaller than this many pixels are dropped.
pub const DEFAULT_MIN_SIZE: u64 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClotReport {
    pub n_clots: usize,
    /// Retained component areas, largest first.
    pub clot_densities: Vec<u64>,
    pub cumulative_area: u64,
    pub occlusion_fraction: f64,
    pub largest_clot: u64,
    pub roi_area: u64,
    pub min_size_used: u64,
    /// Minutes since session start.
    pub timestamp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alarm: Option<AlarmState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<AnalysisSettings>,
}

impl ClotReport {
    pub fn with_timestamp(mut self, minutes: f64) -> Self {
        self.timestamp = Some(minutes);
        self
    }
}

pub fn quantify(
    components: &[Component],
    roi_area: u64,
    min_size: u64,
) -> Result<ClotReport, MetricsError> {
    if roi_area < 1 {
        return Err(MetricsError::RoiTooSmall);
    }
    let mut kept: Vec<&Component> = components.iter().filter(|c| c.area >= min_size).collect();
    kept.sort_by(|a, b| b.area.cmp(&a.area).then(a.label.cmp(&b.label)));
    let clot_densities: Vec<u64> = kept.iter().map(|c| c.area).collect();
    let cumulative_area: u64 = clot_densities.iter().sum();
    if cumulative_area > roi_area {
        return Err(MetricsError::AreaExceedsRoi {
            area: cumulative_area,
            roi_area,
        });
    }
    Ok(ClotReport {
        n_clots: clot_densities.len(),
        largest_clot: clot_densities.first().copied().unwrap_or(0),
        occlusion_fraction: cumulative_area as f64 / roi_area as f64,
        clot_densities,
        cumulative_area,
        roi_area,
        min_size_used: min_size,
        timestamp: None,
        alarm: None,
        settings: None,
    })
}

/// Alarm limits. No defaults ship: limits come from calibration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlarmConfig {
    pub max_occlusion_fraction: Option<f64>,
    pub max_cumulative_area: Option<u64>,
    /// Clots smaller than this are ignored when evaluating limits. Only has
    /// an effect when stricter than the report's own `min_size_used`.
    #[serde(default)]
    pub min_clot_size: u64,
}

impl AlarmConfig {
    pub fn new(
        max_occlusion_fraction: Option<f64>,
        max_cumulative_area: Option<u64>,
        min_clot_size: u64,
    ) -> Result<Self, MetricsError> {
        let cfg = Self {
            max_occlusion_fraction,
            max_cumulative_area,
            min_clot_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.max_occlusion_fraction.is_none() && self.max_cumulative_area.is_none() {
            return Err(MetricsError::InvalidAlarmConfig(
                "at least one of max_occlusion_fraction or max_cumulative_area is required".into(),
            ));
        }
        if let Some(f) = self.max_occlusion_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(MetricsError::InvalidAlarmConfig(format!(
                    "max_occlusion_fraction must lie in (0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmReason {
    Occlusion,
    Area,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum AlarmState {
    Clear,
    Alarm {
        reason: AlarmReason,
        value: f64,
        limit: f64,
    },
}

impl AlarmState {
    pub fn is_alarm(&self) -> bool {
        matches!(self, AlarmState::Alarm { .. })
    }
}

/// Strict exceedance check; occlusion is tested before area.
pub fn check_alarm(report: &ClotReport, cfg: &AlarmConfig) -> AlarmState {
    let (area, fraction) = if cfg.min_clot_size > report.min_size_used {
        let area: u64 = report
            .clot_densities
            .iter()
            .filter(|&&d| d >= cfg.min_clot_size)
            .sum();
        (area, area as f64 / report.roi_area.max(1) as f64)
    } else {
        (report.cumulative_area, report.occlusion_fraction)
    };
    if let Some(limit) = cfg.max_occlusion_fraction {
        if fraction > limit {
            return AlarmState::Alarm {
                reason: AlarmReason::Occlusion,
                value: fraction,
                limit,
            };
        }
    }
    if let Some(limit) = cfg.max_cumulative_area {
        if area > limit {
            return AlarmState::Alarm {
                reason: AlarmReason::Area,
                value: area as f64,
                limit: limit as f64,
            };
        }
    }
    AlarmState::Clear
}

pub const CSV_HEADER: [&str; 5] = [
    "timestamp",
    "n_clots",
    "cumulative_area",
    "occlusion_fraction",
    "largest_clot",
];

/// CSV row in [`CSV_HEADER`] order; a missing timestamp is an empty field.
pub fn csv_row(report: &ClotReport) -> [String; 5] {
    [
        report.timestamp.map(|t| t.to_string()).unwrap_or_default(),
        report.n_clots.to_string(),
        report.cumulative_area.to_string(),
        report.occlusion_fraction.to_string(),
        report.largest_clot.to_string(),
    ]
}

pub fn write_csv<W: Write>(reports: &[ClotReport], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}
