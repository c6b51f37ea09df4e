//! Single-frame analysis: preprocess, ROI, binarize, label, quantify, alarm.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binarize::{
    binarize_at, otsu_split, BinarizeError, Histogram, Polarity, ThresholdMode, ThresholdPolicy,
};
use crate::image_core::{apply_roi, median_filter, GrayImage, RoiMask};
use crate::labeling::{label_components, Connectivity};
use crate::metrics::{
    check_alarm, quantify, AlarmConfig, ClotReport, MetricsError, DEFAULT_MIN_SIZE,
};

/// Minimum gap between Otsu class means (intensity levels) for the split to
/// be treated as clot versus filter.
pub const DEFAULT_MIN_CONTRAST: u8 = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Binarize(#[from] BinarizeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// What to do when the ROI histogram holds a single intensity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegeneratePolicy {
    /// Report [`BinarizeError::DegenerateHistogram`].
    Fail,
    /// Treat the frame as clot-free and note it in the report settings.
    NoForeground,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub policy: ThresholdPolicy,
    pub connectivity: Connectivity,
    pub min_size: u64,
    pub roi: RoiMask,
    /// Median filter radius; 0 disables preprocessing.
    pub median_radius: usize,
    /// Otsu splits whose class means differ by less than this are treated as
    /// clot-free. 0 disables the check. Ignored for fixed thresholds.
    pub min_contrast: u8,
    pub alarm: Option<AlarmConfig>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            policy: ThresholdPolicy::default(),
            connectivity: Connectivity::default(),
            min_size: DEFAULT_MIN_SIZE,
            roi: RoiMask::FullFrame,
            median_radius: 0,
            min_contrast: DEFAULT_MIN_CONTRAST,
            alarm: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameNote {
    /// Every ROI pixel had the same intensity.
    DegenerateHistogram,
    /// The Otsu split did not reach the configured minimum contrast.
    LowContrast,
}

/// Settings echoed into each report so outputs are self-describing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub threshold: ThresholdMode,
    /// The intensity actually used, when a split was applied.
    pub threshold_used: Option<u8>,
    pub polarity: Polarity,
    pub connectivity: Connectivity,
    pub roi: RoiMask,
    pub median_radius: usize,
    pub min_contrast: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<FrameNote>,
}

/// Analyze one grayscale frame.
///
/// The Otsu histogram is taken over ROI pixels only, and foreground outside
/// the ROI is cleared regardless of polarity.
pub fn analyze(
    img: &GrayImage,
    cfg: &AnalysisConfig,
    on_degenerate: DegeneratePolicy,
) -> Result<ClotReport, AnalysisError> {
    let filtered;
    let img = if cfg.median_radius > 0 {
        filtered = median_filter(img, cfg.median_radius);
        &filtered
    } else {
        img
    };
    let (w, h) = (img.width(), img.height());
    let roi_grid = cfg.roi.to_grid(w, h);
    let roi_area = roi_grid.iter().filter(|&&b| b).count() as u64;
    if roi_area == 0 {
        return Err(MetricsError::RoiTooSmall.into());
    }
    let masked = apply_roi(img, &cfg.roi);

    let (threshold, note) = match cfg.policy.mode {
        ThresholdMode::Fixed(t) => (Some(t), None),
        ThresholdMode::Otsu => match otsu_split(&Histogram::from_masked(&masked, &roi_grid)) {
            Ok(split) if split.mean_above - split.mean_below < f64::from(cfg.min_contrast) => {
                (Some(split.threshold), Some(FrameNote::LowContrast))
            }
            Ok(split) => (Some(split.threshold), None),
            Err(e) => match on_degenerate {
                DegeneratePolicy::Fail => return Err(e.into()),
                DegeneratePolicy::NoForeground => (None, Some(FrameNote::DegenerateHistogram)),
            },
        },
    };

    let components = match (threshold, note) {
        (Some(t), None) => {
            let mut bin = binarize_at(&masked, t, cfg.policy.polarity);
            bin.mask_with(&roi_grid);
            label_components(&bin, cfg.connectivity).1
        }
        _ => Vec::new(),
    };

    let mut report = quantify(&components, roi_area, cfg.min_size)?;
    report.alarm = cfg.alarm.as_ref().map(|a| check_alarm(&report, a));
    report.settings = Some(AnalysisSettings {
        threshold: cfg.policy.mode,
        threshold_used: if note.is_none() { threshold } else { None },
        polarity: cfg.policy.polarity,
        connectivity: cfg.connectivity,
        roi: cfg.roi,
        median_radius: cfg.median_radius,
        min_contrast: cfg.min_contrast,
        note,
    });
    Ok(report)
}
