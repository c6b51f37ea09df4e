//! Histogram thresholding of grayscale filter images into clot masks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::image_core::GrayImage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BinarizeError {
    #[error("degenerate histogram: every pixel has the same intensity, no threshold split exists")]
    DegenerateHistogram,
}

/// Relative tolerance under which two between-class variances count as tied.
pub const OTSU_TIE_TOLERANCE: f64 = 1e-9;

/// Row-major boolean grid; `true` marks a foreground (clot) pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    /// Panics if `bits.len() != width * height` or a dimension is zero.
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert!(
            width > 0 && height > 0,
            "binary image dimensions must be nonzero"
        );
        assert_eq!(
            bits.len(),
            width * height,
            "bit count must equal width*height"
        );
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn foreground_count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Clear every bit where `keep` is false.
    pub fn mask_with(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.bits.len());
        for (b, &k) in self.bits.iter_mut().zip(keep) {
            *b &= k;
        }
    }
}

/// Intensity histogram: `bins[i]` counts pixels of value `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; 256],
    total: u64,
}

impl Histogram {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        let total = bins.iter().sum();
        Self { bins, total }
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Histogram of the pixels whose entry in `include` is true.
    pub fn from_masked(img: &GrayImage, include: &[bool]) -> Self {
        assert_eq!(include.len(), img.data().len());
        let mut bins = [0u64; 256];
        for (&v, &inside) in img.data().iter().zip(include) {
            if inside {
                bins[v as usize] += 1;
            }
        }
        Self::from_bins(bins)
    }
}

pub fn histogram(img: &GrayImage) -> Histogram {
    let mut bins = [0u64; 256];
    for &v in img.data() {
        bins[v as usize] += 1;
    }
    Histogram {
        bins,
        total: img.data().len() as u64,
    }
}

/// Foreground polarity: which side of the threshold is clot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// `pixel <= t` is foreground (dark clots on a white filter).
    #[default]
    Dark,
    /// `pixel > t` is foreground.
    Light,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    Fixed(u8),
    #[default]
    Otsu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub mode: ThresholdMode,
    pub polarity: Polarity,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdMode::Fixed(t) => write!(f, "{t}"),
            ThresholdMode::Otsu => f.write_str("otsu"),
        }
    }
}

impl FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("otsu") {
            return Ok(ThresholdMode::Otsu);
        }
        s.parse::<u8>()
            .map(ThresholdMode::Fixed)
            .map_err(|_| format!("threshold must be 0-255 or 'otsu', got {s:?}"))
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Dark => "dark",
            Polarity::Light => "light",
        })
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dark" => Ok(Polarity::Dark),
            "light" => Ok(Polarity::Light),
            _ => Err(format!("polarity must be 'dark' or 'light', got {s:?}")),
        }
    }
}

// "otsu" or a bare integer in JSON
impl Serialize for ThresholdMode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ThresholdMode::Fixed(t) => s.serialize_u8(*t),
            ThresholdMode::Otsu => s.serialize_str("otsu"),
        }
    }
}

impl<'de> Deserialize<'de> for ThresholdMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Fixed(u8),
            Named(String),
        }
        match Repr::deserialize(d)? {
            Repr::Fixed(t) => Ok(ThresholdMode::Fixed(t)),
            Repr::Named(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// The split selected by Otsu's criterion together with its class statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OtsuSplit {
    pub threshold: u8,
    /// Mean intensity of the `<= threshold` class.
    pub mean_below: f64,
    /// Mean intensity of the `> threshold` class.
    pub mean_above: f64,
    /// Between-class variance `w0 * w1 * (mu0 - mu1)^2`.
    pub variance: f64,
}

/// Otsu's threshold with class statistics.
///
/// Class counts and first moments are accumulated exactly in integers; only
/// the final ratio is taken in floating point. Among candidates whose
/// variance is within [`OTSU_TIE_TOLERANCE`] (relative) of the maximum, the
/// smallest threshold wins.
pub fn otsu_split(hist: &Histogram) -> Result<OtsuSplit, BinarizeError> {
    let populated = hist.bins.iter().filter(|&&c| c > 0).count();
    if populated < 2 {
        return Err(BinarizeError::DegenerateHistogram);
    }
    let total = u128::from(hist.total);
    let moment: u128 = hist
        .bins
        .iter()
        .enumerate()
        .map(|(i, &c)| i as u128 * u128::from(c))
        .sum();

    // scores[t] = (s0*n1 - s1*n0)^2 / (n0*n1), i.e. sigma_B^2 * N^2
    let mut scores = [0f64; 255];
    let mut n0 = 0u128;
    let mut s0 = 0u128;
    for (t, score) in scores.iter_mut().enumerate() {
        let c = u128::from(hist.bins[t]);
        n0 += c;
        s0 += t as u128 * c;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = moment - s0;
        // exact for any image below ~2^59 pixels
        let diff = match (s0.checked_mul(n1), s1.checked_mul(n0)) {
            (Some(a), Some(b)) => a.abs_diff(b) as f64,
            _ => (s0 as f64 * n1 as f64 - s1 as f64 * n0 as f64).abs(),
        };
        *score = diff * diff / (n0 as f64 * n1 as f64);
    }
    let best = scores.iter().copied().fold(0f64, f64::max);
    let threshold = scores
        .iter()
        .position(|&s| s >= best * (1.0 - OTSU_TIE_TOLERANCE))
        .expect("maximum is attained") as u8;

    let (mut n0, mut s0) = (0u128, 0u128);
    for i in 0..=threshold as usize {
        n0 += u128::from(hist.bins[i]);
        s0 += i as u128 * u128::from(hist.bins[i]);
    }
    let n1 = total - n0;
    let s1 = moment - s0;
    Ok(OtsuSplit {
        threshold,
        mean_below: s0 as f64 / n0 as f64,
        mean_above: s1 as f64 / n1 as f64,
        variance: best / (total as f64 * total as f64),
    })
}

pub fn otsu_threshold(hist: &Histogram) -> Result<u8, BinarizeError> {
    otsu_split(hist).map(|s| s.threshold)
}

/// Threshold at a known intensity.
pub fn binarize_at(img: &GrayImage, threshold: u8, polarity: Polarity) -> BinaryImage {
    let bits = img
        .data()
        .iter()
        .map(|&v| match polarity {
            Polarity::Dark => v <= threshold,
            Polarity::Light => v > threshold,
        })
        .collect();
    BinaryImage::new(img.width(), img.height(), bits)
}

/// Resolve the policy's threshold for `img` (computing Otsu when requested).
pub fn resolve_threshold(img: &GrayImage, policy: &ThresholdPolicy) -> Result<u8, BinarizeError> {
    match policy.mode {
        ThresholdMode::Fixed(t) => Ok(t),
        ThresholdMode::Otsu => otsu_threshold(&histogram(img)),
    }
}

pub fn binarize(img: &GrayImage, policy: &ThresholdPolicy) -> Result<BinaryImage, BinarizeError> {
    let t = resolve_threshold(img, policy)?;
    Ok(binarize_at(img, t, policy.polarity))
}
