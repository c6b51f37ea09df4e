//! Image representation, decoding and preprocessing.
//!
//! Pixel centers sit at integer coordinates `(col, row)` with the origin at the
//! top-left corner; `x = col` grows rightward and `y = row` grows downward.

mod median;
mod pgm;
mod png_input;
pub(crate) mod roi;

use std::path::Path;

use thiserror::Error;

pub use median::median_filter;
pub use pgm::{decode_pgm, encode_pgm};
pub use roi::{apply_roi, disk_contains, roi_area, RoiMask};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported maxval {0} (must be at most 255)")]
    UnsupportedMaxval(u32),
    #[error("sample {value} at index {index} exceeds maxval {maxval}")]
    InvalidSample {
        index: usize,
        value: u32,
        maxval: u32,
    },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid image dimensions {width}x{height} for {len} samples")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ImageError>;

/// 8-bit single-channel image stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(data.len()) {
            return Err(ImageError::InvalidDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image filled with a single intensity.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }
}

/// 8-bit RGB image, row-major interleaved triples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        let expected = width.checked_mul(height).and_then(|n| n.checked_mul(3));
        if width == 0 || height == 0 || expected != Some(data.len()) {
            return Err(ImageError::InvalidDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }
}

/// Rec.601 luminance of one pixel, rounded half away from zero.
#[inline]
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    // f64::round rounds half away from zero.
    y.round().clamp(0.0, 255.0) as u8
}

pub fn to_gray(img: &RgbImage) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| luminance(px[0], px[1], px[2]))
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Decode a PGM (P2/P5) or 8-bit PNG file, sniffing the format from its
/// leading bytes rather than the extension.
pub fn decode_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = std::fs::read(path.as_ref())?;
    decode_bytes(&bytes)
}

/// Decode an in-memory PGM or PNG file.
pub fn decode_bytes(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(png_input::PNG_SIGNATURE) {
        png_input::decode_png(bytes)
    } else {
        let magic: String = bytes
            .iter()
            .take(4)
            .map(|&b| if b.is_ascii_graphic() { b as char } else { '.' })
            .collect();
        Err(ImageError::UnsupportedFormat(format!(
            "unrecognized magic bytes {magic:?}"
        )))
    }
}
