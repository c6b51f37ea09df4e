use std::io::Cursor;

use super::{to_gray, GrayImage, ImageError, Result, RgbImage};

pub(super) const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Decode a PNG, normalizing to 8 bits per channel. Alpha is discarded and
/// color images go through [`to_gray`].
pub(super) fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = reader_or_err(decoder.read_info())?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::UnsupportedFormat("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader_or_err(reader.next_frame(&mut buf))?;
    buf.truncate(info.buffer_size());
    let (width, height) = (info.width as usize, info.height as usize);

    match info.color_type {
        png::ColorType::Grayscale => GrayImage::new(width, height, buf),
        png::ColorType::GrayscaleAlpha => {
            GrayImage::new(width, height, buf.chunks_exact(2).map(|p| p[0]).collect())
        }
        png::ColorType::Rgb => Ok(to_gray(&RgbImage::new(width, height, buf)?)),
        png::ColorType::Rgba => {
            let rgb = buf
                .chunks_exact(4)
                .flat_map(|p| [p[0], p[1], p[2]])
                .collect();
            Ok(to_gray(&RgbImage::new(width, height, rgb)?))
        }
        other => Err(ImageError::UnsupportedFormat(format!(
            "PNG color type {other:?}"
        ))),
    }
}

fn reader_or_err<T>(r: std::result::Result<T, png::DecodingError>) -> Result<T> {
    r.map_err(|e| match e {
        png::DecodingError::IoError(io) => ImageError::Io(io),
        other => ImageError::UnsupportedFormat(format!("PNG: {other}")),
    })
}
