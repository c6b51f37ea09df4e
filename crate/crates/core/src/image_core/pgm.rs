use super::{GrayImage, ImageError, Result};

/// Byte cursor over a PNM header: whitespace-separated tokens with `#`
/// comments running to end of line.
struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| ImageError::MalformedHeader(format!("{what} out of range")))
    }
}

/// Decode a binary (`P5`) or ASCII (`P2`) graymap with maxval at most 255.
///
/// Samples are returned as stored; they are not rescaled to a 255 maxval.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(ImageError::MalformedHeader("bad magic number".into())),
    };
    let mut header = HeaderReader { bytes, pos: 2 };
    if !header
        .bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(ImageError::MalformedHeader("bad magic number".into()));
    }
    let width = header.next_uint("width")? as usize;
    let height = header.next_uint("height")? as usize;
    let maxval = header.next_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 {
        return Err(ImageError::MalformedHeader(
            "maxval must be positive".into(),
        ));
    }
    if maxval > 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| ImageError::MalformedHeader("dimensions overflow".into()))?;

    let data = if binary {
        // exactly one whitespace byte separates maxval from the raster
        match bytes.get(header.pos) {
            Some(b) if b.is_ascii_whitespace() => {}
            _ => {
                return Err(ImageError::MalformedHeader(
                    "missing whitespace after maxval".into(),
                ))
            }
        }
        let raster = &bytes[header.pos + 1..];
        if raster.len() < expected {
            return Err(ImageError::TruncatedData {
                expected,
                found: raster.len(),
            });
        }
        let raster = &raster[..expected];
        if let Some(index) = raster.iter().position(|&v| u32::from(v) > maxval) {
            return Err(ImageError::InvalidSample {
                index,
                value: u32::from(raster[index]),
                maxval,
            });
        }
        raster.to_vec()
    } else {
        let mut data = Vec::with_capacity(expected);
        while data.len() < expected {
            header.skip_whitespace_and_comments();
            if header.pos >= bytes.len() {
                return Err(ImageError::TruncatedData {
                    expected,
                    found: data.len(),
                });
            }
            let value = header.next_uint("sample").map_err(|_| {
                ImageError::MalformedHeader(format!("invalid ASCII sample at index {}", data.len()))
            })?;
            if value > maxval {
                return Err(ImageError::InvalidSample {
                    index: data.len(),
                    value,
                    maxval,
                });
            }
            data.push(value as u8);
        }
        data
    };
    GrayImage::new(width, height, data)
}

/// Encode as binary `P5` with maxval 255 and a single-space header.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5 {} {} 255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.data());
    out
}
