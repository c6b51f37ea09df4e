use serde::{Deserialize, Serialize};

use super::{GrayImage, ImageError, Result};

/// Region of the frame that belongs to the filter face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RoiMask {
    #[default]
    FullFrame,
    Disk {
        center_x: f64,
        center_y: f64,
        radius: f64,
    },
}

/// Inside test shared by ROI masking and scene rasterization: the pixel
/// center `(col, row)` lies within the closed disk.
#[inline]
pub fn disk_contains(cx: f64, cy: f64, radius: f64, col: usize, row: usize) -> bool {
    let dx = col as f64 - cx;
    let dy = row as f64 - cy;
    dx * dx + dy * dy <= radius * radius
}

/// Inclusive pixel index range covering `[center - radius, center + radius]`,
/// clipped to `0..len`. `None` when the interval misses the image.
pub(crate) fn clipped_span(center: f64, radius: f64, len: usize) -> Option<(usize, usize)> {
    let lo = (center - radius).ceil().max(0.0);
    let hi = (center + radius).floor().min(len as f64 - 1.0);
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return None;
    }
    Some((lo as usize, hi as usize))
}

impl RoiMask {
    pub fn disk(center_x: f64, center_y: f64, radius: f64) -> Result<Self> {
        let mask = RoiMask::Disk {
            center_x,
            center_y,
            radius,
        };
        mask.validate()?;
        Ok(mask)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RoiMask::FullFrame => Ok(()),
            RoiMask::Disk {
                center_x,
                center_y,
                radius,
            } => {
                if !(center_x.is_finite() && center_y.is_finite()) {
                    return Err(ImageError::InvalidRoi("disk center must be finite".into()));
                }
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(ImageError::InvalidRoi(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
        }
    }

    #[inline]
    pub fn contains(&self, col: usize, row: usize) -> bool {
        match *self {
            RoiMask::FullFrame => true,
            RoiMask::Disk {
                center_x,
                center_y,
                radius,
            } => disk_contains(center_x, center_y, radius, col, row),
        }
    }

    /// Row-major membership grid for a `width` x `height` frame.
    pub fn to_grid(&self, width: usize, height: usize) -> Vec<bool> {
        let mut grid = vec![false; width * height];
        match *self {
            RoiMask::FullFrame => grid.fill(true),
            RoiMask::Disk {
                center_x,
                center_y,
                radius,
            } => {
                if let (Some((r0, r1)), Some((c0, c1))) = (
                    clipped_span(center_y, radius, height),
                    clipped_span(center_x, radius, width),
                ) {
                    for row in r0..=r1 {
                        for col in c0..=c1 {
                            if disk_contains(center_x, center_y, radius, col, row) {
                                grid[row * width + col] = true;
                            }
                        }
                    }
                }
            }
        }
        grid
    }
}

/// Set every pixel outside the mask to white (255).
pub fn apply_roi(img: &GrayImage, mask: &RoiMask) -> GrayImage {
    let mut out = img.clone();
    if let RoiMask::FullFrame = mask {
        return out;
    }
    let grid = mask.to_grid(img.width(), img.height());
    for (px, inside) in out.data_mut().iter_mut().zip(grid) {
        if !inside {
            *px = 255;
        }
    }
    out
}

/// Number of pixel centers inside both the mask and the frame.
pub fn roi_area(mask: &RoiMask, width: usize, height: usize) -> u64 {
    match mask {
        RoiMask::FullFrame => (width * height) as u64,
        disk => disk
            .to_grid(width, height)
            .into_iter()
            .filter(|&b| b)
            .count() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_area(cx: f64, cy: f64, r: f64, w: usize, h: usize) -> u64 {
        let mut n = 0;
        for row in 0..h {
            for col in 0..w {
                let (dx, dy) = (col as f64 - cx, row as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    n += 1;
                }
            }
        }
        n
    }

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::new(w, h, (0..w * h).map(|i| (i * 7 % 200) as u8).collect()).unwrap()
    }

    #[test]
    fn full_frame_is_identity() {
        let img = ramp(5, 4);
        assert_eq!(apply_roi(&img, &RoiMask::FullFrame), img);
        assert_eq!(roi_area(&RoiMask::FullFrame, 4, 3), 12);
    }

    #[test]
    fn half_pixel_disk_keeps_center_only() {
        let img = ramp(5, 5);
        let out = apply_roi(&img, &RoiMask::disk(2.0, 2.0, 0.5).unwrap());
        for row in 0..5 {
            for col in 0..5 {
                if (col, row) == (2, 2) {
                    assert_eq!(out.get(col, row), img.get(col, row));
                } else {
                    assert_eq!(out.get(col, row), 255);
                }
            }
        }
        assert_eq!(roi_area(&RoiMask::disk(2.0, 2.0, 0.5).unwrap(), 5, 5), 1);
    }

    #[test]
    fn radius_one_and_a_half_keeps_nine() {
        let mask = RoiMask::disk(2.0, 2.0, 1.5).unwrap();
        // oracle: offsets with dx^2 + dy^2 <= 2.25 are the 3x3 block
        assert_eq!(brute_force_area(2.0, 2.0, 1.5, 5, 5), 9);
        assert_eq!(roi_area(&mask, 5, 5), 9);
        let img = GrayImage::filled(5, 5, 0);
        let kept = apply_roi(&img, &mask)
            .data()
            .iter()
            .filter(|&&v| v == 0)
            .count();
        assert_eq!(kept, 9);
    }

    #[test]
    fn invalid_radius_rejected() {
        assert!(RoiMask::disk(1.0, 1.0, 0.0).is_err());
        assert!(RoiMask::disk(1.0, 1.0, -2.0).is_err());
        assert!(RoiMask::disk(f64::NAN, 1.0, 2.0).is_err());
    }

    #[test]
    fn partial_and_outside_disks() {
        let corner = RoiMask::disk(0.0, 0.0, 1.0).unwrap();
        assert_eq!(roi_area(&corner, 4, 4), 3);
        let outside = RoiMask::disk(-10.0, -10.0, 2.0).unwrap();
        assert_eq!(roi_area(&outside, 4, 4), 0);
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&RoiMask::disk(1.5, 2.0, 3.0).unwrap()).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"disk","center_x":1.5,"center_y":2.0,"radius":3.0}"#
        );
        let back: RoiMask = serde_json::from_str(r#"{"kind":"full-frame"}"#).unwrap();
        assert_eq!(back, RoiMask::FullFrame);
    }

    proptest! {
        #[test]
        fn area_matches_enumeration(
            cx in -5.0f64..25.0, cy in -5.0f64..25.0, r in 0.01f64..15.0,
            w in 1usize..20, h in 1usize..20,
        ) {
            let mask = RoiMask::disk(cx, cy, r).unwrap();
            prop_assert_eq!(roi_area(&mask, w, h), brute_force_area(cx, cy, r, w, h));
        }

        #[test]
        fn area_monotone_in_radius(cx in 0.0f64..16.0, cy in 0.0f64..16.0, r in 0.1f64..10.0, dr in 0.0f64..5.0) {
            let a = roi_area(&RoiMask::disk(cx, cy, r).unwrap(), 16, 16);
            let b = roi_area(&RoiMask::disk(cx, cy, r + dr).unwrap(), 16, 16);
            prop_assert!(a <= b);
        }

        #[test]
        fn apply_roi_idempotent(cx in 0.0f64..12.0, cy in 0.0f64..12.0, r in 0.5f64..8.0, seed in any::<u8>()) {
            let img = GrayImage::new(12, 12, (0..144).map(|i| (i as u8).wrapping_mul(seed | 1)).collect()).unwrap();
            let mask = RoiMask::disk(cx, cy, r).unwrap();
            let once = apply_roi(&img, &mask);
            prop_assert_eq!(apply_roi(&once, &mask), once);
        }
    }
}
