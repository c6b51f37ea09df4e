use super::GrayImage;

/// Median filter over a `(2r+1)²` window.
///
/// Windows are clipped at the image border rather than padded, and an
/// even-sized clipped window yields its lower median. A radius of zero
/// returns the image unchanged.
pub fn median_filter(img: &GrayImage, radius: usize) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    if radius == 0 {
        return out;
    }
    let mut counts = [0u32; 256];
    for row in 0..h {
        let r0 = row.saturating_sub(radius);
        let r1 = (row + radius).min(h - 1);
        for col in 0..w {
            let c0 = col.saturating_sub(radius);
            let c1 = (col + radius).min(w - 1);
            counts.fill(0);
            for rr in r0..=r1 {
                for &v in &img.data()[rr * w + c0..=rr * w + c1] {
                    counts[v as usize] += 1;
                }
            }
            let n = ((r1 - r0 + 1) * (c1 - c0 + 1)) as u32;
            // zero-based rank of the lower median
            let rank = (n - 1) / 2;
            let mut seen = 0u32;
            for (value, &c) in counts.iter().enumerate() {
                seen += c;
                if seen > rank {
                    out.set(col, row, value as u8);
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_image_unchanged() {
        let img = GrayImage::filled(7, 5, 93);
        assert_eq!(median_filter(&img, 2), img);
    }

    #[test]
    fn isolated_spike_removed() {
        let mut img = GrayImage::filled(3, 3, 0);
        img.set(1, 1, 255);
        assert_eq!(median_filter(&img, 1).get(1, 1), 0);
    }

    #[test]
    fn clipped_windows_use_lower_median() {
        let img = GrayImage::new(3, 1, vec![0, 255, 0]).unwrap();
        assert_eq!(median_filter(&img, 1).data(), &[0, 0, 0]);
        let img = GrayImage::new(2, 1, vec![10, 200]).unwrap();
        assert_eq!(median_filter(&img, 1).data(), &[10, 10]);
    }

    fn sorted_window(img: &GrayImage, col: usize, row: usize, r: usize) -> Vec<u8> {
        let mut v = Vec::new();
        for rr in row.saturating_sub(r)..=(row + r).min(img.height() - 1) {
            for cc in col.saturating_sub(r)..=(col + r).min(img.width() - 1) {
                v.push(img.get(cc, rr));
            }
        }
        v.sort_unstable();
        v
    }

    proptest! {
        #[test]
        fn matches_sorting_oracle(w in 1usize..10, h in 1usize..10, r in 1usize..4, data in proptest::collection::vec(any::<u8>(), 100)) {
            let img = GrayImage::new(w, h, data[..w * h].to_vec()).unwrap();
            let out = median_filter(&img, r);
            for row in 0..h {
                for col in 0..w {
                    let win = sorted_window(&img, col, row, r);
                    prop_assert_eq!(out.get(col, row), win[(win.len() - 1) / 2]);
                }
            }
        }
    }
}
