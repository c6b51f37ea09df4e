//! Two-pass connected-component labeling of binary clot masks.
//!
//! The first raster pass hands out provisional labels and records label
//! equivalences in a [`UnionFind`]; the second pass resolves each provisional
//! label to its set root and renumbers roots densely in order of first
//! appearance (topmost, then leftmost pixel).

mod union_find;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binarize::BinaryImage;
use crate::image_core::GrayImage;

pub use union_find::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    /// Neighbor offsets `(dcol, drow)` for this adjacency.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, 0),
            (1, 0),
            (0, -1),
            (0, 1),
            (-1, -1),
            (1, -1),
            (-1, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(format!("connectivity must be 4 or 8, got {v}")),
        }
    }
}

impl FromStr for Connectivity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<u8>()
            .map_err(|_| format!("connectivity must be 4 or 8, got {s:?}"))
            .and_then(Connectivity::try_from)
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// Per-pixel component labels, row-major; 0 is background and foreground
/// labels are dense in `1..=num_labels`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    num_labels: u32,
}

impl LabelMap {
    /// Wrap an existing label grid. Returns `None` when the size is wrong or
    /// the labels are not dense `1..=N`.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Option<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return None;
        }
        let max = labels.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; max as usize + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if !seen[1..].iter().all(|&s| s) {
            return None;
        }
        Some(Self {
            width,
            height,
            labels,
            num_labels: max,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_labels(&self) -> u32 {
        self.num_labels
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Debug rendering with labels clamped to 255. Not a stable format.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l.min(255) as u8).collect(),
        )
        .expect("label map dimensions are valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_col: usize,
    pub min_row: usize,
    pub max_col: usize,
    pub max_row: usize,
}

impl BoundingBox {
    pub fn contains(&self, col: f64, row: f64) -> bool {
        col >= self.min_col as f64
            && col <= self.max_col as f64
            && row >= self.min_row as f64
            && row <= self.max_row as f64
    }
}

/// One detected clot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub label: u32,
    /// Member pixel count.
    pub area: u64,
    pub bbox: BoundingBox,
    /// Mean `(col, row)` of the member pixels.
    pub centroid: (f64, f64),
}

#[derive(Clone, Copy)]
struct Accum {
    area: u64,
    sum_col: u64,
    sum_row: u64,
    bbox: BoundingBox,
}

impl Accum {
    fn new(col: usize, row: usize) -> Self {
        Self {
            area: 0,
            sum_col: 0,
            sum_row: 0,
            bbox: BoundingBox {
                min_col: col,
                min_row: row,
                max_col: col,
                max_row: row,
            },
        }
    }

    #[inline]
    fn add(&mut self, col: usize, row: usize) {
        self.area += 1;
        self.sum_col += col as u64;
        self.sum_row += row as u64;
        let b = &mut self.bbox;
        b.min_col = b.min_col.min(col);
        b.max_col = b.max_col.max(col);
        b.min_row = b.min_row.min(row);
        b.max_row = b.max_row.max(row);
    }

    fn finish(self, label: u32) -> Component {
        Component {
            label,
            area: self.area,
            bbox: self.bbox,
            centroid: (
                self.sum_col as f64 / self.area as f64,
                self.sum_row as f64 / self.area as f64,
            ),
        }
    }
}

/// Label the foreground of `bin` and gather per-component statistics.
pub fn label_components(bin: &BinaryImage, conn: Connectivity) -> (LabelMap, Vec<Component>) {
    let (w, h) = (bin.width(), bin.height());
    let bits = bin.bits();
    let mut provisional = vec![0u32; w * h];
    let mut uf = UnionFind::new(1); // slot 0 is background

    for row in 0..h {
        for col in 0..w {
            let idx = row * w + col;
            if !bits[idx] {
                continue;
            }
            // already-visited neighbors: W, NW, N, NE
            let mut neighbors = [0u32; 4];
            let mut n = 0;
            if col > 0 && provisional[idx - 1] != 0 {
                neighbors[n] = provisional[idx - 1];
                n += 1;
            }
            if row > 0 {
                let up = idx - w;
                if provisional[up] != 0 {
                    neighbors[n] = provisional[up];
                    n += 1;
                }
                if conn == Connectivity::Eight {
                    if col > 0 && provisional[up - 1] != 0 {
                        neighbors[n] = provisional[up - 1];
                        n += 1;
                    }
                    if col + 1 < w && provisional[up + 1] != 0 {
                        neighbors[n] = provisional[up + 1];
                        n += 1;
                    }
                }
            }
            provisional[idx] = match neighbors[..n].iter().copied().min() {
                None => uf.push(),
                Some(first) => {
                    for &other in &neighbors[..n] {
                        if other != first {
                            uf.union(first, other);
                        }
                    }
                    first
                }
            };
        }
    }

    // resolve roots to dense labels in first-appearance order
    let mut final_of_root = vec![0u32; uf.len()];
    let mut accums: Vec<Accum> = Vec::new();
    let mut labels = provisional;
    for row in 0..h {
        for col in 0..w {
            let idx = row * w + col;
            let p = labels[idx];
            if p == 0 {
                continue;
            }
            let root = uf.find(p) as usize;
            if final_of_root[root] == 0 {
                accums.push(Accum::new(col, row));
                final_of_root[root] = accums.len() as u32;
            }
            let label = final_of_root[root];
            accums[label as usize - 1].add(col, row);
            labels[idx] = label;
        }
    }

    let num_labels = accums.len() as u32;
    let components = accums
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.finish(i as u32 + 1))
        .collect();
    (
        LabelMap {
            width: w,
            height: h,
            labels,
            num_labels,
        },
        components,
    )
}

/// Recompute component statistics directly from a label map.
pub fn component_stats(map: &LabelMap) -> Vec<Component> {
    let mut accums: Vec<Option<Accum>> = vec![None; map.num_labels as usize];
    for row in 0..map.height {
        for col in 0..map.width {
            let l = map.get(col, row);
            if l == 0 {
                continue;
            }
            accums[l as usize - 1]
                .get_or_insert_with(|| Accum::new(col, row))
                .add(col, row);
        }
    }
    accums
        .into_iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|a| a.finish(i as u32 + 1)))
        .collect()
}
