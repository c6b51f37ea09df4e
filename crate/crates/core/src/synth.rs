//! Deterministic synthetic filter images with known clot ground truth.
//!
//! Scenes are white filter faces carrying dark disks. A disk covers pixel
//! `(col, row)` when `(col-cx)^2 + (row-cy)^2 <= r^2`, the same test used for
//! ROI masks, so rendered frames and the rasterization oracle agree exactly.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image_core::{apply_roi, disk_contains, roi::clipped_span, GrayImage, RoiMask};
use crate::labeling::Connectivity;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid growth model: {0}")]
    InvalidModel(String),
    #[error("scene file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn default_background() -> u8 {
    250
}

fn default_clot_intensity() -> u8 {
    40
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    #[serde(default = "default_clot_intensity")]
    pub intensity: u8,
}

impl Disk {
    pub fn new(cx: f64, cy: f64, radius: f64) -> Self {
        Self {
            cx,
            cy,
            radius,
            intensity: default_clot_intensity(),
        }
    }

    /// Pixel centers covered by this disk inside a `width` x `height` frame,
    /// in raster order.
    pub fn pixels(&self, width: usize, height: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let rows = clipped_span(self.cy, self.radius, height);
        let cols = clipped_span(self.cx, self.radius, width);
        let (r0, r1, c0, c1) = match (rows, cols) {
            (Some((r0, r1)), Some((c0, c1))) => (r0, r1 + 1, c0, c1 + 1),
            _ => (0, 0, 0, 0),
        };
        (r0..r1).flat_map(move |row| {
            (c0..c1)
                .filter(move |&col| disk_contains(self.cx, self.cy, self.radius, col, row))
                .map(move |col| (col, row))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClotScene {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_background")]
    pub background: u8,
    #[serde(default)]
    pub clots: Vec<Disk>,
    #[serde(default)]
    pub roi: RoiMask,
    /// Circuit flow rate annotation (ml/min); never used by the growth law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_rate_ml_min: Option<f64>,
}

impl ClotScene {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            background: default_background(),
            clots: Vec::new(),
            roi: RoiMask::FullFrame,
            flow_rate_ml_min: None,
        }
    }

    pub fn with_clot(mut self, disk: Disk) -> Self {
        self.clots.push(disk);
        self
    }

    pub fn with_roi(mut self, roi: RoiMask) -> Self {
        self.roi = roi;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::InvalidScene(format!(
                "dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        for (i, d) in self.clots.iter().enumerate() {
            if !(d.cx.is_finite() && d.cy.is_finite()) {
                return Err(SynthError::InvalidScene(format!(
                    "clot {i} has a non-finite center"
                )));
            }
            if !(d.radius.is_finite() && d.radius >= 0.0) {
                return Err(SynthError::InvalidScene(format!(
                    "clot {i} radius must be >= 0, got {}",
                    d.radius
                )));
            }
        }
        self.roi
            .validate()
            .map_err(|e| SynthError::InvalidScene(e.to_string()))
    }

    /// Row-major grid of clot pixels (inside some disk and inside the ROI).
    pub fn clot_mask(&self) -> Vec<bool> {
        let (w, h) = (self.width, self.height);
        let mut grid = vec![false; w * h];
        for d in &self.clots {
            for (col, row) in d.pixels(w, h) {
                grid[row * w + col] = true;
            }
        }
        let roi = self.roi.to_grid(w, h);
        for (g, inside) in grid.iter_mut().zip(roi) {
            *g &= inside;
        }
        grid
    }
}

/// A clot that appears at `time` minutes with zero radius and then grows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nucleation {
    pub time: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default = "default_clot_intensity")]
    pub intensity: u8,
}

/// Linear-in-area clot growth: every clot gains `area_rate` px²/min.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct GrowthModel {
    #[serde(default)]
    pub area_rate: f64,
    #[serde(default)]
    pub nucleation_times: Vec<Nucleation>,
    #[serde(default)]
    pub noise_stddev: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GrowthModel {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.area_rate.is_finite() && self.area_rate >= 0.0) {
            return Err(SynthError::InvalidModel(format!(
                "area_rate must be >= 0, got {}",
                self.area_rate
            )));
        }
        if !(self.noise_stddev.is_finite() && self.noise_stddev >= 0.0) {
            return Err(SynthError::InvalidModel(format!(
                "noise_stddev must be >= 0, got {}",
                self.noise_stddev
            )));
        }
        if self
            .nucleation_times
            .iter()
            .any(|n| !(n.time.is_finite() && n.time >= 0.0 && n.cx.is_finite() && n.cy.is_finite()))
        {
            return Err(SynthError::InvalidModel(
                "nucleation entries need finite, nonnegative times and finite positions".into(),
            ));
        }
        Ok(())
    }
}

/// On-disk scene description: the initial scene plus an optional growth model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub scene: ClotScene,
    #[serde(default)]
    pub model: GrowthModel,
}

impl SceneFile {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let file: SceneFile = serde_json::from_str(text)?;
        file.scene.validate()?;
        file.model.validate()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Noise-free raster of the scene. Overlapping disks take the darkest
/// intensity; pixels outside the ROI are set to 255.
pub fn render(scene: &ClotScene) -> GrayImage {
    let (w, h) = (scene.width, scene.height);
    let mut img = GrayImage::filled(w, h, scene.background);
    let mut covered = vec![false; w * h];
    for d in &scene.clots {
        for (col, row) in d.pixels(w, h) {
            let idx = row * w + col;
            let px = &mut img.data_mut()[idx];
            if !covered[idx] || d.intensity < *px {
                *px = d.intensity;
            }
            covered[idx] = true;
        }
    }
    apply_roi(&img, &scene.roi)
}

/// Ground-truth component count and clot pixel total, computed by flood fill
/// over the scene raster.
pub fn expected_components(scene: &ClotScene, conn: Connectivity) -> (usize, u64) {
    let (w, h) = (scene.width, scene.height);
    let mut open = scene.clot_mask();
    let total = open.iter().filter(|&&b| b).count() as u64;
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !open[start] {
            continue;
        }
        count += 1;
        open[start] = false;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (c, r) = ((i % w) as isize, (i / w) as isize);
            for &(dc, dr) in conn.offsets() {
                let (nc, nr) = (c + dc, r + dr);
                if nc >= 0 && nr >= 0 && (nc as usize) < w && (nr as usize) < h {
                    let j = nr as usize * w + nc as usize;
                    if open[j] {
                        open[j] = false;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (count, total)
}

/// SplitMix64 generator.
///
/// State advances by the golden-ratio increment `0x9E3779B97F4A7C15`; each
/// output is the state passed through the standard SplitMix64 finalizer.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent standard normals via Box–Muller:
    /// `sqrt(-2 ln(1-u1)) * (cos 2πu2, sin 2πu2)`.
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * PI * u2;
        (radius * angle.cos(), radius * angle.sin())
    }
}

/// Add Gaussian noise pixel by pixel in raster order, consuming both
/// Box–Muller outputs in turn. Results round half away from zero and clamp
/// to `[0, 255]`.
pub fn add_noise(img: &GrayImage, stddev: f64, seed: u64) -> GrayImage {
    let mut out = img.clone();
    if stddev <= 0.0 {
        return out;
    }
    let mut rng = SplitMix64::new(seed);
    let mut spare: Option<f64> = None;
    for px in out.data_mut() {
        let z = match spare.take() {
            Some(z) => z,
            None => {
                let (a, b) = rng.next_gaussian_pair();
                spare = Some(b);
                a
            }
        };
        *px = (f64::from(*px) + stddev * z).round().clamp(0.0, 255.0) as u8;
    }
    out
}

#[inline]
fn grown_radius(r0: f64, area_rate: f64, dt: f64) -> f64 {
    (r0 * r0 + area_rate * dt / PI).sqrt()
}

/// Scene at `t` minutes: existing clots grown, nucleated clots appended in
/// list order once their time has come.
pub fn evolve(scene: &ClotScene, model: &GrowthModel, t: f64) -> ClotScene {
    assert!(t >= 0.0, "time must be nonnegative");
    let mut out = scene.clone();
    for d in &mut out.clots {
        d.radius = grown_radius(d.radius, model.area_rate, t);
    }
    out.clots.extend(
        model
            .nucleation_times
            .iter()
            .filter(|n| n.time <= t)
            .map(|n| Disk {
                cx: n.cx,
                cy: n.cy,
                radius: grown_radius(0.0, model.area_rate, t - n.time),
                intensity: n.intensity,
            }),
    );
    out
}

/// Per-frame noise seed for frame `index` of a simulated series.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Render frame `index` taken at `t` minutes, with the model's noise.
pub fn render_frame(scene0: &ClotScene, model: &GrowthModel, t: f64, index: usize) -> GrayImage {
    let img = render(&evolve(scene0, model, t));
    if model.noise_stddev > 0.0 {
        // noise only on the filter face; outside the ROI stays 255
        let noisy = add_noise(&img, model.noise_stddev, frame_seed(model.seed, index));
        apply_roi(&noisy, &scene0.roi)
    } else {
        img
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn count_dark(img: &GrayImage, below: u8) -> usize {
        img.data().iter().filter(|&&v| v < below).count()
    }

    #[test]
    fn empty_scene_is_background() {
        let img = render(&ClotScene::new(8, 6));
        assert!(img.data().iter().all(|&v| v == 250));
        let roi = RoiMask::disk(3.0, 3.0, 2.0).unwrap();
        let img = render(&ClotScene::new(8, 6).with_roi(roi));
        for row in 0..6 {
            for col in 0..8 {
                let want = if roi.contains(col, row) { 250 } else { 255 };
                assert_eq!(img.get(col, row), want);
            }
        }
        assert_eq!(
            expected_components(&ClotScene::new(8, 6), Connectivity::Eight),
            (0, 0)
        );
    }

    #[test]
    fn zero_radius_at_integer_center_is_one_pixel() {
        let scene = ClotScene::new(5, 5).with_clot(Disk::new(2.0, 3.0, 0.0));
        let img = render(&scene);
        assert_eq!(count_dark(&img, 100), 1);
        assert_eq!(img.get(2, 3), 40);
        let off_grid = ClotScene::new(5, 5).with_clot(Disk::new(2.5, 3.0, 0.0));
        assert_eq!(count_dark(&render(&off_grid), 100), 0);
    }

    #[test]
    fn radius_one_and_a_half_is_nine_pixels() {
        let scene = ClotScene::new(11, 11).with_clot(Disk::new(5.0, 5.0, 1.5));
        assert_eq!(count_dark(&render(&scene), 100), 9);
        assert_eq!(expected_components(&scene, Connectivity::Four), (1, 9));
    }

    #[test]
    fn darkest_overlap_wins() {
        let mut a = Disk::new(3.0, 3.0, 2.0);
        a.intensity = 60;
        let mut b = Disk::new(4.0, 3.0, 2.0);
        b.intensity = 20;
        let img = render(&ClotScene::new(8, 8).with_clot(a).with_clot(b));
        assert_eq!(img.get(3, 3), 20);
        assert_eq!(img.get(1, 3), 60);
        // lighter-than-background clots still paint
        let mut pale = Disk::new(1.0, 1.0, 0.0);
        pale.intensity = 252;
        assert_eq!(render(&ClotScene::new(3, 3).with_clot(pale)).get(1, 1), 252);
    }

    #[test]
    fn separated_and_diagonal_disks() {
        let scene = ClotScene::new(40, 20)
            .with_clot(Disk::new(5.0, 5.0, 3.0))
            .with_clot(Disk::new(20.0, 10.0, 2.0))
            .with_clot(Disk::new(33.0, 14.0, 4.0));
        assert_eq!(expected_components(&scene, Connectivity::Eight).0, 3);

        // single pixels at (2,2) and (3,3) touch only at a corner
        let diag = ClotScene::new(6, 6)
            .with_clot(Disk::new(2.0, 2.0, 0.0))
            .with_clot(Disk::new(3.0, 3.0, 0.0));
        assert_eq!(expected_components(&diag, Connectivity::Eight), (1, 2));
        assert_eq!(expected_components(&diag, Connectivity::Four), (2, 2));
    }

    #[test]
    fn disks_are_clipped_by_frame_and_roi() {
        let scene = ClotScene::new(10, 10)
            .with_clot(Disk::new(0.0, 0.0, 1.0))
            .with_roi(RoiMask::disk(9.0, 9.0, 3.0).unwrap());
        assert_eq!(expected_components(&scene, Connectivity::Eight), (0, 0));
        let scene = ClotScene::new(10, 10).with_clot(Disk::new(0.0, 0.0, 1.0));
        assert_eq!(expected_components(&scene, Connectivity::Eight), (1, 3));
    }

    #[test]
    fn noise_zero_is_identity_and_seeded() {
        let img = GrayImage::filled(16, 16, 128);
        assert_eq!(add_noise(&img, 0.0, 7), img);
        assert_eq!(add_noise(&img, 5.0, 7), add_noise(&img, 5.0, 7));
        assert_ne!(add_noise(&img, 5.0, 7), add_noise(&img, 5.0, 8));
    }

    #[test]
    fn noise_sample_stddev() {
        let img = GrayImage::filled(64, 64, 128);
        let noisy = add_noise(&img, 5.0, 2024);
        let n = noisy.data().len() as f64;
        let mean = noisy.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = noisy
            .data()
            .iter()
            .map(|&v| (f64::from(v) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        assert!((4.0..=6.0).contains(&var.sqrt()), "stddev {}", var.sqrt());
        assert!((mean - 128.0).abs() < 0.5);
    }

    #[test]
    fn splitmix_reference_outputs() {
        // published SplitMix64 sequence for seed 0
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn evolve_growth_law() {
        let scene = ClotScene::new(20, 20).with_clot(Disk::new(10.0, 10.0, 0.0));
        let model = GrowthModel {
            area_rate: PI,
            ..Default::default()
        };
        assert_eq!(evolve(&scene, &model, 0.0), scene);
        let grown = evolve(&scene, &model, 4.0);
        assert!((grown.clots[0].radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nucleation_appears_on_schedule() {
        let scene = ClotScene::new(20, 20);
        let model = GrowthModel {
            area_rate: 4.0 * PI,
            nucleation_times: vec![Nucleation {
                time: 20.0,
                cx: 10.0,
                cy: 10.0,
                intensity: 40,
            }],
            ..Default::default()
        };
        assert!(evolve(&scene, &model, 19.9).clots.is_empty());
        assert_eq!(evolve(&scene, &model, 20.0).clots[0].radius, 0.0);
        assert!((evolve(&scene, &model, 21.0).clots[0].radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rasterized_area_tracks_analytic_area() {
        // pixel-count vs pi r^2 stays within 10% for r >= 5
        for r in 5..=50 {
            let size = 2 * r + 3;
            let c = (r + 1) as f64 + 0.37;
            let scene = ClotScene::new(size, size).with_clot(Disk::new(c, c, r as f64));
            let (_, area) = expected_components(&scene, Connectivity::Eight);
            let analytic = PI * (r * r) as f64;
            assert!(
                ((area as f64 - analytic) / analytic).abs() < 0.10,
                "r={r}: {area} vs {analytic}"
            );
        }
    }

    #[test]
    fn scene_file_parsing() {
        let text = r#"{
            "scene": {"width": 32, "height": 24,
                      "clots": [{"cx": 5, "cy": 5, "radius": 2}],
                      "roi": {"kind": "disk", "center_x": 16, "center_y": 12, "radius": 11}},
            "model": {"area_rate": 3.0, "seed": 9,
                      "nucleation_times": [{"time": 10, "cx": 20, "cy": 12}]}
        }"#;
        let f = SceneFile::from_json(text).unwrap();
        assert_eq!(f.scene.background, 250);
        assert_eq!(f.scene.clots[0].intensity, 40);
        assert_eq!(f.model.nucleation_times[0].intensity, 40);
        assert_eq!(f.model.noise_stddev, 0.0);

        let no_model = SceneFile::from_json(r#"{"scene": {"width": 4, "height": 4}}"#).unwrap();
        assert_eq!(no_model.model, GrowthModel::default());

        assert!(SceneFile::from_json(r#"{"scene": {"width": 0, "height": 4}}"#).is_err());
        assert!(SceneFile::from_json(
            r#"{"scene": {"width": 4, "height": 4, "clots": [{"cx": 1, "cy": 1, "radius": -1}]}}"#
        )
        .is_err());
        assert!(SceneFile::from_json(
            r#"{"scene": {"width": 4, "height": 4}, "model": {"area_rate": -2}}"#
        )
        .is_err());
        assert!(SceneFile::from_json("{").is_err());
    }

    proptest! {
        #[test]
        fn evolve_composes_without_nucleation(
            r0 in 0.0f64..10.0, rate in 0.0f64..50.0, t1 in 0.0f64..60.0, t2 in 0.0f64..60.0,
        ) {
            let scene = ClotScene::new(64, 64).with_clot(Disk::new(30.0, 30.0, r0));
            let model = GrowthModel { area_rate: rate, ..Default::default() };
            let stepwise = evolve(&evolve(&scene, &model, t1), &model, t2);
            let direct = evolve(&scene, &model, t1 + t2);
            prop_assert!((stepwise.clots[0].radius - direct.clots[0].radius).abs() < 1e-9);
        }

        #[test]
        fn cumulative_area_nondecreasing_in_time(rate in 0.1f64..30.0, t in 0.0f64..40.0, dt in 0.0f64..20.0) {
            let scene = ClotScene::new(80, 40)
                .with_clot(Disk::new(15.0, 20.0, 2.0))
                .with_clot(Disk::new(60.0, 20.0, 1.0));
            let model = GrowthModel { area_rate: rate, ..Default::default() };
            let a = expected_components(&evolve(&scene, &model, t), Connectivity::Eight).1;
            let b = expected_components(&evolve(&scene, &model, t + dt), Connectivity::Eight).1;
            prop_assert!(a <= b);
        }
    }
}
