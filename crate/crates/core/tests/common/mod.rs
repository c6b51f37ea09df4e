//! Independent oracles and generators shared by the integration and
//! acceptance tests.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use clotquant::binarize::BinaryImage;
use clotquant::labeling::Connectivity;
use clotquant::synth::{ClotScene, Disk};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Breadth-first flood fill. Returns per-pixel labels (0 = background) and
/// the number of components.
pub fn flood_fill(width: usize, height: usize, bits: &[bool], eight: bool) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; width * height];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let (c, r) = ((idx % width) as i64, (idx / width) as i64);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if (dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (nc, nr) = (c + dc, r + dr);
                    if nc < 0 || nr < 0 || nc >= width as i64 || nr >= height as i64 {
                        continue;
                    }
                    let n = nr as usize * width + nc as usize;
                    if bits[n] && labels[n] == 0 {
                        labels[n] = next;
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    (labels, next)
}

/// True when the two labelings induce the same partition of the pixels.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ab: HashMap<u32, u32> = HashMap::new();
    let mut ba: HashMap<u32, u32> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x == 0) != (y == 0) {
            return false;
        }
        if x == 0 {
            continue;
        }
        if *ab.entry(x).or_insert(y) != y || *ba.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

pub fn random_mask(rng: &mut ChaCha8Rng) -> BinaryImage {
    let w = rng.random_range(1..=64usize);
    let h = rng.random_range(1..=64usize);
    let density = rng.random_range(0.10..=0.90f64);
    let bits = (0..w * h).map(|_| rng.random_bool(density)).collect();
    BinaryImage::new(w, h, bits)
}

pub fn connectivities() -> [(Connectivity, bool); 2] {
    [(Connectivity::Four, false), (Connectivity::Eight, true)]
}

/// Random scene of well-separated disks, at least one fully inside the frame.
pub fn random_disjoint_scene(rng: &mut ChaCha8Rng) -> ClotScene {
    let w = rng.random_range(48..=160usize);
    let h = rng.random_range(48..=160usize);
    let mut scene = ClotScene::new(w, h);
    let target = rng.random_range(1..=12usize);
    let mut attempts = 0;
    while scene.clots.len() < target && attempts < 500 {
        attempts += 1;
        let r = rng.random_range(1.0..8.0f64);
        let cx = rng.random_range(-4.0..w as f64 + 4.0);
        let cy = rng.random_range(-4.0..h as f64 + 4.0);
        let inside = cx - r >= 0.0 && cy - r >= 0.0 && cx + r < w as f64 && cy + r < h as f64;
        if scene.clots.is_empty() && !inside {
            continue;
        }
        let clear = scene
            .clots
            .iter()
            .all(|d| ((d.cx - cx).powi(2) + (d.cy - cy).powi(2)).sqrt() > d.radius + r + 2.5);
        if clear {
            scene.clots.push(Disk::new(cx, cy, r));
        }
    }
    scene
}

fn gamma_half_integer(k: u32) -> f64 {
    // Γ(k/2) for k >= 1 from Γ(1/2) = √π, Γ(1) = 1 and Γ(x + 1) = xΓ(x)
    let (mut x, mut g) = if k % 2 == 1 {
        (0.5, std::f64::consts::PI.sqrt())
    } else {
        (1.0, 1.0)
    };
    while x < f64::from(k) / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

fn t_density(x: f64, df: u32) -> f64 {
    let nu = f64::from(df);
    let norm =
        gamma_half_integer(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half_integer(df));
    norm * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    let left = simpson(a, m, fa, lm, fm);
    let right = simpson(m, b, fm, rm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, lm, fm, left, eps / 2.0, depth - 1)
        + adaptive(f, m, b, fm, rm, fb, right, eps / 2.0, depth - 1)
}

/// Two-tailed Student t p-value by adaptive Simpson integration of the
/// density over [0, |t|].
pub fn t_two_tailed_by_integration(t: f64, df: u32) -> f64 {
    let b = t.abs();
    if b == 0.0 {
        return 1.0;
    }
    let f = |x: f64| t_density(x, df);
    let (fa, fm, fb) = (f(0.0), f(0.5 * b), f(b));
    let whole = simpson(0.0, b, fa, fm, fb);
    let half = adaptive(&f, 0.0, b, fa, fm, fb, whole, 1e-13, 50);
    (1.0 - 2.0 * half).max(0.0)
}
