//! Pearson correlation with a Student-t significance test, and least-squares
//! line fitting, used to relate clot burden to flow duration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("series lengths differ ({xs} vs {ys})")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("series contains a non-finite value")]
    NonFinite,
}

/// Two equal-length series, `xs` the independent variable.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSeries {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSeries {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, StatsError> {
        if xs.len() != ys.len() {
            return Err(StatsError::LengthMismatch {
                xs: xs.len(),
                ys: ys.len(),
            });
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    /// `r * sqrt((n-2) / (1-r^2))`; absent when |r| = 1.
    pub t_stat: Option<f64>,
    /// Two-tailed p-value of the t statistic with n-2 degrees of freedom.
    pub p_value: f64,
}

/// |r| within this of 1 is treated as exact linear dependence.
const PERFECT_R_EPS: f64 = 1e-12;

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Centered second moments `(sxx, syy, sxy)` and the means.
fn moments(s: &PairedSeries) -> (f64, f64, f64, f64, f64) {
    let (mx, my) = (mean(&s.xs), mean(&s.ys));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in s.xs.iter().zip(&s.ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    (mx, my, sxx, syy, sxy)
}

pub fn pearson(series: &PairedSeries) -> Result<CorrelationResult, StatsError> {
    let n = series.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    if is_constant(&series.xs) || is_constant(&series.ys) {
        return Err(StatsError::ZeroVariance);
    }
    let (_, _, sxx, syy, sxy) = moments(series);
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let (t_stat, p_value) = if 1.0 - r.abs() <= PERFECT_R_EPS {
        (None, 0.0)
    } else {
        let t = r * ((n - 2) as f64 / (1.0 - r * r)).sqrt();
        (Some(t), student_t_two_tailed(t, (n - 2) as f64))
    };
    Ok(CorrelationResult {
        r,
        n,
        t_stat,
        p_value,
    })
}

/// Two-tailed p-value for a correlation coefficient `r` over `n` samples.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    assert!(n >= 3, "need at least 3 samples");
    if 1.0 - r.abs() <= PERFECT_R_EPS {
        return 0.0;
    }
    let t = r * ((n - 2) as f64 / (1.0 - r * r)).sqrt();
    student_t_two_tailed(t, (n - 2) as f64)
}

/// Least-squares `(slope, intercept)`.
pub fn linear_fit(series: &PairedSeries) -> Result<(f64, f64), StatsError> {
    let n = series.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n });
    }
    if is_constant(&series.xs) {
        return Err(StatsError::ZeroVariance);
    }
    let (mx, my, sxx, _, sxy) = moments(series);
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7, nine coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const BETA_CF_TOL: f64 = 1e-10;
const BETA_CF_MAX_ITER: usize = 300;
const TINY: f64 = 1e-300;

/// Regularized incomplete beta `I_x(a, b)`, continued fraction evaluated with
/// the modified Lentz method.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    // the fraction converges fastest for x below the mean a/(a+b)
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_CF_TOL {
            break;
        }
    }
    h
}
