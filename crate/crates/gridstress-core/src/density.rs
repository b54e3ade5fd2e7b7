//! Gaussian-kernel density estimation for indicator samples, plus paired
//! before/after comparisons on a shared evaluation grid.
//!
//! The estimator is the classic fixed-bandwidth KDE
//! `f̂(x) = (1/(n·h)) Σ_i φ((x − s_i)/h)` with `φ` the standard normal
//! density. Bandwidth defaults to Silverman's rule; callers can force a
//! bandwidth instead, which is also the only way to estimate from fewer than
//! two samples or from degenerate (zero-spread) ones.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::stats::{mean, quantile, sample_std};
use crate::timeseries::{DailySeries, DateRange, HourlySeries};

/// Number of evaluation points when no grid is given.
pub const DEFAULT_GRID_POINTS: usize = 512;

const INV_SQRT_TAU: f64 = 0.3989422804014327; // 1/sqrt(2*pi)

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("need at least {needed} samples, found {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("sample {index} is not finite ({value})")]
    NonFiniteSample { index: usize, value: f64 },
    #[error("bandwidth must be a positive finite number, got {0}")]
    InvalidBandwidth(f64),
    #[error(
        "samples have no spread; automatic bandwidth is undefined, pass an explicit bandwidth"
    )]
    DegenerateSpread,
    #[error("invalid evaluation grid: {0}")]
    InvalidGrid(String),
    #[error("window {window} holds {found} samples; need at least 2")]
    WindowTooThin { window: DateRange, found: usize },
}

/// Evaluation grid: `count` equally spaced points covering `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    fn validate(&self) -> Result<(), DensityError> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo >= self.hi {
            return Err(DensityError::InvalidGrid(format!(
                "bounds [{}, {}] must be finite and ordered",
                self.lo, self.hi
            )));
        }
        if self.count < 2 {
            return Err(DensityError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                self.count
            )));
        }
        Ok(())
    }

    fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.lo + step * i as f64).collect()
    }
}

/// A kernel density estimate evaluated on an ordered grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub n_samples: usize,
    pub sample_mean: f64,
    pub sample_std: f64,
}

/// Densities for two windows of the same series on one shared grid, plus
/// summary deltas (window B minus window A).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodComparison {
    pub a: DensityEstimate,
    pub b: DensityEstimate,
    pub deltas: SummaryDeltas,
}

/// Window B summary minus window A summary. The percentile deltas track the
/// tails, where distribution shifts often show first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryDeltas {
    pub mean: f64,
    pub std: f64,
    pub p01: f64,
    pub p99: f64,
}

/// Estimate a density from samples.
///
/// With `bandwidth` unset, Silverman's rule
/// `h = 0.9 · min(std, IQR/1.34) · n^(−1/5)` picks the bandwidth; that
/// requires at least two samples with nonzero spread. An explicit bandwidth
/// lifts both requirements (a single sample then gives one kernel bump).
/// The default grid spans `[min − 3h, max + 3h]` with
/// [`DEFAULT_GRID_POINTS`] points.
pub fn kde(
    samples: &[f64],
    bandwidth: Option<f64>,
    grid_spec: Option<GridSpec>,
) -> Result<DensityEstimate, DensityError> {
    for (index, &value) in samples.iter().enumerate() {
        if !value.is_finite() {
            return Err(DensityError::NonFiniteSample { index, value });
        }
    }
    let needed = if bandwidth.is_some() { 1 } else { 2 };
    if samples.len() < needed {
        return Err(DensityError::InsufficientSamples { needed, found: samples.len() });
    }

    let h = match bandwidth {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(h) => return Err(DensityError::InvalidBandwidth(h)),
        None => silverman_bandwidth(samples)?,
    };

    let spec = match grid_spec {
        Some(spec) => spec,
        None => {
            let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * h;
            let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
            GridSpec { lo, hi, count: DEFAULT_GRID_POINTS }
        }
    };
    spec.validate()?;

    let grid = spec.points();
    let scale = 1.0 / (samples.len() as f64 * h);
    let density: Vec<f64> = grid
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for &s in samples {
                let z = (x - s) / h;
                acc += INV_SQRT_TAU * (-0.5 * z * z).exp();
            }
            acc * scale
        })
        .collect();

    Ok(DensityEstimate {
        grid,
        density,
        bandwidth: h,
        n_samples: samples.len(),
        sample_mean: mean(samples),
        sample_std: sample_std(samples),
    })
}

/// Silverman's rule of thumb, `0.9 · min(std, IQR/1.34) · n^(−1/5)`. Errors
/// when the spread term is zero (constant samples, or ties flattening the
/// interquartile range), since the rule then degenerates to a zero bandwidth.
fn silverman_bandwidth(samples: &[f64]) -> Result<f64, DensityError> {
    let std = sample_std(samples);
    let iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
    let h = 0.9 * std.min(iqr / 1.34) * (samples.len() as f64).powf(-0.2);
    if !(h.is_finite() && h > 0.0) {
        return Err(DensityError::DegenerateSpread);
    }
    Ok(h)
}

/// Anything that can hand over its present sample values inside a window.
pub trait WindowSamples {
    fn samples_in(&self, window: &DateRange) -> Vec<f64>;
}

impl WindowSamples for HourlySeries {
    fn samples_in(&self, window: &DateRange) -> Vec<f64> {
        self.present_in(window)
    }
}

impl WindowSamples for DailySeries {
    fn samples_in(&self, window: &DateRange) -> Vec<f64> {
        self.present_in(window)
    }
}

/// Estimate and compare the value distribution of two windows of one series.
///
/// Both windows are evaluated on a single grid spanning the union of their
/// default spans, so the two curves and their deltas are directly
/// comparable. `bandwidth` forces one bandwidth for both windows; otherwise
/// each window gets its own Silverman bandwidth.
pub fn compare_periods<S: WindowSamples>(
    series: &S,
    window_a: &DateRange,
    window_b: &DateRange,
    bandwidth: Option<f64>,
) -> Result<PeriodComparison, DensityError> {
    let samples_a = series.samples_in(window_a);
    let samples_b = series.samples_in(window_b);
    for (window, samples) in [(window_a, &samples_a), (window_b, &samples_b)] {
        if samples.len() < 2 {
            return Err(DensityError::WindowTooThin { window: *window, found: samples.len() });
        }
    }

    let h_a = match bandwidth {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(h) => return Err(DensityError::InvalidBandwidth(h)),
        None => silverman_bandwidth(&samples_a)?,
    };
    let h_b = match bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(&samples_b)?,
    };

    let span = |samples: &[f64], h: f64| {
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * h;
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
        (lo, hi)
    };
    let (lo_a, hi_a) = span(&samples_a, h_a);
    let (lo_b, hi_b) = span(&samples_b, h_b);
    let grid = GridSpec { lo: lo_a.min(lo_b), hi: hi_a.max(hi_b), count: DEFAULT_GRID_POINTS };

    let a = kde(&samples_a, Some(h_a), Some(grid))?;
    let b = kde(&samples_b, Some(h_b), Some(grid))?;
    let deltas = SummaryDeltas {
        mean: b.sample_mean - a.sample_mean,
        std: b.sample_std - a.sample_std,
        p01: quantile(&samples_b, 0.01) - quantile(&samples_a, 0.01),
        p99: quantile(&samples_b, 0.99) - quantile(&samples_a, 0.99),
    };
    Ok(PeriodComparison { a, b, deltas })
}
