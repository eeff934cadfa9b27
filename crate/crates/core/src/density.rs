//! Gaussian kernel density estimation on a shared grid and the squared
//! Hellinger distance between smoothed densities.
//!
//! Bandwidth follows the classic rule of thumb
//! `0.9 * min(sd, IQR/1.34) * n^(-1/5)` with the usual fallbacks when the
//! interquartile range collapses. Two densities are compared by
//! re-estimating both on one grid covering the union of their ranges and
//! integrating `sqrt(f*g)` by the trapezoid rule; both are renormalized on
//! that grid so identical inputs give exactly zero.

use crate::error::{Error, Result};
use crate::stats::quantile;

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 512;

/// Hard cap on auto-refined grids.
pub const MAX_GRID_POINTS: usize = 1 << 17;

/// Grid extension beyond the sample range, in bandwidths.
pub const GRID_CUT: f64 = 3.0;

/// Points needed so the grid step resolves the kernel scale; wide ranges
/// with narrow kernels would otherwise lose mass to discretization.
fn resolved_points(requested: usize, span: f64, bandwidth: f64) -> usize {
    let needed = (span / (bandwidth / 3.0)).ceil() as usize + 1;
    requested.max(needed).min(MAX_GRID_POINTS)
}

/// A density estimate evaluated on an equally spaced grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    bandwidth: f64,
}

impl SmoothedDensity {
    /// Wrap precomputed values; enforces grid spacing, nonnegativity and
    /// near-unit mass.
    pub fn new(grid: Vec<f64>, values: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::Validation(format!(
                "density needs matching grid/value lengths >= 2, got {}/{}",
                grid.len(),
                values.len()
            )));
        }
        let step = grid[1] - grid[0];
        if step <= 0.0
            || grid
                .windows(2)
                .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs())
        {
            return Err(Error::Validation("grid is not equally spaced".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation("density values must be >= 0".into()));
        }
        let d = SmoothedDensity {
            grid,
            values,
            bandwidth,
        };
        let mass = d.trapezoid_mass();
        if !(0.99..=1.01).contains(&mass) {
            return Err(Error::Validation(format!(
                "density mass {mass} outside [0.99, 1.01]"
            )));
        }
        Ok(d)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    let step = grid[1] - grid[0];
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Rule-of-thumb bandwidth: `0.9 min(sd, IQR/1.34) n^(-1/5)`, falling back
/// to the standard deviation when the IQR collapses. Errors when the sample
/// has no spread at all.
pub fn bandwidth_rule_of_thumb(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
    let mut lo = sd.min(iqr / 1.34);
    if lo == 0.0 {
        lo = sd;
    }
    if lo == 0.0 {
        return Err(Error::DegenerateSample(
            "all samples identical (bandwidth 0)".into(),
        ));
    }
    Ok(0.9 * lo * n.powf(-0.2))
}

/// Requested evaluation grid.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Gaussian-kernel density estimate. With no grid spec the grid spans the
/// sample range extended by three bandwidths, on 512 points.
pub fn kde(samples: &[f64], spec: Option<GridSpec>) -> Result<SmoothedDensity> {
    let h = bandwidth_rule_of_thumb(samples)?;
    kde_with_bandwidth(samples, h, spec)
}

pub fn kde_with_bandwidth(
    samples: &[f64],
    bandwidth: f64,
    spec: Option<GridSpec>,
) -> Result<SmoothedDensity> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::DegenerateSample(format!(
            "bandwidth {bandwidth} is not positive"
        )));
    }
    let spec = match spec {
        Some(s) => s,
        None => {
            let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (min, max) = (lo - GRID_CUT * bandwidth, hi + GRID_CUT * bandwidth);
            GridSpec {
                min,
                max,
                points: resolved_points(DEFAULT_GRID_POINTS, max - min, bandwidth),
            }
        }
    };
    if spec.points < 2 || spec.max <= spec.min || !spec.max.is_finite() || !spec.min.is_finite() {
        return Err(Error::Validation(format!(
            "invalid grid spec [{}, {}] with {} points",
            spec.min, spec.max, spec.points
        )));
    }

    let n = samples.len() as f64;
    let step = (spec.max - spec.min) / (spec.points - 1) as f64;
    let norm = 1.0 / (n * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..spec.points).map(|i| spec.min + i as f64 * step).collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let sum: f64 = samples
                .iter()
                .map(|&xi| {
                    let u = (x - xi) / bandwidth;
                    (-0.5 * u * u).exp()
                })
                .sum();
            norm * sum
        })
        .collect();

    SmoothedDensity {
        grid,
        values,
        bandwidth,
    }
    .validated()
}

impl SmoothedDensity {
    fn validated(self) -> Result<Self> {
        SmoothedDensity::new(self.grid, self.values, self.bandwidth)
    }
}

fn tail_range(samples: &[f64], bandwidth: f64) -> (f64, f64) {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo - GRID_CUT * bandwidth, hi + GRID_CUT * bandwidth)
}

/// Estimate both sample sets on one grid covering the union of their default
/// ranges, as required by [`hellinger`]. Errors when the two kernel scales
/// are too disparate for any shared grid (see [`hellinger_from_samples`],
/// which resolves the disjoint case analytically).
pub fn common_grid_kde(
    f_samples: &[f64],
    g_samples: &[f64],
    points: usize,
) -> Result<(SmoothedDensity, SmoothedDensity)> {
    let hf = bandwidth_rule_of_thumb(f_samples)?;
    let hg = bandwidth_rule_of_thumb(g_samples)?;
    let (f_lo, f_hi) = tail_range(f_samples, hf);
    let (g_lo, g_hi) = tail_range(g_samples, hg);
    let lo = f_lo.min(g_lo);
    let hi = f_hi.max(g_hi);
    let resolved = resolved_points(points, hi - lo, hf.min(hg));
    if (hi - lo) / (resolved - 1) as f64 > hf.min(hg) {
        return Err(Error::GridMismatch(format!(
            "kernel scales {hf:.3e} and {hg:.3e} over span {:.3e} cannot share a grid",
            hi - lo
        )));
    }
    let spec = GridSpec {
        min: lo,
        max: hi,
        points: resolved,
    };
    Ok((
        kde_with_bandwidth(f_samples, hf, Some(spec))?,
        kde_with_bandwidth(g_samples, hg, Some(spec))?,
    ))
}

/// Squared Hellinger distance `1 - integral sqrt(f g)` on the shared grid,
/// clipped into [0, 1]. Both densities are renormalized to unit trapezoid
/// mass on the grid, so `hellinger(f, f)` is exactly 0.
pub fn hellinger(f: &SmoothedDensity, g: &SmoothedDensity) -> Result<f64> {
    if f.grid.len() != g.grid.len() {
        return Err(Error::GridMismatch(format!(
            "grids have {} and {} points",
            f.grid.len(),
            g.grid.len()
        )));
    }
    let step = f.grid[1] - f.grid[0];
    let aligned = f
        .grid
        .iter()
        .zip(&g.grid)
        .all(|(a, b)| (a - b).abs() <= 1e-9 * step.abs().max(1.0));
    if !aligned {
        return Err(Error::GridMismatch(
            "densities are not evaluated on the same grid".into(),
        ));
    }
    let mass_f = f.trapezoid_mass();
    let mass_g = g.trapezoid_mass();
    let cross: Vec<f64> = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(&a, &b)| (a * b).sqrt())
        .collect();
    let overlap = trapezoid(&f.grid, &cross) / (mass_f * mass_g).sqrt();
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

/// KDE both sample sets on a shared grid and return their squared Hellinger
/// distance.
///
/// When the kernel scales are so disparate that no shared grid can resolve
/// both, but the smoothed supports do not overlap, the distance is exactly
/// 1 and is returned without discretizing.
pub fn hellinger_from_samples(a: &[f64], b: &[f64], points: usize) -> Result<f64> {
    match common_grid_kde(a, b, points) {
        Ok((f, g)) => hellinger(&f, &g),
        Err(Error::GridMismatch(detail)) => {
            let ha = bandwidth_rule_of_thumb(a)?;
            let hb = bandwidth_rule_of_thumb(b)?;
            let (a_lo, a_hi) = tail_range(a, ha);
            let (b_lo, b_hi) = tail_range(b, hb);
            if a_hi < b_lo || b_hi < a_lo {
                Ok(1.0)
            } else {
                Err(Error::GridMismatch(detail))
            }
        }
        Err(e) => Err(e),
    }
}
