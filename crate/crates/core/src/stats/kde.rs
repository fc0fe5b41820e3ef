use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;

use super::effect::sample_variance;

/// Scott's rule: `n^(-1/5) * sample_sd`.
pub fn scott_bandwidth(samples: &[f64]) -> f64 {
    (samples.len() as f64).powf(-0.2) * sample_variance(samples).sqrt()
}

/// Gaussian kernel density estimate over one-dimensional samples.
#[derive(Debug, Clone)]
pub struct GaussianKde {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl GaussianKde {
    pub fn new(samples: &[f64], bandwidth: Option<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "density estimate needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        let bandwidth = match bandwidth {
            Some(h) if h.is_finite() && h > 0.0 => h,
            Some(h) => return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}"))),
            None => {
                let h = scott_bandwidth(samples);
                if h.is_nan() || h <= 0.0 {
                    return Err(Error::ZeroVariance);
                }
                h
            }
        };
        Ok(GaussianKde {
            samples: samples.to_vec(),
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / ((2.0 * PI).sqrt() * h * self.samples.len() as f64);
        let sum: f64 = self
            .samples
            .iter()
            .map(|&s| {
                let u = (x - s) / h;
                (-0.5 * u * u).exp()
            })
            .sum();
        norm * sum
    }

    /// Evaluation grid `[min - 4h, max + 4h]` with `points` equally spaced abscissae.
    pub fn default_grid(&self, points: usize) -> Vec<f64> {
        let lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * self.bandwidth;
        let hi = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * self.bandwidth;
        let step = (hi - lo) / (points - 1) as f64;
        (0..points)
            .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
            .collect()
    }

    pub fn curve(&self, points: usize, exec: Execution) -> Result<DensityCurve> {
        if points < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 grid points, got {points}")));
        }
        let grid = self.default_grid(points);
        let density = exec.map_slice(&grid, |&x| self.density(x));
        Ok(DensityCurve {
            grid,
            density,
            bandwidth: self.bandwidth,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

/// Gaussian KDE on the default grid; Scott's bandwidth when `bandwidth` is `None`.
pub fn kde(samples: &[f64], grid_points: usize, bandwidth: Option<f64>) -> Result<DensityCurve> {
    GaussianKde::new(samples, bandwidth)?.curve(grid_points, Execution::default())
}
