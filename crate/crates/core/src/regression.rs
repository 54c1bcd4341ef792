//! Ordinary least-squares line fits.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: f64,
    pub points: usize,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares fit of `y = intercept + slope · x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!("x and y lengths differ: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("a line fit needs at least 2 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite value in regression data".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let sse: f64 = x.iter().zip(y).map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2)).sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(RegressionFit { slope, intercept, r_squared, points: n })
}

/// Fit of `ln y` against `ln x`; the slope is the power-law exponent.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    if let Some(bad) = x.iter().chain(y).find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter(format!("log-log fit needs positive data, got {bad}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}
