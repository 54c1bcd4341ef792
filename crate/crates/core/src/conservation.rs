//! The four integral invariants, evaluated with the periodic rectangle rule.

use crate::error::{Error, Result};
use crate::grid::{Exponent, FieldState, GridSpec};
use crate::stepper::signed_power;

/// `I_j ≈ dx · Σ_m φ_j(U_m)` with `φ₁ = u`, `φ₂ = u^{p+1}`,
/// `φ₃ = u cos x`, `φ₄ = u sin x`.
pub fn invariant(field: &FieldState, j: u8, p: Exponent, grid: &GridSpec) -> Result<f64> {
    if field.len() != grid.nodes() {
        return Err(Error::InvalidParameter(format!("field has {} values for {} nodes", field.len(), grid.nodes())));
    }
    let dx = grid.dx();
    let sum: f64 = match j {
        1 => field.values.iter().sum(),
        2 => {
            let q = p.plus_one();
            field.values.iter().map(|&u| signed_power(u, q)).sum()
        }
        3 => field.values.iter().zip(grid.coordinates()).map(|(u, x)| u * x.cos()).sum(),
        4 => field.values.iter().zip(grid.coordinates()).map(|(u, x)| u * x.sin()).sum(),
        _ => return Err(Error::InvalidParameter(format!("invariant index must be 1..=4, got {j}"))),
    };
    Ok(dx * sum)
}

pub fn all_invariants(field: &FieldState, p: Exponent, grid: &GridSpec) -> Result<[f64; 4]> {
    Ok([
        invariant(field, 1, p, grid)?,
        invariant(field, 2, p, grid)?,
        invariant(field, 3, p, grid)?,
        invariant(field, 4, p, grid)?,
    ])
}

/// Invariants sampled at each snapshot of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSeries {
    p: Exponent,
    grid: GridSpec,
    pub times: Vec<f64>,
    pub values: Vec<[f64; 4]>,
}

impl InvariantSeries {
    pub fn new(p: Exponent, grid: GridSpec) -> Self {
        Self { p, grid, times: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, field: &FieldState) {
        // lengths are checked when the trajectory is built
        let v = all_invariants(field, self.p, &self.grid).unwrap_or([f64::NAN; 4]);
        self.times.push(field.t);
        self.values.push(v);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(I_j(t) − I_j(0)) / |I_j(0)|` for invariant `j`; absolute drift when `I_j(0) = 0`.
    pub fn relative_drift(&self, j: u8) -> Vec<f64> {
        let k = usize::from(j.clamp(1, 4) - 1);
        let Some(first) = self.values.first() else { return Vec::new() };
        let base = first[k];
        let scale = if base == 0.0 { 1.0 } else { base.abs() };
        self.values.iter().map(|v| (v[k] - base) / scale).collect()
    }

    pub fn max_relative_drift(&self, j: u8) -> f64 {
        self.relative_drift(j).iter().fold(0.0_f64, |m, d| m.max(d.abs()))
    }
}
