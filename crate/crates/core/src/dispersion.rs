//! Group velocity of the linearized semi-discrete drift equation
//! `u_t − c0 (B/A) u = 0`.
//!
//! For a Fourier mode `exp(i(kx − ωt))` the symbol of `B/A` is `i f(θ)/dx`
//! with `θ = k dx` and
//!
//! ```text
//! f(θ) = (n1 sin θ + n2 sin 2θ) / (d0 + d1 cos θ + d2 cos 2θ),
//! ```
//!
//! so `ω = −c0 f(θ)/dx` and `dω/dk = −c0 f'(θ)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::schemes::SchemeId;

/// Numerator and denominator coefficients of the reduced symbol `f(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SymbolRatio {
    n1: f64,
    n2: f64,
    d0: f64,
    d1: f64,
    d2: f64,
}

fn symbol_ratio(scheme: SchemeId) -> SymbolRatio {
    let (n1, n2, d0, d1, d2) = match scheme {
        SchemeId::Ismail => (1.0, 0.0, 1.0, 0.0, 0.0),
        SchemeId::DeFrutos => (50.0, 5.0, 33.0, 26.0, 1.0),
        SchemeId::Pade6 => (100.0, 10.0, 63.0, 56.0, 1.0),
        SchemeId::Pade8 => (160.0, 25.0, 108.0, 96.0, 6.0),
    };
    SymbolRatio { n1, n2, d0, d1, d2 }
}

/// `f(θ)`, the phase function whose derivative gives the group velocity.
pub fn phase_function(scheme: SchemeId, theta: f64) -> f64 {
    let s = symbol_ratio(scheme);
    (s.n1 * theta.sin() + s.n2 * (2.0 * theta).sin()) / (s.d0 + s.d1 * theta.cos() + s.d2 * (2.0 * theta).cos())
}

/// `f'(θ)` by the quotient rule.
pub fn phase_derivative(scheme: SchemeId, theta: f64) -> f64 {
    let s = symbol_ratio(scheme);
    let (s1, c1) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let num = s.n1 * s1 + s.n2 * s2;
    let dnum = s.n1 * c1 + 2.0 * s.n2 * c2;
    let den = s.d0 + s.d1 * c1 + s.d2 * c2;
    let dden = -s.d1 * s1 - 2.0 * s.d2 * s2;
    (dnum * den - num * dden) / (den * den)
}

/// Group velocity `C_i(k)` of the linear radiation equation.
pub fn group_velocity(scheme: SchemeId, k: f64, dx: f64, c0: f64) -> Result<f64> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {dx}")));
    }
    Ok(-c0 * phase_derivative(scheme, k * dx))
}

/// Highest wavenumber representable on the grid, `π/dx`.
pub fn k_max(dx: f64) -> f64 {
    PI / dx
}

/// Default fraction of `k_max` used to predict the backward front.
pub const BACKWARD_PROBE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontPrediction {
    pub forward: f64,
    pub backward: f64,
}

/// Forward front speed `C(k_max)` and backward speed `C(probe · k_max)`.
pub fn predicted_front_velocities(scheme: SchemeId, c0: f64, dx: f64) -> Result<FrontPrediction> {
    predicted_front_velocities_with_probe(scheme, c0, dx, BACKWARD_PROBE)
}

pub fn predicted_front_velocities_with_probe(scheme: SchemeId, c0: f64, dx: f64, probe: f64) -> Result<FrontPrediction> {
    if !(probe > 0.0 && probe <= 1.0) {
        return Err(Error::InvalidParameter(format!("probe fraction must lie in (0, 1], got {probe}")));
    }
    let kmax = k_max(dx);
    Ok(FrontPrediction {
        forward: group_velocity(scheme, kmax, dx, c0)?,
        backward: group_velocity(scheme, probe * kmax, dx, c0)?,
    })
}

/// Group velocity sampled against the normalized wavenumber `α = k/k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    pub scheme: SchemeId,
    pub dx: f64,
    pub c0: f64,
    pub normalized_wavenumbers: Vec<f64>,
    pub group_velocities: Vec<f64>,
}

impl DispersionCurve {
    pub fn k_max(&self) -> f64 {
        k_max(self.dx)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.normalized_wavenumbers.iter().copied().zip(self.group_velocities.iter().copied())
    }
}

/// Uniform samples `α_i = i/samples`, `i = 1..=samples`, on `(0, 1]`.
pub fn dispersion_curve(scheme: SchemeId, dx: f64, c0: f64, samples: usize) -> Result<DispersionCurve> {
    if samples < 2 {
        return Err(Error::InvalidParameter(format!("dispersion curve needs at least 2 samples, got {samples}")));
    }
    let kmax = k_max(dx);
    let alphas: Vec<f64> = (1..=samples).map(|i| i as f64 / samples as f64).collect();
    let values = alphas.iter().map(|&a| group_velocity(scheme, a * kmax, dx, c0)).collect::<Result<Vec<_>>>()?;
    Ok(DispersionCurve { scheme, dx, c0, normalized_wavenumbers: alphas, group_velocities: values })
}
