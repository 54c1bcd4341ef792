//! The four compact spatial discretizations as periodic five-point stencils.
//!
//! Each scheme approximates `∂x ≈ A⁻¹B` and `∂x³ ≈ A⁻¹C` with a symmetric
//! mass stencil `A`, an antisymmetric first-difference stencil `B` and the
//! shared antisymmetric third-difference stencil `C`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::banded::PeriodicBandedMatrix;
use crate::error::{Error, Result};

/// Stencil offsets, shared by every operator.
pub const OFFSETS: [isize; 5] = [-2, -1, 0, 1, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    /// Second-order finite differences.
    Ismail,
    /// Petrov–Galerkin finite elements with the product approximation.
    DeFrutos,
    /// Compact scheme, sixth order for the third derivative.
    Pade6,
    /// Compact scheme, eighth order for the first derivative.
    Pade8,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [SchemeId::Ismail, SchemeId::DeFrutos, SchemeId::Pade6, SchemeId::Pade8];

    /// Truncation orders `(first derivative, third derivative)`.
    pub fn orders(self) -> (u32, u32) {
        match self {
            SchemeId::Ismail => (2, 2),
            SchemeId::DeFrutos => (6, 4),
            SchemeId::Pade6 => (4, 6),
            SchemeId::Pade8 => (8, 2),
        }
    }

    /// Method number 1–4.
    pub fn number(self) -> u8 {
        match self {
            SchemeId::Ismail => 1,
            SchemeId::DeFrutos => 2,
            SchemeId::Pade6 => 3,
            SchemeId::Pade8 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Ismail => "ismail",
            SchemeId::DeFrutos => "de_frutos",
            SchemeId::Pade6 => "pade6",
            SchemeId::Pade8 => "pade8",
        }
    }

    fn mass_stencil(self) -> [i64; 5] {
        match self {
            SchemeId::Ismail => [0, 0, 1, 0, 0],
            SchemeId::DeFrutos => [1, 26, 66, 26, 1],
            SchemeId::Pade6 => [1, 56, 126, 56, 1],
            SchemeId::Pade8 => [1, 16, 36, 16, 1],
        }
    }

    fn mass_denominator(self) -> i64 {
        match self {
            SchemeId::Ismail => 1,
            SchemeId::DeFrutos => 120,
            SchemeId::Pade6 => 240,
            SchemeId::Pade8 => 70,
        }
    }

    fn first_stencil(self) -> ([i64; 5], i64) {
        match self {
            SchemeId::Ismail => ([0, -1, 0, 1, 0], 2),
            SchemeId::DeFrutos | SchemeId::Pade6 => ([-1, -10, 0, 10, 1], 24),
            SchemeId::Pade8 => ([-5, -32, 0, 32, 5], 84),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ismail" | "1" => Ok(SchemeId::Ismail),
            "de_frutos" | "defrutos" | "2" => Ok(SchemeId::DeFrutos),
            "pade6" | "pade_6" | "3" => Ok(SchemeId::Pade6),
            "pade8" | "pade_8" | "4" => Ok(SchemeId::Pade8),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme {other:?}; expected ismail, de_frutos, pade6 or pade8"
            ))),
        }
    }
}

/// Which role a stencil plays in the semi-discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Mass,
    FirstDerivative,
    ThirdDerivative,
}

impl OperatorKind {
    pub fn dx_power(self) -> i32 {
        match self {
            OperatorKind::Mass => 0,
            OperatorKind::FirstDerivative => 1,
            OperatorKind::ThirdDerivative => 3,
        }
    }
}

/// Periodic five-point stencil `Σ_j w_j E^j` with weights scaled by `dx^-power`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator {
    kind: OperatorKind,
    rational: [Ratio<i64>; 5],
    dx: f64,
    weights: [f64; 5],
}

impl StencilOperator {
    fn new(kind: OperatorKind, numerators: [i64; 5], denominator: i64, dx: f64) -> Self {
        let rational = numerators.map(|n| Ratio::new(n, denominator));
        let scale = dx.powi(kind.dx_power());
        let weights = rational.map(|r| r.to_f64().unwrap_or(f64::NAN) / scale);
        Self { kind, rational, dx, weights }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dx_power(&self) -> i32 {
        self.kind.dx_power()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Unscaled coefficients, exactly as rationals.
    pub fn rational_coefficients(&self) -> &[Ratio<i64>; 5] {
        &self.rational
    }

    /// Floating-point weights including the `dx^-power` factor.
    pub fn coefficients(&self) -> &[f64; 5] {
        &self.weights
    }

    /// `(op · u)_m = Σ_j w_j u_{(m + j) mod M}` written into `out`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        periodic_convolve(&self.weights, u, out);
    }

    pub fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        out
    }

    pub fn apply(&self, field: &crate::grid::FieldState) -> crate::grid::FieldState {
        crate::grid::FieldState::new(field.t, self.apply_values(&field.values))
    }

    /// Fourier symbol `Σ_j w_j e^{i j θ}` as `(re, im)`.
    pub fn symbol(&self, theta: f64) -> (f64, f64) {
        OFFSETS.iter().zip(&self.weights).fold((0.0, 0.0), |(re, im), (&j, &w)| {
            let a = j as f64 * theta;
            (re + w * a.cos(), im + w * a.sin())
        })
    }

    /// The circulant matrix of this stencil on `n` nodes.
    pub fn to_matrix(&self, n: usize) -> Result<PeriodicBandedMatrix> {
        PeriodicBandedMatrix::circulant(n, self.weights)
    }
}

/// Periodic five-point convolution; the interior runs without index wrapping.
pub(crate) fn periodic_convolve(w: &[f64; 5], u: &[f64], out: &mut [f64]) {
    let n = u.len();
    assert!(n >= 5, "periodic stencil needs at least 5 nodes");
    assert_eq!(out.len(), n);
    let at = |m: usize| {
        w[0] * u[(m + n - 2) % n] + w[1] * u[(m + n - 1) % n] + w[2] * u[m] + w[3] * u[(m + 1) % n] + w[4] * u[(m + 2) % n]
    };
    for m in [0, 1, n - 2, n - 1] {
        out[m] = at(m);
    }
    for (m, win) in u.windows(5).enumerate() {
        out[m + 2] = w[0] * win[0] + w[1] * win[1] + w[2] * win[2] + w[3] * win[3] + w[4] * win[4];
    }
}

fn check_dx(dx: f64) -> Result<()> {
    if dx.is_finite() && dx > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("grid spacing must be positive, got {dx}")))
    }
}

/// Mass operator `A`.
pub fn operator_a(scheme: SchemeId) -> StencilOperator {
    StencilOperator::new(OperatorKind::Mass, scheme.mass_stencil(), scheme.mass_denominator(), 1.0)
}

/// First-derivative numerator `B`.
pub fn operator_b(scheme: SchemeId, dx: f64) -> Result<StencilOperator> {
    check_dx(dx)?;
    let (num, den) = scheme.first_stencil();
    Ok(StencilOperator::new(OperatorKind::FirstDerivative, num, den, dx))
}

/// Third-derivative numerator `C`, common to all four schemes.
pub fn operator_c(_scheme: SchemeId, dx: f64) -> Result<StencilOperator> {
    check_dx(dx)?;
    Ok(StencilOperator::new(OperatorKind::ThirdDerivative, [-1, 2, 0, -2, 1], 2, dx))
}

/// The `(A, B, C)` triple of a scheme at spacing `dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOperators {
    pub scheme: SchemeId,
    pub a: StencilOperator,
    pub b: StencilOperator,
    pub c: StencilOperator,
}

impl SchemeOperators {
    pub fn new(scheme: SchemeId, dx: f64) -> Result<Self> {
        Ok(Self { scheme, a: operator_a(scheme), b: operator_b(scheme, dx)?, c: operator_c(scheme, dx)? })
    }
}

/// Applies `A⁻¹ N` (with `N = B` or `C`) to periodic samples.
pub fn rational_derivative(scheme: SchemeId, derivative: u8, dx: f64, u: &[f64]) -> Result<Vec<f64>> {
    let num = match derivative {
        1 => operator_b(scheme, dx)?,
        3 => operator_c(scheme, dx)?,
        d => return Err(Error::InvalidParameter(format!("derivative order must be 1 or 3, got {d}"))),
    };
    let rhs = num.apply_values(u);
    operator_a(scheme).to_matrix(u.len())?.solve(&rhs)
}

/// Observed convergence order between successive grids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalOrder {
    pub nodes: Vec<usize>,
    pub errors: Vec<f64>,
    /// `log2(e_k / e_{k+1})` for each successive pair; `None` where the
    /// coarser error is already at the rounding floor.
    pub orders: Vec<Option<f64>>,
}

impl EmpiricalOrder {
    /// Order on the finest valid pair.
    pub fn finest(&self) -> Option<f64> {
        self.orders.iter().rev().find_map(|o| *o)
    }
}

/// Grids used for the order study.
pub const ORDER_STUDY_NODES: [usize; 3] = [64, 128, 256];
/// Wavenumber of the periodic test function `sin(k x)` on `[0, 2π)`.
pub const ORDER_STUDY_WAVENUMBER: f64 = 5.0;

/// Measures the truncation order of `A⁻¹B` (derivative 1) or `A⁻¹C`
/// (derivative 3) on `sin(5x)` with `M ∈ {64, 128, 256}`.
pub fn empirical_order(scheme: SchemeId, derivative: u8) -> Result<EmpiricalOrder> {
    empirical_order_on(scheme, derivative, &ORDER_STUDY_NODES, ORDER_STUDY_WAVENUMBER)
}

pub fn empirical_order_on(scheme: SchemeId, derivative: u8, nodes: &[usize], k: f64) -> Result<EmpiricalOrder> {
    if nodes.len() < 2 {
        return Err(Error::InsufficientData("order study needs at least two grids".into()));
    }
    let mut errors = Vec::with_capacity(nodes.len());
    let mut floors = Vec::with_capacity(nodes.len());
    for &m in nodes {
        let dx = 2.0 * PI / m as f64;
        let x: Vec<f64> = (0..m).map(|i| i as f64 * dx).collect();
        let u: Vec<f64> = x.iter().map(|&x| (k * x).sin()).collect();
        let exact: Vec<f64> = match derivative {
            1 => x.iter().map(|&x| k * (k * x).cos()).collect(),
            3 => x.iter().map(|&x| -k.powi(3) * (k * x).cos()).collect(),
            d => return Err(Error::InvalidParameter(format!("derivative order must be 1 or 3, got {d}"))),
        };
        let approx = rational_derivative(scheme, derivative, dx, &u)?;
        let err = approx.iter().zip(&exact).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
        errors.push(err);
        // rounding in an O(dx^-d) difference of O(1) samples
        floors.push(16.0 * f64::EPSILON * dx.powi(-(derivative as i32)));
    }
    let orders = errors
        .windows(2)
        .zip(floors.windows(2))
        .map(|(e, f)| (e[1] > f[1] && e[0] > f[0]).then(|| (e[0] / e[1]).log2()))
        .collect();
    Ok(EmpiricalOrder { nodes: nodes.to_vec(), errors, orders })
}
