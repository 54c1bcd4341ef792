//! Periodic grids, the compacton family and exact-solution sampling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, L)` with `M` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    length: f64,
    nodes: usize,
    dx: f64,
}

impl GridSpec {
    pub const MIN_NODES: usize = 8;

    pub fn new(length: f64, nodes: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!("domain length must be positive, got {length}")));
        }
        if nodes < Self::MIN_NODES {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {} nodes, got {nodes}",
                Self::MIN_NODES
            )));
        }
        Ok(Self { length, nodes, dx: length / nodes as f64 })
    }

    /// Builds the grid from a target spacing; `L/dx` must be an integer up to rounding.
    pub fn from_spacing(length: f64, dx: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {dx}")));
        }
        let ratio = length / dx;
        let nodes = ratio.round();
        if (ratio - nodes).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "domain length {length} is not an integer multiple of dx = {dx}"
            )));
        }
        Self::new(length, nodes as usize)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, m: usize) -> f64 {
        m as f64 * self.dx
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nodes).map(|m| self.x(m))
    }

    /// Periodic index wrap for a signed offset.
    pub fn wrap(&self, m: isize) -> usize {
        m.rem_euclid(self.nodes as isize) as usize
    }
}

/// Fixed time step, horizon and the times at which the field is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    dt: f64,
    t_end: f64,
    snapshot_times: Vec<f64>,
}

impl TimeSpec {
    pub fn new(dt: f64, t_end: f64, snapshot_times: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!("final time must be non-negative, got {t_end}")));
        }
        if let Some(bad) = snapshot_times.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
            return Err(Error::InvalidParameter(format!("snapshot time {bad} outside [0, {t_end}]")));
        }
        let mut snapshot_times = snapshot_times;
        snapshot_times.sort_by(f64::total_cmp);
        snapshot_times.dedup();
        Ok(Self { dt, t_end, snapshot_times })
    }

    /// Snapshots at `0, interval, 2·interval, …` up to and including `t_end`.
    pub fn with_interval(dt: f64, t_end: f64, interval: f64) -> Result<Self> {
        if !(interval.is_finite() && interval > 0.0) {
            return Err(Error::InvalidParameter(format!("snapshot interval must be positive, got {interval}")));
        }
        let count = (t_end / interval + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=count).map(|i| i as f64 * interval).collect();
        if times.last().is_some_and(|&t| (t - t_end).abs() > 1e-9 * t_end.max(1.0)) {
            times.push(t_end);
        }
        Self::new(dt, t_end, times)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn snapshot_times(&self) -> &[f64] {
        &self.snapshot_times
    }

    /// Number of whole steps needed to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Rational nonlinearity exponent `p`, kept exact so that the family
/// `p = (2+k)/k` is represented without rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exponent(Ratio<i64>);

impl Exponent {
    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidParameter("exponent has zero denominator".into()));
        }
        Ok(Self(Ratio::new(numer, denom)))
    }

    pub fn integer(p: i64) -> Self {
        Self(Ratio::from_integer(p))
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// `Some(p)` when the exponent is a small integer usable with `powi`.
    pub fn as_integer(&self) -> Option<i32> {
        if self.0.is_integer() {
            i32::try_from(self.0.to_integer()).ok()
        } else {
            None
        }
    }

    /// The exponent `p + 1` used by the second invariant.
    pub fn plus_one(&self) -> Self {
        Self(self.0 + 1)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse exponent {s:?}; expected an integer or n/d"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| bad())?;
                let d: i64 = d.trim().parse().map_err(|_| bad())?;
                Self::new(n, d)
            }
            None => s.parse::<i64>().map(Self::integer).map_err(|_| bad()),
        }
    }
}

/// Physical parameters of a single compacton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactonSpec {
    p: Exponent,
    c: f64,
    x0: f64,
    c0: f64,
    alpha: f64,
    beta: f64,
    mu: f64,
}

impl CompactonSpec {
    pub fn new(p: Exponent, c: f64, x0: f64, c0: f64) -> Result<Self> {
        let r = p.ratio();
        if r == Ratio::from_integer(-1) || r.is_zero() || r == Ratio::from_integer(1) {
            return Err(Error::InvalidParameter(format!("exponent p = {p} is excluded (p must not be -1, 0 or 1)")));
        }
        if r <= Ratio::from_integer(1) {
            return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("compacton velocity must be positive, got {c}")));
        }
        if !x0.is_finite() || !c0.is_finite() {
            return Err(Error::InvalidParameter("x0 and c0 must be finite".into()));
        }
        let pv = p.value();
        Ok(Self {
            p,
            c,
            x0,
            c0,
            alpha: 2.0 * c * pv / (pv + 1.0),
            beta: (pv - 1.0) / (2.0 * pv),
            mu: 1.0 / (pv - 1.0),
        })
    }

    pub fn p(&self) -> Exponent {
        self.p
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn with_x0(self, x0: f64) -> Self {
        Self { x0, ..self }
    }

    /// Peak amplitude `α^μ`.
    pub fn amplitude(&self) -> f64 {
        self.alpha.powf(self.mu)
    }

    /// Support half-width `π/(2β)`.
    pub fn half_width(&self) -> f64 {
        PI / (2.0 * self.beta)
    }

    /// Velocity of the profile in the computational frame.
    pub fn frame_velocity(&self) -> f64 {
        self.c - self.c0
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        let xi = x - self.x0 - self.frame_velocity() * t;
        if xi.abs() >= self.half_width() {
            return 0.0;
        }
        let cos = (self.beta * xi).cos();
        self.amplitude() * (cos * cos).powf(self.mu)
    }

    /// Left and right support edges at time `t`.
    pub fn support_edges(&self, t: f64) -> (f64, f64) {
        let shift = self.frame_velocity() * t;
        (self.x0 - self.half_width() + shift, self.x0 + self.half_width() + shift)
    }
}

/// Exact compacton amplitude at `(x, t)`.
pub fn compacton_value(spec: &CompactonSpec, x: f64, t: f64) -> f64 {
    spec.value(x, t)
}

pub fn support_edges(spec: &CompactonSpec, t: f64) -> (f64, f64) {
    spec.support_edges(t)
}

/// Discrete solution on the periodic grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub values: Vec<f64>,
}

impl FieldState {
    pub fn new(t: f64, values: Vec<f64>) -> Self {
        Self { t, values }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { t: 0.0, values: vec![0.0; grid.nodes()] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Samples the compacton at `t = 0` on the grid.
pub fn sample_initial(spec: &CompactonSpec, grid: &GridSpec) -> Result<FieldState> {
    let (left, right) = spec.support_edges(0.0);
    if left <= 0.0 || right >= grid.length() {
        return Err(Error::Configuration(format!(
            "compacton support [{left:.6}, {right:.6}] is not inside the domain (0, {})",
            grid.length()
        )));
    }
    let values = grid.coordinates().map(|x| spec.value(x, 0.0)).collect();
    Ok(FieldState::new(0.0, values))
}
