//! Implicit time integration of the semi-discrete system
//!
//! ```text
//! A dU/dt − c0 B U + (B + C) U^p = 0
//! ```
//!
//! with the trapezoidal or the implicit midpoint rule. Each step solves the
//! nonlinear system with Newton's method on the periodic pentadiagonal
//! Jacobian.

use std::fmt;
use std::str::FromStr;

use crate::banded::{PeriodicBandedMatrix, PeriodicLu};
use crate::conservation::InvariantSeries;
use crate::error::{Error, Result};
use crate::grid::{sample_initial, CompactonSpec, Exponent, FieldState, GridSpec, TimeSpec};
use crate::schemes::{periodic_convolve, SchemeId, SchemeOperators};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeRule {
    Trapezoidal,
    Midpoint,
}

impl TimeRule {
    pub fn name(self) -> &'static str {
        match self {
            TimeRule::Trapezoidal => "trapezoidal",
            TimeRule::Midpoint => "midpoint",
        }
    }
}

impl fmt::Display for TimeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trapezoidal" | "trapezoid" => Ok(TimeRule::Trapezoidal),
            "midpoint" | "implicit_midpoint" => Ok(TimeRule::Midpoint),
            other => Err(Error::InvalidParameter(format!("unknown time rule {other:?}; expected trapezoidal or midpoint"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub rule: TimeRule,
    /// Newton stops once the step residual (scaled by `dt`, so in amplitude
    /// units) or the Newton update falls below this value.
    pub newton_abs_tol: f64,
    pub newton_max_iters: usize,
    /// Amplitude above which the run is declared blown up; `None` means
    /// `10³ · α^μ` of the compacton being propagated.
    pub blowup_threshold: Option<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self { rule: TimeRule::Midpoint, newton_abs_tol: 1e-12, newton_max_iters: 20, blowup_threshold: None }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_abs_tol.is_finite() && self.newton_abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("newton tolerance must be positive, got {}", self.newton_abs_tol)));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::InvalidParameter("newton iteration cap must be at least 1".into()));
        }
        if let Some(b) = self.blowup_threshold {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidParameter(format!("blow-up threshold must be positive, got {b}")));
            }
        }
        Ok(())
    }

    pub fn blowup_threshold_for(&self, spec: &CompactonSpec) -> f64 {
        self.blowup_threshold.unwrap_or(1e3 * spec.amplitude())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    /// `dt · ‖residual‖∞` at the accepted iterate.
    pub final_residual: f64,
    /// `‖δ‖∞` of the last Newton update (0 when no update was needed).
    pub final_update: f64,
    pub converged: bool,
}

/// `u^p`, extended to negative `u` by odd symmetry when `p` is not an integer.
pub fn signed_power(u: f64, p: Exponent) -> f64 {
    PowerLaw::new(p).value(u)
}

/// Derivative of [`signed_power`] with respect to `u`.
pub fn signed_power_derivative(u: f64, p: Exponent) -> f64 {
    PowerLaw::new(p).derivative(u)
}

#[derive(Debug, Clone, Copy)]
struct PowerLaw {
    integer: Option<i32>,
    p: f64,
}

impl PowerLaw {
    fn new(p: Exponent) -> Self {
        Self { integer: p.as_integer(), p: p.value() }
    }

    #[inline]
    fn value(&self, u: f64) -> f64 {
        match self.integer {
            Some(2) => u * u,
            Some(3) => u * u * u,
            Some(n) => u.powi(n),
            None => u.signum() * u.abs().powf(self.p) * f64::from(u != 0.0),
        }
    }

    #[inline]
    fn derivative(&self, u: f64) -> f64 {
        match self.integer {
            Some(2) => 2.0 * u,
            Some(3) => 3.0 * u * u,
            Some(n) => f64::from(n) * u.powi(n - 1),
            None if u == 0.0 => 0.0,
            None => self.p * u.abs().powf(self.p - 1.0),
        }
    }
}

/// Residual and Jacobian evaluation for one scheme, rule and step size.
#[derive(Debug, Clone)]
pub struct Discretization {
    ops: SchemeOperators,
    rule: TimeRule,
    power: PowerLaw,
    dt: f64,
    mass_dt: [f64; 5],
    drift: [f64; 5],
    nonlinear: [f64; 5],
}

impl Discretization {
    pub fn new(scheme: SchemeId, rule: TimeRule, spec: &CompactonSpec, dx: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let ops = SchemeOperators::new(scheme, dx)?;
        let a = ops.a.coefficients();
        let b = ops.b.coefficients();
        let c = ops.c.coefficients();
        let c0 = spec.c0();
        Ok(Self {
            rule,
            power: PowerLaw::new(spec.p()),
            dt,
            mass_dt: std::array::from_fn(|k| a[k] / dt),
            drift: std::array::from_fn(|k| -c0 * b[k]),
            nonlinear: std::array::from_fn(|k| b[k] + c[k]),
            ops,
        })
    }

    pub fn scheme(&self) -> SchemeId {
        self.ops.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn check_lengths(u_n: &[f64], u_next: &[f64]) -> Result<()> {
        if u_n.len() != u_next.len() {
            return Err(Error::InvalidParameter(format!("state lengths differ: {} vs {}", u_n.len(), u_next.len())));
        }
        Ok(())
    }

    /// Point where the nonlinear term's derivative is taken.
    fn linearization_point(&self, u_n: f64, u_next: f64) -> f64 {
        match self.rule {
            TimeRule::Trapezoidal => u_next,
            TimeRule::Midpoint => 0.5 * (u_next + u_n),
        }
    }

    pub fn residual_into(&self, u_n: &[f64], u_next: &[f64], out: &mut [f64], scratch: &mut Scratch) -> Result<()> {
        Self::check_lengths(u_n, u_next)?;
        let n = u_n.len();
        scratch.resize(n);
        for m in 0..n {
            let (a, b) = (u_next[m], u_n[m]);
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::BlowUp { t: f64::NAN, reason: format!("non-finite value at node {m}") });
            }
            scratch.diff[m] = a - b;
            scratch.mean[m] = 0.5 * (a + b);
            scratch.flux[m] = match self.rule {
                TimeRule::Trapezoidal => 0.5 * (self.power.value(a) + self.power.value(b)),
                TimeRule::Midpoint => self.power.value(0.5 * (a + b)),
            };
        }
        periodic_convolve(&self.mass_dt, &scratch.diff, out);
        periodic_convolve(&self.drift, &scratch.mean, &mut scratch.tmp);
        for (o, t) in out.iter_mut().zip(&scratch.tmp) {
            *o += t;
        }
        periodic_convolve(&self.nonlinear, &scratch.flux, &mut scratch.tmp);
        for (o, t) in out.iter_mut().zip(&scratch.tmp) {
            *o += t;
        }
        Ok(())
    }

    pub fn residual(&self, u_n: &[f64], u_next: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; u_n.len()];
        self.residual_into(u_n, u_next, &mut out, &mut Scratch::default())?;
        Ok(out)
    }

    pub fn jacobian_into(&self, u_n: &[f64], u_next: &[f64], mat: &mut PeriodicBandedMatrix) -> Result<()> {
        Self::check_lengths(u_n, u_next)?;
        let n = u_n.len();
        if mat.dim() != n {
            *mat = PeriodicBandedMatrix::zeros(n)?;
        }
        let base: [f64; 5] = std::array::from_fn(|k| self.mass_dt[k] + 0.5 * self.drift[k]);
        let half_nl: [f64; 5] = std::array::from_fn(|k| 0.5 * self.nonlinear[k]);
        let d = |j: usize| self.power.derivative(self.linearization_point(u_n[j], u_next[j]));
        let rows = mat.rows_mut();
        for m in 0..n {
            for k in 0..5 {
                let j = (m + n + k - 2) % n;
                rows[m][k] = base[k] + half_nl[k] * d(j);
            }
        }
        Ok(())
    }

    pub fn jacobian(&self, u_n: &[f64], u_next: &[f64]) -> Result<PeriodicBandedMatrix> {
        let mut mat = PeriodicBandedMatrix::zeros(u_n.len())?;
        self.jacobian_into(u_n, u_next, &mut mat)?;
        Ok(mat)
    }

    /// Advances `u_n` by one step with a chord-Newton iteration started from `u_n`.
    ///
    /// The factored Jacobian is cached in `scratch` and reused across steps;
    /// it is rebuilt at the current iterate whenever a step needs more than
    /// [`REFACTOR_AFTER`] iterations with a stale factorization.
    pub fn step(&self, config: &StepperConfig, u_n: &FieldState, scratch: &mut Scratch) -> Result<(FieldState, NewtonReport)> {
        let t_next = u_n.t + self.dt;
        let n = u_n.len();
        let mut u = u_n.values.clone();
        let mut res = vec![0.0; n];
        let mut lu = scratch.lu.take().filter(|lu| lu.dim() == n);
        let mut fresh = false;
        let mut report = NewtonReport::default();
        let tag = |e: Error| match e {
            Error::BlowUp { reason, .. } => Error::BlowUp { t: t_next, reason },
            other => other,
        };
        let mut previous = f64::INFINITY;
        loop {
            self.residual_into(&u_n.values, &u, &mut res, scratch).map_err(tag)?;
            report.final_residual = self.dt * max_abs(&res);
            if !fresh && report.iterations > 0 && !(report.final_residual <= DIVERGENCE_RATIO * previous) {
                // the reused factorization is too far from the current Jacobian
                u.copy_from_slice(&u_n.values);
                lu = None;
                previous = f64::INFINITY;
                continue;
            }
            previous = report.final_residual;
            if !report.final_residual.is_finite() {
                return Err(Error::BlowUp { t: t_next, reason: "non-finite residual".into() });
            }
            if report.final_residual <= config.newton_abs_tol
                || (report.iterations > 0 && report.final_update <= config.newton_abs_tol)
            {
                report.converged = true;
                scratch.lu = lu;
                return Ok((FieldState::new(t_next, u), report));
            }
            if report.iterations >= config.newton_max_iters {
                return Err(Error::NewtonFailure { t: t_next, report });
            }
            if lu.is_none() || (!fresh && report.iterations >= REFACTOR_AFTER) {
                let jac = scratch.jac.get_or_insert_with(|| PeriodicBandedMatrix::zeros(n).expect("n >= 8"));
                self.jacobian_into(&u_n.values, &u, jac)?;
                lu = Some(jac.factor()?);
                fresh = true;
            }
            for r in res.iter_mut() {
                *r = -*r;
            }
            lu.as_ref().expect("factored above").solve_in_place(&mut res)?;
            report.iterations += 1;
            report.final_update = max_abs(&res);
            if !report.final_update.is_finite() {
                return Err(Error::BlowUp { t: t_next, reason: "non-finite newton update".into() });
            }
            for (ui, di) in u.iter_mut().zip(&res) {
                *ui += di;
                if ui.abs() < STATE_FLUSH {
                    *ui = 0.0;
                }
            }
        }
    }
}

/// Residual growth factor at which a chord iteration with a reused
/// factorization is abandoned and the step restarted with a fresh Jacobian.
pub const DIVERGENCE_RATIO: f64 = 2.0;

/// Iterations allowed with a reused factorization before it is rebuilt.
pub const REFACTOR_AFTER: usize = 3;

/// State values below this magnitude are set to zero after each Newton
/// update so that `u^p` never underflows into subnormals.
pub const STATE_FLUSH: f64 = 1e-100;

/// Reusable work buffers and the cached Jacobian factorization.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    lu: Option<PeriodicLu>,
    jac: Option<PeriodicBandedMatrix>,
    diff: Vec<f64>,
    mean: Vec<f64>,
    flux: Vec<f64>,
    tmp: Vec<f64>,
}

impl Scratch {
    fn resize(&mut self, n: usize) {
        for v in [&mut self.diff, &mut self.mean, &mut self.flux, &mut self.tmp] {
            v.resize(n, 0.0);
        }
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Residual of the implicit rule for the candidate `u_next`.
pub fn residual(
    scheme: SchemeId,
    config: &StepperConfig,
    u_n: &FieldState,
    u_next: &FieldState,
    dt: f64,
    spec: &CompactonSpec,
    dx: f64,
) -> Result<Vec<f64>> {
    Discretization::new(scheme, config.rule, spec, dx, dt)?.residual(&u_n.values, &u_next.values)
}

/// Jacobian of [`residual`] with respect to `u_next`.
pub fn jacobian(
    scheme: SchemeId,
    config: &StepperConfig,
    u_n: &FieldState,
    u_next: &FieldState,
    dt: f64,
    spec: &CompactonSpec,
    dx: f64,
) -> Result<PeriodicBandedMatrix> {
    Discretization::new(scheme, config.rule, spec, dx, dt)?.jacobian(&u_n.values, &u_next.values)
}

/// One Newton-solved time step.
pub fn step(
    scheme: SchemeId,
    config: &StepperConfig,
    u_n: &FieldState,
    dt: f64,
    spec: &CompactonSpec,
    dx: f64,
) -> Result<(FieldState, NewtonReport)> {
    config.validate()?;
    if !u_n.is_finite() {
        return Err(Error::BlowUp { t: u_n.t, reason: "non-finite initial state".into() });
    }
    Discretization::new(scheme, config.rule, spec, dx, dt)?.step(config, u_n, &mut Scratch::default())
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    BlownUp { t: f64, reason: String },
    SolverFailure { t: f64, reason: String },
}

impl RunOutcome {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunOutcome::Completed)
    }

    pub fn is_blown_up(&self) -> bool {
        matches!(self, RunOutcome::BlownUp { .. })
    }
}

/// Everything a run produces: snapshots, Newton statistics and invariants.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scheme: SchemeId,
    pub spec: CompactonSpec,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub config: StepperConfig,
    pub snapshots: Vec<FieldState>,
    pub newton: Vec<NewtonReport>,
    pub invariants: InvariantSeries,
    pub outcome: RunOutcome,
}

impl Trajectory {
    pub fn blown_up(&self) -> bool {
        !self.outcome.is_completed()
    }

    pub fn final_snapshot(&self) -> Option<&FieldState> {
        self.snapshots.last()
    }

    pub fn steps_taken(&self) -> usize {
        self.newton.len()
    }
}

/// Integrates from the sampled compacton to `t_end`, recording snapshots.
///
/// Blow-up and solver failures end the run early; the partial trajectory is
/// returned with the corresponding [`RunOutcome`].
pub fn run(scheme: SchemeId, config: &StepperConfig, spec: &CompactonSpec, grid: &GridSpec, time: &TimeSpec) -> Result<Trajectory> {
    let initial = sample_initial(spec, grid)?;
    run_from(scheme, config, spec, grid, time, initial)
}

/// As [`run`], starting from an arbitrary initial state at `t = 0`.
pub fn run_from(
    scheme: SchemeId,
    config: &StepperConfig,
    spec: &CompactonSpec,
    grid: &GridSpec,
    time: &TimeSpec,
    initial: FieldState,
) -> Result<Trajectory> {
    config.validate()?;
    if initial.len() != grid.nodes() {
        return Err(Error::Configuration(format!("initial state has {} values for {} nodes", initial.len(), grid.nodes())));
    }
    let disc = Discretization::new(scheme, config.rule, spec, grid.dx(), time.dt())?;
    let threshold = config.blowup_threshold_for(spec);
    let dt = time.dt();
    let steps = time.steps();
    let mut marks: Vec<usize> = time.snapshot_times().iter().map(|&s| ((s / dt).round() as usize).min(steps)).collect();
    marks.dedup();

    let mut traj = Trajectory {
        scheme,
        spec: *spec,
        grid: *grid,
        time: time.clone(),
        config: *config,
        snapshots: Vec::with_capacity(marks.len()),
        newton: Vec::with_capacity(steps),
        invariants: InvariantSeries::new(spec.p(), *grid),
        outcome: RunOutcome::Completed,
    };
    let record = |traj: &mut Trajectory, state: &FieldState| {
        traj.invariants.push(state);
        traj.snapshots.push(state.clone());
    };

    let mut state = initial;
    let mut next_mark = marks.iter().peekable();
    if next_mark.peek() == Some(&&0) {
        record(&mut traj, &state);
        next_mark.next();
    }
    let mut scratch = Scratch::default();
    for n in 1..=steps {
        let result = disc.step(config, &state, &mut scratch);
        let (mut next, report) = match result {
            Ok(ok) => ok,
            Err(Error::BlowUp { t, reason }) => {
                traj.outcome = RunOutcome::BlownUp { t, reason };
                return Ok(traj);
            }
            Err(Error::NewtonFailure { t, report }) => {
                traj.newton.push(report);
                traj.outcome = RunOutcome::BlownUp {
                    t,
                    reason: format!("newton failed after {} iterations (residual {:.3e})", report.iterations, report.final_residual),
                };
                return Ok(traj);
            }
            Err(Error::SingularMatrix(reason)) => {
                traj.outcome = RunOutcome::SolverFailure { t: state.t + dt, reason };
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        // keep t on the lattice n·dt instead of accumulating rounding
        next.t = n as f64 * dt;
        traj.newton.push(report);
        let peak = next.max_abs();
        if !(peak <= threshold) {
            traj.outcome = RunOutcome::BlownUp { t: next.t, reason: format!("max |U| = {peak:.3e} exceeds {threshold:.3e}") };
            return Ok(traj);
        }
        state = next;
        if next_mark.peek() == Some(&&n) {
            record(&mut traj, &state);
            next_mark.next();
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::compacton_value;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn k22(x0: f64, c0: f64) -> CompactonSpec {
        CompactonSpec::new(Exponent::integer(2), 1.0, x0, c0).unwrap()
    }

    #[test]
    fn signed_power_cases() {
        let two = Exponent::integer(2);
        assert_eq!(signed_power(-2.0, two), 4.0);
        assert_eq!(signed_power(0.0, "5/3".parse().unwrap()), 0.0);
        assert_eq!(signed_power(0.0, Exponent::integer(3)), 0.0);
        assert_relative_eq!(signed_power(-8.0, "5/3".parse().unwrap()), -32.0, epsilon = 1e-12);
        assert_relative_eq!(signed_power(8.0, "5/3".parse().unwrap()), 32.0, epsilon = 1e-12);
        assert_eq!(signed_power_derivative(0.0, "5/3".parse().unwrap()), 0.0);
        assert_relative_eq!(signed_power_derivative(-8.0, "5/3".parse().unwrap()), 5.0 / 3.0 * 4.0, epsilon = 1e-12);
        assert_eq!(signed_power_derivative(-2.0, two), -4.0);
        assert_eq!(signed_power(-2.0, Exponent::integer(5)), -32.0);
    }

    #[test]
    fn zero_and_constant_are_exact() {
        let grid = GridSpec::new(10.0, 40).unwrap();
        let zero = FieldState::zeros(&grid);
        for scheme in SchemeId::ALL {
            for rule in [TimeRule::Trapezoidal, TimeRule::Midpoint] {
                let cfg = StepperConfig { rule, ..Default::default() };
                let r = residual(scheme, &cfg, &zero, &zero, 0.1, &k22(5.0, 1.0), grid.dx()).unwrap();
                assert!(r.iter().all(|v| *v == 0.0));
                let k = FieldState::new(0.0, vec![0.7; 40]);
                let r = residual(scheme, &cfg, &k, &k, 0.1, &k22(5.0, 0.0), grid.dx()).unwrap();
                assert!(max_abs(&r) < 1e-9, "{scheme} {rule}: {}", max_abs(&r));
            }
        }
    }

    #[test]
    fn zero_field_steps_to_zero() {
        let grid = GridSpec::new(10.0, 40).unwrap();
        for scheme in SchemeId::ALL {
            let (next, report) = step(scheme, &StepperConfig::default(), &FieldState::zeros(&grid), 0.1, &k22(5.0, 1.0), grid.dx()).unwrap();
            assert!(report.iterations <= 1);
            assert!(next.values.iter().all(|v| *v == 0.0));
            assert_relative_eq!(next.t, 0.1);
        }
    }

    #[test]
    fn jacobian_of_zero_state_is_mass_over_dt() {
        let grid = GridSpec::new(10.0, 16).unwrap();
        let zero = FieldState::zeros(&grid);
        let jac = jacobian(SchemeId::DeFrutos, &StepperConfig::default(), &zero, &zero, 0.5, &k22(5.0, 0.0), grid.dx()).unwrap();
        let a = crate::schemes::operator_a(SchemeId::DeFrutos);
        for m in 0..16 {
            for (k, w) in a.coefficients().iter().enumerate() {
                assert_eq!(jac.rows()[m][k], w / 0.5);
            }
        }
        // nothing outside the periodic band
        let dense = jac.to_dense();
        for i in 0..16 {
            for j in 0..16 {
                let d = (j as isize - i as isize).rem_euclid(16);
                if d > 2 && d < 14 {
                    assert_eq!(dense[i][j], 0.0);
                }
            }
        }
    }

    /// Central-difference Jacobian, column by column.
    fn fd_jacobian(disc: &Discretization, u_n: &[f64], u_next: &[f64], h: f64) -> Vec<Vec<f64>> {
        let n = u_n.len();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut plus = u_next.to_vec();
            let mut minus = u_next.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let rp = disc.residual(u_n, &plus).unwrap();
            let rm = disc.residual(u_n, &minus).unwrap();
            cols.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
        }
        cols
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let n = 24;
        let dx = 0.3;
        for p in ["2", "3", "5/3"] {
            let spec = CompactonSpec::new(p.parse().unwrap(), 1.0, 3.0, 0.7).unwrap();
            for scheme in SchemeId::ALL {
                for rule in [TimeRule::Trapezoidal, TimeRule::Midpoint] {
                    let disc = Discretization::new(scheme, rule, &spec, dx, 0.05).unwrap();
                    let u_n: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.5)).collect();
                    let u_next: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.5)).collect();
                    let jac = disc.jacobian(&u_n, &u_next).unwrap();
                    let fd = fd_jacobian(&disc, &u_n, &u_next, 1e-6);
                    for (j, col) in fd.iter().enumerate() {
                        let scale = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                        for (i, v) in col.iter().enumerate() {
                            let err = (jac.get(i, j) - v).abs();
                            assert!(err <= 1e-5 * scale, "{scheme} {rule} p={p} ({i},{j}): {} vs {v}", jac.get(i, j));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exact_translate_has_small_residual() {
        let grid = GridSpec::from_spacing(40.0, 0.05).unwrap();
        let spec = k22(20.0, 0.0);
        let dt = 0.1;
        let u0 = sample_initial(&spec, &grid).unwrap();
        let u1 = FieldState::new(dt, grid.coordinates().map(|x| compacton_value(&spec, x, dt)).collect());
        let cfg = StepperConfig::default();
        let r = residual(SchemeId::DeFrutos, &cfg, &u0, &u1, dt, &spec, grid.dx()).unwrap();
        let norm = max_abs(&r);
        // O(1) terms cancel; what remains is truncation error, concentrated at the edges
        let scale = max_abs(&crate::schemes::operator_b(SchemeId::DeFrutos, grid.dx()).unwrap().apply_values(&u0.values));
        assert!(norm > 0.0);
        assert!(norm < 0.5 * scale, "residual {norm} vs term scale {scale}");
    }

    #[test]
    fn stopped_compacton_is_near_stationary() {
        let grid = GridSpec::from_spacing(60.0, 0.05).unwrap();
        let spec = k22(30.0, 1.0);
        let u0 = sample_initial(&spec, &grid).unwrap();
        let (u1, report) = step(SchemeId::DeFrutos, &StepperConfig::default(), &u0, 0.1, &spec, grid.dx()).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 6, "{report:?}");
        assert!((u1.max_abs() - 4.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn mass_is_conserved_by_a_step() {
        let grid = GridSpec::from_spacing(60.0, 0.1).unwrap();
        let spec = CompactonSpec::new("3/2".parse().unwrap(), 1.0, 30.0, 0.5).unwrap();
        let u0 = sample_initial(&spec, &grid).unwrap();
        for scheme in SchemeId::ALL {
            for rule in [TimeRule::Trapezoidal, TimeRule::Midpoint] {
                let cfg = StepperConfig { rule, ..Default::default() };
                let (u1, _) = step(scheme, &cfg, &u0, 0.1, &spec, grid.dx()).unwrap();
                let before: f64 = u0.values.iter().sum();
                let after: f64 = u1.values.iter().sum();
                assert!((before - after).abs() < 1e-10 * before, "{scheme} {rule}: {before} -> {after}");
            }
        }
    }

    #[test]
    fn run_with_zero_horizon() {
        let grid = GridSpec::new(40.0, 400).unwrap();
        let time = TimeSpec::with_interval(0.1, 0.0, 5.0).unwrap();
        let traj = run(SchemeId::Pade6, &StepperConfig::default(), &k22(20.0, 1.0), &grid, &time).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0].t, 0.0);
        assert!(traj.outcome.is_completed());
    }

    #[test]
    fn run_records_snapshots_on_the_step_lattice() {
        let grid = GridSpec::new(40.0, 400).unwrap();
        let time = TimeSpec::with_interval(0.1, 1.0, 0.25).unwrap();
        let traj = run(SchemeId::DeFrutos, &StepperConfig::default(), &k22(20.0, 1.0), &grid, &time).unwrap();
        assert!(traj.outcome.is_completed());
        assert_eq!(traj.steps_taken(), 10);
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times.len(), 5);
        assert_relative_eq!(*times.last().unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(traj.invariants.times.len(), 5);
    }

    #[test]
    fn huge_amplitude_is_flagged_as_blow_up() {
        let grid = GridSpec::new(40.0, 400).unwrap();
        let time = TimeSpec::with_interval(0.1, 1.0, 0.5).unwrap();
        let cfg = StepperConfig { blowup_threshold: Some(1.0), ..Default::default() };
        let traj = run(SchemeId::Ismail, &cfg, &k22(20.0, 1.0), &grid, &time).unwrap();
        assert!(traj.outcome.is_blown_up());
        assert_eq!(traj.snapshots.len(), 1);
    }

    #[test]
    fn newton_cap_is_reported() {
        let grid = GridSpec::new(40.0, 400).unwrap();
        let spec = k22(20.0, 0.0);
        let u0 = sample_initial(&spec, &grid).unwrap();
        let cfg = StepperConfig { newton_max_iters: 1, newton_abs_tol: 1e-15, ..Default::default() };
        match step(SchemeId::DeFrutos, &cfg, &u0, 0.1, &spec, grid.dx()) {
            Err(Error::NewtonFailure { report, .. }) => assert_eq!(report.iterations, 1),
            other => panic!("expected newton failure, got {other:?}"),
        }
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("midpoint".parse::<TimeRule>().unwrap(), TimeRule::Midpoint);
        assert_eq!("Trapezoidal".parse::<TimeRule>().unwrap(), TimeRule::Trapezoidal);
        assert!("euler".parse::<TimeRule>().is_err());
    }
}
