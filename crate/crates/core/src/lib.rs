//! Compacton propagation for the `K(p,p)` equation
//!
//! ```text
//! u_t − c0 u_x + (u^p)_x + (u^p)_xxx = 0
//! ```
//!
//! on a periodic grid with four compact five-point schemes and two implicit
//! time rules, plus the measurement tools used to characterize the small
//! numerically induced radiation that the schemes emit: wavepacket
//! amplitudes, front tracking, scaling exponents and analytic group
//! velocities.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod conservation;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod radiation;
pub mod regression;
pub mod schemes;
pub mod stepper;

pub use banded::{solve_periodic_banded, PeriodicBandedMatrix, PeriodicLu};
pub use conservation::{invariant, InvariantSeries};
pub use dispersion::{dispersion_curve, group_velocity, predicted_front_velocities, DispersionCurve, FrontPrediction};
pub use error::{Error, Result};
pub use grid::{compacton_value, sample_initial, support_edges, CompactonSpec, Exponent, FieldState, GridSpec, TimeSpec};
pub use radiation::{
    analyze, convergence_exponent, five_point_maximum, front_velocity, scaling_exponent, AnalysisConfig, ExponentFit, Partition,
    RadiationAnalyzer, RadiationReport, SideReport, ThresholdPolicy, WavepacketSide,
};
pub use regression::{linear_fit, log_log_fit, RegressionFit};
pub use schemes::{empirical_order, operator_a, operator_b, operator_c, SchemeId, StencilOperator};
pub use stepper::{run, signed_power, step, NewtonReport, RunOutcome, StepperConfig, TimeRule, Trajectory};
