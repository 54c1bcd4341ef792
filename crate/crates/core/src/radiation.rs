//! Measurement of the forward and backward radiation wavepackets.
//!
//! Each side of the compacton owns a contiguous arc of the periodic grid,
//! ordered from its outer end toward the compacton. Amplitudes, fronts and
//! envelope means are all read along that arc, so a packet that has not
//! reached the end of its arc is measured exactly as on an unbounded line.

use std::fmt;
use std::str::FromStr;

use crate::dispersion::{predicted_front_velocities_with_probe, BACKWARD_PROBE};
use crate::error::{Error, Result};
use crate::grid::{CompactonSpec, FieldState, GridSpec};
use crate::regression::{linear_fit, log_log_fit, RegressionFit};
use crate::schemes::SchemeId;
use crate::stepper::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WavepacketSide {
    /// Ahead of the compacton (right of its support).
    Forward,
    /// Behind the compacton (left of its support).
    Backward,
}

impl WavepacketSide {
    pub const BOTH: [WavepacketSide; 2] = [WavepacketSide::Forward, WavepacketSide::Backward];

    pub fn name(self) -> &'static str {
        match self {
            WavepacketSide::Forward => "forward",
            WavepacketSide::Backward => "backward",
        }
    }
}

impl fmt::Display for WavepacketSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WavepacketSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" | "f" => Ok(WavepacketSide::Forward),
            "backward" | "b" => Ok(WavepacketSide::Backward),
            other => Err(Error::InvalidParameter(format!("unknown wavepacket side '{other}'"))),
        }
    }
}

/// How the free part of the ring is divided between the two sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Partition {
    /// Split in proportion to the predicted speeds at which the fronts leave
    /// the compacton, so that both reach the ends of their arcs together.
    PredictedSpeeds,
    /// Each side runs from the compacton to the physical domain boundary.
    DomainEnds,
}

/// Half-max threshold used for front tracking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    /// This fraction of the amplitude detected in the latest measurable
    /// snapshot of the run.
    FinalFraction(f64),
    /// A fixed absolute level for both sides.
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Nodes skipped beyond each compacton edge.
    pub guard_nodes: usize,
    /// Leading fraction of the time axis left out of the scaling fit.
    pub discard_fraction: f64,
    /// Scans start where `|U|` first exceeds this fraction of the arc maximum.
    pub noise_floor: f64,
    /// A five-point maximum counts only if nothing within this distance on its
    /// inner side is larger. Zero gives the bare five-point rule.
    pub dominance_length: f64,
    pub threshold: ThresholdPolicy,
    pub partition: Partition,
    /// Fraction of `k_max` used for the backward speed prediction.
    pub probe: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            guard_nodes: 5,
            discard_fraction: 0.25,
            noise_floor: 1e-3,
            dominance_length: 10.0,
            threshold: ThresholdPolicy::FinalFraction(0.5),
            partition: Partition::PredictedSpeeds,
            probe: BACKWARD_PROBE,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discard_fraction) {
            return Err(Error::InvalidParameter(format!(
                "discard_fraction must lie in [0, 1), got {}",
                self.discard_fraction
            )));
        }
        if !(self.noise_floor >= 0.0 && self.noise_floor < 1.0) {
            return Err(Error::InvalidParameter(format!("noise_floor must lie in [0, 1), got {}", self.noise_floor)));
        }
        if !(self.dominance_length >= 0.0 && self.dominance_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dominance_length must be non-negative, got {}",
                self.dominance_length
            )));
        }
        match self.threshold {
            ThresholdPolicy::FinalFraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::InvalidParameter(format!("threshold fraction must lie in (0, 1], got {f}")));
            }
            ThresholdPolicy::Absolute(v) if !(v > 0.0 && v.is_finite()) => {
                return Err(Error::InvalidParameter(format!("absolute threshold must be positive, got {v}")));
            }
            _ => {}
        }
        if !(self.probe > 0.0 && self.probe <= 1.0) {
            return Err(Error::InvalidParameter(format!("probe must lie in (0, 1], got {}", self.probe)));
        }
        Ok(())
    }
}

/// Index of the first five-point maximum at or after `start`.
///
/// The pattern is `v[j] < v[j+1] < v[j+2] > v[j+3] > v[j+4]`; the returned
/// index is the central node `j + 2`. When `dominance > 0` the central value
/// must also be at least every value up to `dominance` nodes past it.
pub fn five_point_maximum(values: &[f64], start: usize, dominance: usize) -> Option<usize> {
    let n = values.len();
    if n < 5 {
        return None;
    }
    (start..n - 4).map(|j| j + 2).find(|&c| {
        let v = &values[c - 2..=c + 2];
        v[0] < v[1]
            && v[1] < v[2]
            && v[2] > v[3]
            && v[3] > v[4]
            && values[c..=(c + dominance).min(n - 1)].iter().all(|&w| w <= v[2])
    })
}

/// The arc of grid nodes belonging to one side at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SideArc {
    pub side: WavepacketSide,
    /// Grid indices, outer end first.
    pub nodes: Vec<usize>,
    /// Unwrapped coordinates of `nodes`; continuous across the periodic seam.
    pub coords: Vec<f64>,
    /// Coordinate of the compacton support edge on this side.
    pub edge: f64,
}

impl SideArc {
    fn magnitudes(&self, field: &FieldState) -> Vec<f64> {
        self.nodes.iter().map(|&m| field.values[m].abs()).collect()
    }

    /// Distance from the compacton edge, positive outward.
    pub fn distance(&self, x: f64) -> f64 {
        match self.side {
            WavepacketSide::Forward => x - self.edge,
            WavepacketSide::Backward => self.edge - x,
        }
    }
}

/// Radiation measurements bound to one scheme, compacton and grid.
#[derive(Debug, Clone)]
pub struct RadiationAnalyzer {
    spec: CompactonSpec,
    grid: GridSpec,
    config: AnalysisConfig,
    /// Fraction of the free ring assigned to the backward side.
    backward_share: f64,
}

impl RadiationAnalyzer {
    pub fn new(scheme: SchemeId, spec: &CompactonSpec, grid: &GridSpec, config: &AnalysisConfig) -> Result<Self> {
        config.validate()?;
        let pred = predicted_front_velocities_with_probe(scheme, spec.c0(), grid.dx(), config.probe)?;
        // speeds at which each front separates from the moving compacton
        let v = spec.frame_velocity();
        let (f, b) = ((pred.forward - v).abs(), (pred.backward - v).abs());
        let backward_share = if f + b > 0.0 { b / (f + b) } else { 0.5 };
        Ok(Self { spec: *spec, grid: *grid, config: config.clone(), backward_share })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn backward_share(&self) -> f64 {
        self.backward_share
    }

    fn dominance_nodes(&self) -> usize {
        (self.config.dominance_length / self.grid.dx()).round() as usize
    }

    /// Node arc owned by `side` at time `t`.
    pub fn arc(&self, side: WavepacketSide, t: f64) -> Result<SideArc> {
        let m = self.grid.nodes() as isize;
        let dx = self.grid.dx();
        let guard = self.config.guard_nodes as isize;
        let (xl, xr) = self.spec.support_edges(t);
        // last node at or left of the left edge, first at or right of the right edge
        let le = (xl / dx).floor() as isize;
        let re = (xr / dx).ceil() as isize;
        let inner_b = le - guard;
        let inner_f = re + guard;
        let free = m - (inner_f - inner_b - 1);
        if free < 2 {
            return Err(Error::Configuration("the compacton and guard bands cover the whole grid".into()));
        }
        let unwrapped: Vec<isize> = match self.config.partition {
            Partition::PredictedSpeeds => {
                let nb = ((free as f64) * self.backward_share).round().clamp(1.0, (free - 1) as f64) as isize;
                let nf = free - nb;
                match side {
                    WavepacketSide::Backward => (inner_b - nb + 1..=inner_b).collect(),
                    WavepacketSide::Forward => (inner_f..inner_f + nf).rev().collect(),
                }
            }
            Partition::DomainEnds => {
                if inner_b < 0 || inner_f > m - 1 {
                    return Err(Error::Configuration(format!(
                        "compacton support [{xl:.4}, {xr:.4}] plus guard bands crosses the domain boundary"
                    )));
                }
                match side {
                    WavepacketSide::Backward => (0..=inner_b).collect(),
                    WavepacketSide::Forward => (inner_f..m).rev().collect(),
                }
            }
        };
        Ok(SideArc {
            side,
            nodes: unwrapped.iter().map(|&i| self.grid.wrap(i)).collect(),
            coords: unwrapped.iter().map(|&i| i as f64 * dx).collect(),
            edge: match side {
                WavepacketSide::Forward => xr,
                WavepacketSide::Backward => xl,
            },
        })
    }

    /// First local maximum of the wavepacket, scanning inward from its front.
    ///
    /// Not detected when the arc is quiet, when no five-point maximum exists,
    /// or when the packet has already reached the outer end of its arc.
    pub fn detect_amplitude(&self, field: &FieldState, side: WavepacketSide) -> Result<f64> {
        let arc = self.arc(side, field.t)?;
        self.detect_on_arc(field, &arc).map(|(_, v)| v)
    }

    fn detect_on_arc(&self, field: &FieldState, arc: &SideArc) -> Result<(usize, f64)> {
        let mags = arc.magnitudes(field);
        if mags.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: field.t, reason: "non-finite field during analysis".into() });
        }
        let peak = mags.iter().fold(0.0_f64, |m, &v| m.max(v));
        let side = arc.side;
        if peak == 0.0 {
            return Err(Error::NotDetected(format!("{side} side is identically zero at t = {}", field.t)));
        }
        let floor = self.config.noise_floor * peak;
        let start = mags.iter().position(|&v| v > floor).unwrap_or(0);
        if start == 0 {
            return Err(Error::NotDetected(format!("{side} wavepacket fills its arc at t = {}", field.t)));
        }
        // let the pattern begin just outside the first significant node
        let from = start.saturating_sub(2);
        five_point_maximum(&mags, from, self.dominance_nodes())
            .map(|i| (i, mags[i]))
            .ok_or_else(|| Error::NotDetected(format!("no five-point maximum on the {side} side at t = {}", field.t)))
    }

    /// First crossing of `threshold` from the outer end of the arc, linearly
    /// interpolated between the straddling nodes.
    pub fn front_position(&self, field: &FieldState, side: WavepacketSide, threshold: f64) -> Result<f64> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!("threshold must be positive, got {threshold}")));
        }
        let arc = self.arc(side, field.t)?;
        front_on_arc(field, &arc, threshold).map(|(_, x)| x)
    }

    /// Mean of `|U|` over the arc nodes strictly between the front and the
    /// compacton.
    pub fn mean_envelope_amplitude(&self, field: &FieldState, side: WavepacketSide, front: f64) -> Result<f64> {
        let arc = self.arc(side, field.t)?;
        mean_on_arc(field, &arc, front)
    }

    /// Runs every measurement over a stored trajectory.
    ///
    /// The front threshold comes from the latest snapshot in which the side's
    /// amplitude is measurable; snapshots after it are reported as not
    /// detected.
    pub fn analyze(&self, trajectory: &Trajectory) -> Result<RadiationReport> {
        let snaps = &trajectory.snapshots;
        if snaps.is_empty() {
            return Err(Error::InsufficientData("trajectory has no snapshots".into()));
        }
        let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
        let t_last = *times.last().expect("non-empty");
        let mut sides = Vec::with_capacity(2);
        for side in WavepacketSide::BOTH {
            let arcs = snaps.iter().map(|s| self.arc(side, s.t)).collect::<Result<Vec<_>>>()?;
            let amplitudes: Vec<Option<f64>> =
                snaps.iter().zip(&arcs).map(|(s, a)| self.detect_on_arc(s, a).ok().map(|(_, v)| v)).collect();
            let reference = amplitudes.iter().rposition(Option::is_some);
            let threshold = match (self.config.threshold, reference) {
                (ThresholdPolicy::Absolute(v), _) => Some(v),
                (ThresholdPolicy::FinalFraction(f), Some(r)) => amplitudes[r].map(|a| f * a),
                (ThresholdPolicy::FinalFraction(_), None) => None,
            };
            let usable = reference.map_or(0, |r| r + 1);
            let mut fronts = vec![None; snaps.len()];
            let mut means = vec![None; snaps.len()];
            if let Some(thr) = threshold {
                for k in 0..usable {
                    if let Ok((_, x)) = front_on_arc(&snaps[k], &arcs[k], thr) {
                        fronts[k] = Some(x);
                        means[k] = mean_on_arc(&snaps[k], &arcs[k], x).ok();
                    }
                }
            }
            let amplitudes: Vec<Option<f64>> =
                amplitudes.into_iter().enumerate().map(|(k, a)| if k < usable { a } else { None }).collect();

            // positions are unwrapped, so the fit gives the speed on the grid
            let (ft, fx): (Vec<f64>, Vec<f64>) = times.iter().zip(&fronts).filter_map(|(&t, x)| x.map(|x| (t, x))).unzip();
            let front_velocity = front_velocity(&fx, &ft).ok();

            let (mt, mv): (Vec<f64>, Vec<f64>) =
                times.iter().zip(&means).filter_map(|(&t, m)| m.map(|m| (t, m))).unzip();
            let scaling = scaling_exponent_until(&mv, &mt, self.config.discard_fraction, t_last).ok();

            sides.push(SideReport {
                side,
                threshold,
                reference_time: reference.map(|r| times[r]),
                amplitudes,
                fronts,
                means,
                front_velocity,
                scaling,
            });
        }
        let backward = sides.pop().expect("two sides");
        let forward = sides.pop().expect("two sides");
        Ok(RadiationReport { times, forward, backward })
    }
}

fn front_on_arc(field: &FieldState, arc: &SideArc, threshold: f64) -> Result<(usize, f64)> {
    let side = arc.side;
    let mut prev: Option<f64> = None;
    for (i, &m) in arc.nodes.iter().enumerate() {
        let v = field.values[m].abs();
        if !v.is_finite() {
            return Err(Error::BlowUp { t: field.t, reason: "non-finite field during analysis".into() });
        }
        if v >= threshold {
            let Some(p) = prev else {
                return Err(Error::NotDetected(format!("{side} wavepacket already at the end of its arc at t = {}", field.t)));
            };
            let (x0, x1) = (arc.coords[i - 1], arc.coords[i]);
            return Ok((i, x0 + (threshold - p) / (v - p) * (x1 - x0)));
        }
        prev = Some(v);
    }
    Err(Error::NotDetected(format!("{side} side never reaches {threshold:e} at t = {}", field.t)))
}

fn mean_on_arc(field: &FieldState, arc: &SideArc, front: f64) -> Result<f64> {
    let reach = arc.distance(front);
    let (sum, count) = arc
        .nodes
        .iter()
        .zip(&arc.coords)
        .filter(|(_, &x)| arc.distance(x) < reach)
        .fold((0.0, 0usize), |(s, c), (&m, _)| (s + field.values[m].abs(), c + 1));
    if count == 0 {
        return Err(Error::NotDetected(format!("no {} nodes between the front and the compacton", arc.side)));
    }
    Ok(sum / count as f64)
}

/// Least-squares front speed from a position series.
pub fn front_velocity(positions: &[f64], times: &[f64]) -> Result<RegressionFit> {
    if positions.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "front velocity needs at least 2 detected positions, got {}",
            positions.len()
        )));
    }
    linear_fit(times, positions)
}

/// A power-law exponent together with the underlying log-log fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub fit: RegressionFit,
}

/// Decay exponent `ρ` of `mean ~ t^(−ρ)`.
///
/// Samples with `t < discard_fraction · max(t)` are dropped before fitting.
pub fn scaling_exponent(means: &[f64], times: &[f64], discard_fraction: f64) -> Result<ExponentFit> {
    let t_max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scaling_exponent_until(means, times, discard_fraction, t_max)
}

fn scaling_exponent_until(means: &[f64], times: &[f64], discard_fraction: f64, t_max: f64) -> Result<ExponentFit> {
    if means.len() != times.len() {
        return Err(Error::InvalidParameter(format!(
            "series lengths differ: {} means, {} times",
            means.len(),
            times.len()
        )));
    }
    if !(0.0..1.0).contains(&discard_fraction) {
        return Err(Error::InvalidParameter(format!("discard_fraction must lie in [0, 1), got {discard_fraction}")));
    }
    let cut = discard_fraction * t_max;
    let (t, m): (Vec<f64>, Vec<f64>) = times.iter().zip(means).filter(|(&t, _)| t >= cut && t > 0.0).unzip();
    if t.len() < 4 {
        return Err(Error::InsufficientData(format!("scaling fit needs at least 4 samples after the discard, got {}", t.len())));
    }
    let fit = log_log_fit(&t, &m)?;
    Ok(ExponentFit { exponent: -fit.slope, fit })
}

/// Grid-convergence exponent `q` of `amplitude ~ step^q`; `None` entries
/// (blow-ups or missing detections) are skipped.
pub fn convergence_exponent(amplitudes: &[Option<f64>], steps: &[f64]) -> Result<ExponentFit> {
    if amplitudes.len() != steps.len() {
        return Err(Error::InvalidParameter(format!(
            "series lengths differ: {} amplitudes, {} steps",
            amplitudes.len(),
            steps.len()
        )));
    }
    let (h, a): (Vec<f64>, Vec<f64>) = steps.iter().zip(amplitudes).filter_map(|(&h, a)| a.map(|a| (h, a))).unzip();
    if h.len() < 2 {
        return Err(Error::InsufficientData(format!("convergence fit needs at least 2 valid points, got {}", h.len())));
    }
    let fit = log_log_fit(&h, &a)?;
    Ok(ExponentFit { exponent: fit.slope, fit })
}

/// Measurements for one wavepacket, indexed like [`RadiationReport::times`].
#[derive(Debug, Clone, PartialEq)]
pub struct SideReport {
    pub side: WavepacketSide,
    pub threshold: Option<f64>,
    /// Snapshot time the threshold was taken from.
    pub reference_time: Option<f64>,
    pub amplitudes: Vec<Option<f64>>,
    pub fronts: Vec<Option<f64>>,
    pub means: Vec<Option<f64>>,
    /// Slope is the front speed on the grid, not relative to the compacton.
    pub front_velocity: Option<RegressionFit>,
    pub scaling: Option<ExponentFit>,
}

impl SideReport {
    pub fn amplitude_at(&self, times: &[f64], t: f64) -> Option<f64> {
        let k = times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))?;
        self.amplitudes[k]
    }

    pub fn detected_fronts(&self) -> usize {
        self.fronts.iter().flatten().count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiationReport {
    pub times: Vec<f64>,
    pub forward: SideReport,
    pub backward: SideReport,
}

impl RadiationReport {
    pub fn side(&self, side: WavepacketSide) -> &SideReport {
        match side {
            WavepacketSide::Forward => &self.forward,
            WavepacketSide::Backward => &self.backward,
        }
    }

    pub fn amplitude_at(&self, side: WavepacketSide, t: f64) -> Option<f64> {
        self.side(side).amplitude_at(&self.times, t)
    }
}

/// Convenience wrapper: builds an analyzer for the trajectory and runs it.
pub fn analyze(trajectory: &Trajectory, config: &AnalysisConfig) -> Result<RadiationReport> {
    RadiationAnalyzer::new(trajectory.scheme, &trajectory.spec, &trajectory.grid, config)?.analyze(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Exponent;

    fn setup(partition: Partition) -> (RadiationAnalyzer, GridSpec) {
        let spec = CompactonSpec::new(Exponent::integer(2), 1.0, 50.0, 1.0).unwrap();
        let grid = GridSpec::new(200.0, 2000).unwrap();
        let cfg = AnalysisConfig { partition, dominance_length: 0.0, ..Default::default() };
        (RadiationAnalyzer::new(SchemeId::DeFrutos, &spec, &grid, &cfg).unwrap(), grid)
    }

    #[test]
    fn five_point_on_gaussian() {
        let v: Vec<f64> = (0..11).map(|i| (-((i as f64 - 6.0) / 2.0).powi(2)).exp()).collect();
        let exhaustive = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(five_point_maximum(&v, 0, 0), Some(exhaustive));
        assert_eq!(five_point_maximum(&v, 0, 4), Some(exhaustive));
    }

    #[test]
    fn ties_continue_the_scan() {
        let v = [0.0, 1.0, 2.0, 2.0, 1.0, 0.0, 1.0, 2.0, 3.0, 2.0, 1.0];
        assert_eq!(five_point_maximum(&v, 0, 0), Some(8));
    }

    #[test]
    fn dominance_skips_small_lobes() {
        let v = [0.0, 1.0, 2.0, 1.5, 1.0, 2.0, 4.0, 5.0, 4.0, 3.0, 2.0];
        assert_eq!(five_point_maximum(&v, 0, 0), Some(2));
        assert_eq!(five_point_maximum(&v, 0, 6), Some(7));
    }

    #[test]
    fn arcs_tile_the_free_ring() {
        for partition in [Partition::PredictedSpeeds, Partition::DomainEnds] {
            let (an, grid) = setup(partition);
            let b = an.arc(WavepacketSide::Backward, 0.0).unwrap();
            let f = an.arc(WavepacketSide::Forward, 0.0).unwrap();
            let (xl, xr) = an.spec.support_edges(0.0);
            for (arc, x) in [(&b, xl), (&f, xr)] {
                let inner = *arc.coords.last().unwrap();
                assert!((arc.distance(inner) - (x - inner).abs()).abs() < 1e-12);
                assert!(arc.distance(inner) >= 5.0 * grid.dx() - 1e-12);
                // outer end first, coordinates strictly monotone
                assert!(arc.coords.windows(2).all(|w| arc.distance(w[0]) > arc.distance(w[1])));
            }
            let mut all: Vec<usize> = b.nodes.iter().chain(&f.nodes).copied().collect();
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), b.nodes.len() + f.nodes.len());
            if partition == Partition::PredictedSpeeds {
                let support = grid.nodes() - all.len();
                assert_eq!(support, ((xr / grid.dx()).ceil() - (xl / grid.dx()).floor()) as usize + 9);
                // de Frutos: forward predicted ~5x faster than backward
                assert!(f.nodes.len() > 4 * b.nodes.len());
            }
        }
    }

    #[test]
    fn zero_field_is_not_detected() {
        let (an, grid) = setup(Partition::PredictedSpeeds);
        let field = FieldState::zeros(&grid);
        for side in WavepacketSide::BOTH {
            assert!(matches!(an.detect_amplitude(&field, side), Err(Error::NotDetected(_))));
            assert!(matches!(an.front_position(&field, side, 1e-9), Err(Error::NotDetected(_))));
        }
    }

    #[test]
    fn detects_bump_and_front() {
        let (an, grid) = setup(Partition::DomainEnds);
        let mut field = FieldState::zeros(&grid);
        // bump centred on node 200 (x = 20)
        for m in 180..=220 {
            let s = (m as f64 - 200.0) / 5.0;
            field.values[m] = 1e-6 * (-s * s).exp() * if m % 2 == 0 { 1.0 } else { -1.0 };
        }
        let a = an.detect_amplitude(&field, WavepacketSide::Backward).unwrap();
        assert_eq!(a, 1e-6);
        assert!(matches!(an.detect_amplitude(&field, WavepacketSide::Forward), Err(Error::NotDetected(_))));
        let x = an.front_position(&field, WavepacketSide::Backward, 0.5e-6).unwrap();
        assert!(x > grid.x(190) && x < grid.x(200));
        let mean = an.mean_envelope_amplitude(&field, WavepacketSide::Backward, x).unwrap();
        assert!(mean > 0.0 && mean < a);
    }

    #[test]
    fn step_front_interpolates_to_midpoint() {
        let (an, grid) = setup(Partition::DomainEnds);
        let mut field = FieldState::zeros(&grid);
        for v in &mut field.values[100..400] {
            *v = 2.0;
        }
        let x = an.front_position(&field, WavepacketSide::Backward, 1.0).unwrap();
        assert!((x - (grid.x(99) + grid.dx() / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn packet_filling_its_arc_is_not_detected() {
        let (an, grid) = setup(Partition::PredictedSpeeds);
        let mut field = FieldState::zeros(&grid);
        for (m, v) in field.values.iter_mut().enumerate() {
            *v = 1e-7 * (1.0 + 0.5 * (m as f64 * 0.3).sin());
        }
        let err = an.detect_amplitude(&field, WavepacketSide::Backward).unwrap_err();
        assert!(matches!(err, Error::NotDetected(_)));
        assert!(an.front_position(&field, WavepacketSide::Backward, 1e-8).is_err());
    }

    #[test]
    fn mean_over_constant_and_zero() {
        let (an, grid) = setup(Partition::DomainEnds);
        let mut field = FieldState::zeros(&grid);
        let front = 10.0;
        assert_eq!(an.mean_envelope_amplitude(&field, WavepacketSide::Backward, front).unwrap(), 0.0);
        for v in &mut field.values {
            *v = -3.0;
        }
        assert_eq!(an.mean_envelope_amplitude(&field, WavepacketSide::Backward, front).unwrap(), 3.0);
        let arc = an.arc(WavepacketSide::Backward, 0.0).unwrap();
        let inner = *arc.coords.last().unwrap();
        assert!(an.mean_envelope_amplitude(&field, WavepacketSide::Backward, inner + 1.0).is_err());
    }

    #[test]
    fn regressions_on_synthetic_laws() {
        let t: Vec<f64> = (1..=60).map(|k| 5.0 * k as f64).collect();
        let m: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-0.5)).collect();
        let fit = scaling_exponent(&m, &t, 0.25).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert_eq!(fit.fit.points, 46);
        let h = [0.2, 0.1, 0.05];
        let a: Vec<Option<f64>> = h.iter().map(|h: &f64| Some(h * h)).collect();
        assert!((convergence_exponent(&a, &h).unwrap().exponent - 2.0).abs() < 1e-12);
        let x: Vec<f64> = t.iter().map(|t| 3.0 * t).collect();
        let v = front_velocity(&x, &t).unwrap();
        assert!((v.slope - 3.0).abs() < 1e-12 && v.r_squared == 1.0);
    }

    #[test]
    fn regression_errors() {
        assert!(matches!(front_velocity(&[1.0], &[1.0]), Err(Error::InsufficientData(_))));
        assert!(matches!(
            convergence_exponent(&[Some(1.0), None], &[0.1, 0.2]),
            Err(Error::InsufficientData(_))
        ));
        let t = [10.0, 20.0, 30.0, 40.0, 50.0];
        assert!(scaling_exponent(&[1.0, 1.0, 0.0, 1.0, 1.0], &t, 0.0).is_err());
        assert!(matches!(scaling_exponent(&[1.0; 5], &t, 0.5), Err(Error::InsufficientData(_))));
    }

    proptest::proptest! {
        #[test]
        fn scaling_recovers_any_power(rho in 0.05f64..2.0, amp in 1e-9f64..1.0, frac in 0.0f64..0.7) {
            let t: Vec<f64> = (1..=40).map(|k| 7.5 * k as f64).collect();
            let m: Vec<f64> = t.iter().map(|t| amp * t.powf(-rho)).collect();
            let fit = scaling_exponent(&m, &t, frac).unwrap();
            proptest::prop_assert!((fit.exponent - rho).abs() < 1e-12);
        }

        #[test]
        fn five_point_result_is_a_strict_peak(v in proptest::collection::vec(0.0f64..1.0, 5..60), dom in 0usize..8) {
            if let Some(c) = five_point_maximum(&v, 0, dom) {
                proptest::prop_assert!(v[c - 2] < v[c - 1] && v[c - 1] < v[c] && v[c] > v[c + 1] && v[c + 1] > v[c + 2]);
                let end = (c + dom).min(v.len() - 1);
                proptest::prop_assert!(v[c..=end].iter().all(|&w| w <= v[c]));
            }
        }
    }
}
