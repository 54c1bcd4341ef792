//! The `simulate`, `analyze` and `dispersion` subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kompakton_core::dispersion::predicted_front_velocities_with_probe;
use kompakton_core::{
    dispersion_curve, run, FieldState, InvariantSeries, RadiationAnalyzer, RadiationReport, RunOutcome, SchemeId, SideReport,
    Trajectory, WavepacketSide,
};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::CliError;
use crate::output::{self, number, optional, write_file};

pub const CONFIG_FILE: &str = "config.txt";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// What `simulate` wrote and how the run ended.
#[derive(Debug, Clone)]
pub struct SimulationSummary {
    pub dir: PathBuf,
    pub outcome: RunOutcome,
    pub snapshots: usize,
    pub steps: usize,
}

impl SimulationSummary {
    /// The error matching a run that did not complete.
    pub fn failure(&self) -> Option<CliError> {
        match &self.outcome {
            RunOutcome::Completed => None,
            RunOutcome::BlownUp { t, reason } => Some(CliError::BlowUp { t: *t, reason: reason.clone() }),
            RunOutcome::SolverFailure { t, reason } => Some(CliError::Solver(format!("at t = {t}: {reason}"))),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.failure().map_or(0, |e| e.exit_code())
    }
}

fn status_text(outcome: &RunOutcome) -> String {
    match outcome {
        RunOutcome::Completed => "outcome=completed\n".into(),
        RunOutcome::BlownUp { t, reason } => format!("outcome=blowup\nt={t}\nreason={reason}\n"),
        RunOutcome::SolverFailure { t, reason } => format!("outcome=solver_failure\nt={t}\nreason={reason}\n"),
    }
}

/// Runs the configured simulation and persists the trajectory under `dir`.
///
/// Partial trajectories of failed runs are written as well; the returned
/// summary carries the outcome.
pub fn cmd_simulate(config: &ExperimentConfig, dir: &Path) -> Result<SimulationSummary, CliError> {
    let grid = config.grid();
    let traj = run(config.scheme, &config.stepper(), &config.spec(), &grid, &config.time())?;
    write_trajectory(config, &traj, dir)?;
    Ok(SimulationSummary {
        dir: dir.to_path_buf(),
        outcome: traj.outcome.clone(),
        snapshots: traj.snapshots.len(),
        steps: traj.steps_taken(),
    })
}

pub fn write_trajectory(config: &ExperimentConfig, traj: &Trajectory, dir: &Path) -> Result<(), CliError> {
    write_file(&dir.join(CONFIG_FILE), &config.to_text())?;
    let snap_dir = dir.join(SNAPSHOT_DIR);
    if snap_dir.exists() {
        fs::remove_dir_all(&snap_dir).map_err(|e| CliError::io(&snap_dir, e))?;
    }
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let text = output::render_snapshot(snap, traj.scheme, traj.spec.p(), &traj.grid);
        write_file(&output::snapshot_path(&snap_dir, k), &text)?;
    }
    write_file(&dir.join("invariants.csv"), &output::render_invariants(&traj.invariants))?;
    write_file(&dir.join("newton.csv"), &output::render_newton(&traj.newton, traj.time.dt()))?;
    write_file(&dir.join("status.txt"), &status_text(&traj.outcome))
}

/// Reads the snapshots written by [`cmd_simulate`].
pub fn load_trajectory(dir: &Path, config: &ExperimentConfig) -> Result<Trajectory, CliError> {
    let snap_dir = dir.join(SNAPSHOT_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&snap_dir)
        .map_err(|e| CliError::io(&snap_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".csv")))
        .collect();
    paths.sort();
    let grid = config.grid();
    let mut snapshots = Vec::with_capacity(paths.len());
    for path in &paths {
        let text = output::read_file(path)?;
        let bad = |m: String| CliError::Input(format!("{}: {m}", path.display()));
        let (header, _, values) = output::parse_snapshot(&text).map_err(bad)?;
        if header.scheme != config.scheme || header.p != config.p {
            return Err(bad("scheme or p differs from the configuration".into()));
        }
        if values.len() != grid.nodes() || (header.dx - grid.dx()).abs() > 1e-12 * grid.dx() {
            return Err(bad(format!("grid differs from the configuration ({} nodes)", values.len())));
        }
        snapshots.push(FieldState::new(header.t, values));
    }
    Ok(Trajectory {
        scheme: config.scheme,
        spec: config.spec(),
        grid,
        time: config.time(),
        config: config.stepper(),
        snapshots,
        newton: Vec::new(),
        invariants: InvariantSeries::new(config.p, grid),
        outcome: RunOutcome::Completed,
    })
}

/// Measures the radiation in a stored trajectory and writes the per-side
/// series plus `summary.csv` to `out`.
///
/// `config` overrides the analysis settings stored alongside the trajectory.
pub fn cmd_analyze(dir: &Path, config: Option<&ExperimentConfig>, out: &Path) -> Result<RadiationReport, CliError> {
    let stored;
    let config = match config {
        Some(c) => c,
        None => {
            stored = parse_config(&output::read_file(&dir.join(CONFIG_FILE))?)?;
            &stored
        }
    };
    let traj = load_trajectory(dir, config)?;
    if traj.snapshots.len() < 3 {
        return Err(CliError::Input(format!("analysis needs at least 3 snapshots, found {}", traj.snapshots.len())));
    }
    let analyzer = RadiationAnalyzer::new(config.scheme, &traj.spec, &traj.grid, &config.analysis)?;
    let report = analyzer.analyze(&traj)?;
    for side in WavepacketSide::BOTH {
        write_file(&out.join(format!("radiation_{}.csv", side.name())), &render_side(&report.times, report.side(side)))?;
    }
    write_file(&out.join("summary.csv"), &render_summary(config, &report)?)?;
    Ok(report)
}

fn render_side(times: &[f64], side: &SideReport) -> String {
    let mut s = String::from("t,amplitude,front,mean_amplitude\n");
    for (k, t) in times.iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{}", number(*t), optional(side.amplitudes[k]), optional(side.fronts[k]), optional(side.means[k]));
    }
    s
}

fn render_summary(config: &ExperimentConfig, report: &RadiationReport) -> Result<String, CliError> {
    let pred = predicted_front_velocities_with_probe(config.scheme, config.c0, config.dx(), config.analysis.probe)?;
    let mut s = String::from(
        "side,detected,threshold,reference_time,front_velocity,front_r_squared,predicted_velocity,scaling_exponent,scaling_r_squared\n",
    );
    for side in WavepacketSide::BOTH {
        let r = report.side(side);
        let predicted = match side {
            WavepacketSide::Forward => pred.forward,
            WavepacketSide::Backward => pred.backward,
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            side.name(),
            u8::from(r.reference_time.is_some()),
            optional(r.threshold),
            optional(r.reference_time),
            optional(r.front_velocity.map(|f| f.slope)),
            optional(r.front_velocity.map(|f| f.r_squared)),
            number(predicted),
            optional(r.scaling.map(|f| f.exponent)),
            optional(r.scaling.map(|f| f.fit.r_squared)),
        );
    }
    Ok(s)
}

/// Writes the group-velocity curve and the two front-speed predictions.
pub fn cmd_dispersion(scheme: SchemeId, dx: f64, c0: f64, samples: usize, probe: f64, out: &Path) -> Result<(), CliError> {
    let curve = dispersion_curve(scheme, dx, c0, samples)?;
    let mut s = String::from("alpha,group_velocity\n");
    for (a, v) in curve.points() {
        let _ = writeln!(s, "{},{}", number(a), number(v));
    }
    write_file(&out.join("dispersion.csv"), &s)?;
    let pred = predicted_front_velocities_with_probe(scheme, c0, dx, probe)?;
    let text = format!(
        "quantity,value\nk_max,{}\nprobe,{}\nforward,{}\nbackward,{}\n",
        number(curve.k_max()),
        number(probe),
        number(pred.forward),
        number(pred.backward)
    );
    write_file(&out.join("predictions.csv"), &text)
}
