//! Parameter sweeps that regenerate the amplitude, front-velocity and
//! scaling tables.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use kompakton_core::{convergence_exponent, run, CompactonSpec, ExponentFit, GridSpec, RadiationAnalyzer, SchemeId, TimeSpec, WavepacketSide};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{number, write_file, Cell};

/// Environment variable capping the number of concurrent runs.
pub const THREADS_ENV: &str = "KOMPAKTON_THREADS";

const ALL_SCHEMES: [SchemeId; 4] = [SchemeId::Ismail, SchemeId::DeFrutos, SchemeId::Pade6, SchemeId::Pade8];
const DX_SWEEP: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];
const DT_SWEEP: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 0.00625];
const C0_RATIOS: [f64; 3] = [0.5, 1.0, 2.0];
const VELOCITY_GRIDS: [(f64, f64); 3] = [(0.1, 0.025), (0.1, 0.05), (0.5, 0.05)];
const C_SWEEP: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableId {
    AmplitudesDx,
    AmplitudesDt,
    FrontVelocities,
    ScalingDx,
    ScalingC,
}

impl TableId {
    pub const ALL: [TableId; 5] =
        [TableId::AmplitudesDx, TableId::AmplitudesDt, TableId::FrontVelocities, TableId::ScalingDx, TableId::ScalingC];

    pub fn name(self) -> &'static str {
        match self {
            TableId::AmplitudesDx => "amplitudes_dx",
            TableId::AmplitudesDt => "amplitudes_dt",
            TableId::FrontVelocities => "front_velocities",
            TableId::ScalingDx => "scaling_dx",
            TableId::ScalingC => "scaling_c",
        }
    }

    fn default_t_end(self) -> f64 {
        match self {
            TableId::AmplitudesDx | TableId::AmplitudesDt => 150.0,
            TableId::FrontVelocities => 100.0,
            TableId::ScalingDx | TableId::ScalingC => 300.0,
        }
    }

    fn quantities(self) -> [&'static str; 2] {
        match self {
            TableId::AmplitudesDx | TableId::AmplitudesDt => ["u_f", "u_b"],
            TableId::FrontVelocities => ["c_f", "c_b"],
            TableId::ScalingDx | TableId::ScalingC => ["rho_f", "rho_b"],
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        TableId::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            let names: Vec<&str> = TableId::ALL.iter().map(|t| t.name()).collect();
            CliError::Input(format!("unknown table '{s}'; expected one of {}", names.join(", ")))
        })
    }
}

/// One simulation of a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub scheme: SchemeId,
    pub dx: f64,
    pub dt: f64,
    pub c: f64,
    pub c0: f64,
    pub t_end: f64,
}

impl SweepPoint {
    fn column_label(&self, table: TableId) -> String {
        match table {
            TableId::AmplitudesDx | TableId::ScalingDx => format!("dx={}", self.dx),
            TableId::AmplitudesDt => format!("dt={}", self.dt),
            TableId::FrontVelocities => format!("dx={} dt={} c0={}", self.dx, self.dt, self.c0),
            TableId::ScalingC => format!("c0=c={}", self.c),
        }
    }

    fn swept_value(&self, table: TableId) -> f64 {
        match table {
            TableId::AmplitudesDx | TableId::ScalingDx => self.dx,
            TableId::AmplitudesDt => self.dt,
            TableId::FrontVelocities => self.c0,
            TableId::ScalingC => self.c,
        }
    }
}

/// Measured forward and backward values of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: SweepPoint,
    pub forward: Cell,
    pub backward: Cell,
}

/// A `q` fit over one scheme's amplitude row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowFit {
    pub scheme: SchemeId,
    pub quantity: &'static str,
    pub fit: Option<ExponentFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub table: TableId,
    pub points: Vec<PointResult>,
    pub fits: Vec<RowFit>,
}

impl CampaignResult {
    pub fn cell(&self, scheme: SchemeId, side: WavepacketSide, pred: impl Fn(&SweepPoint) -> bool) -> Option<Cell> {
        self.points.iter().find(|r| r.point.scheme == scheme && pred(&r.point)).map(|r| match side {
            WavepacketSide::Forward => r.forward,
            WavepacketSide::Backward => r.backward,
        })
    }

    pub fn fit(&self, scheme: SchemeId, quantity: &str) -> Option<&ExponentFit> {
        self.fits.iter().find(|f| f.scheme == scheme && f.quantity == quantity).and_then(|f| f.fit.as_ref())
    }

    fn schemes(&self) -> Vec<SchemeId> {
        let mut out: Vec<SchemeId> = Vec::new();
        for r in &self.points {
            if !out.contains(&r.point.scheme) {
                out.push(r.point.scheme);
            }
        }
        out
    }

    /// Layout with schemes as row groups and the swept parameter as columns.
    pub fn render_table(&self) -> String {
        let schemes = self.schemes();
        let Some(first) = schemes.first() else { return String::from("method,quantity\n") };
        let columns: Vec<&PointResult> = self.points.iter().filter(|r| r.point.scheme == *first).collect();
        let has_fit = matches!(self.table, TableId::AmplitudesDx | TableId::AmplitudesDt);
        let mut s = String::from("method,quantity");
        for r in &columns {
            let _ = write!(s, ",{}", r.point.column_label(self.table));
        }
        s.push_str(if has_fit { ",q\n" } else { "\n" });
        let [qf, qb] = self.table.quantities();
        for scheme in schemes {
            let rows: Vec<&PointResult> = self.points.iter().filter(|r| r.point.scheme == scheme).collect();
            for (quantity, side) in [(qf, WavepacketSide::Forward), (qb, WavepacketSide::Backward)] {
                let _ = write!(s, "{},{}", scheme.name(), quantity);
                for r in &rows {
                    let cell = if side == WavepacketSide::Forward { r.forward } else { r.backward };
                    let _ = write!(s, ",{}", cell.render());
                }
                if has_fit {
                    let q = self.fit(scheme, quantity).map(|f| f.exponent);
                    let _ = write!(s, ",{}", Cell::from_option(q).render());
                }
                s.push('\n');
            }
        }
        s
    }

    /// One row per measured value.
    pub fn render_long(&self) -> String {
        let mut s = String::from("method,quantity,dx,dt,c,c0,t_end,value\n");
        let [qf, qb] = self.table.quantities();
        for r in &self.points {
            let p = &r.point;
            for (quantity, cell) in [(qf, r.forward), (qb, r.backward)] {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    p.scheme.name(),
                    quantity,
                    number(p.dx),
                    number(p.dt),
                    number(p.c),
                    number(p.c0),
                    number(p.t_end),
                    cell.render()
                );
            }
        }
        s
    }

    /// The `q` regressions of the amplitude tables.
    pub fn render_fits(&self) -> String {
        let mut s = String::from("method,quantity,q,r_squared,points\n");
        for f in &self.fits {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                f.scheme.name(),
                f.quantity,
                Cell::from_option(f.fit.map(|x| x.exponent)).render(),
                Cell::from_option(f.fit.map(|x| x.fit.r_squared)).render(),
                f.fit.map_or(0, |x| x.fit.points)
            );
        }
        s
    }

    /// Writes `<table>.csv`, `<table>_long.csv` and, for amplitude tables,
    /// `<table>_fits.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let name = self.table.name();
        write_file(&dir.join(format!("{name}.csv")), &self.render_table())?;
        write_file(&dir.join(format!("{name}_long.csv")), &self.render_long())?;
        if !self.fits.is_empty() {
            write_file(&dir.join(format!("{name}_fits.csv")), &self.render_fits())?;
        }
        Ok(())
    }
}

/// Sweep points of `table` in output order.
pub fn sweep_points(table: TableId, base: &ExperimentConfig) -> Vec<SweepPoint> {
    let camp = &base.campaign;
    let schemes: Vec<SchemeId> = if camp.schemes.is_empty() { ALL_SCHEMES.to_vec() } else { camp.schemes.clone() };
    let t_end = camp.t_end.unwrap_or(table.default_t_end());
    let sweep = |default: &[f64]| camp.sweep.clone().unwrap_or_else(|| default.to_vec());
    let c = base.c;
    let c0 = base.c0;
    let mut points = Vec::new();
    for scheme in schemes {
        let mut push = |dx: f64, dt: f64, c: f64, c0: f64| points.push(SweepPoint { scheme, dx, dt, c, c0, t_end });
        match table {
            TableId::AmplitudesDx | TableId::ScalingDx => sweep(&DX_SWEEP).into_iter().for_each(|dx| push(dx, 0.05, c, c0)),
            TableId::AmplitudesDt => sweep(&DT_SWEEP).into_iter().for_each(|dt| push(0.05, dt, c, c0)),
            TableId::FrontVelocities => {
                let grids = camp.velocity_grids.clone().unwrap_or_else(|| VELOCITY_GRIDS.to_vec());
                let ratios = sweep(&C0_RATIOS);
                for (dx, dt) in grids {
                    for &r in &ratios {
                        push(dx, dt, c, r * c);
                    }
                }
            }
            TableId::ScalingC => sweep(&C_SWEEP).into_iter().for_each(|v| push(0.05, 0.05, v, v)),
        }
    }
    points
}

fn measure(table: TableId, base: &ExperimentConfig, point: &SweepPoint) -> Result<PointResult, CliError> {
    let spec = CompactonSpec::new(base.p, point.c, base.x0, point.c0)?;
    let grid = GridSpec::from_spacing(base.length, point.dx)?;
    let time = TimeSpec::with_interval(point.dt, point.t_end, base.snapshot_interval)?;
    let traj = run(point.scheme, &base.stepper(), &spec, &grid, &time)?;
    if traj.blown_up() {
        return Ok(PointResult { point: *point, forward: Cell::BlowUp, backward: Cell::BlowUp });
    }
    let report = RadiationAnalyzer::new(point.scheme, &spec, &grid, &base.analysis)?.analyze(&traj)?;
    let pick = |side: WavepacketSide| {
        let r = report.side(side);
        let v = match table {
            TableId::AmplitudesDx | TableId::AmplitudesDt => report.amplitude_at(side, point.t_end),
            TableId::FrontVelocities => r.front_velocity.map(|f| f.slope),
            TableId::ScalingDx | TableId::ScalingC => r.scaling.map(|f| f.exponent),
        };
        Cell::from_option(v)
    };
    Ok(PointResult { point: *point, forward: pick(WavepacketSide::Forward), backward: pick(WavepacketSide::Backward) })
}

fn thread_cap() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Input(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs every sweep point of `table`, at most `KOMPAKTON_THREADS` at a time.
///
/// Blown-up points are recorded as markers; `progress` is called once per
/// finished point.
pub fn run_campaign(
    table: TableId,
    base: &ExperimentConfig,
    progress: impl Fn(&PointResult) + Sync,
) -> Result<CampaignResult, CliError> {
    let points = sweep_points(table, base);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap()?)
        .build()
        .map_err(|e| CliError::Solver(format!("cannot start worker threads: {e}")))?;
    let results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let r = measure(table, base, p)?;
                progress(&r);
                Ok(r)
            })
            .collect::<Result<_, CliError>>()
    })?;

    let mut fits = Vec::new();
    if matches!(table, TableId::AmplitudesDx | TableId::AmplitudesDt) {
        let [qf, qb] = table.quantities();
        let mut schemes: Vec<SchemeId> = Vec::new();
        results.iter().for_each(|r| {
            if !schemes.contains(&r.point.scheme) {
                schemes.push(r.point.scheme);
            }
        });
        for scheme in schemes {
            let rows: Vec<&PointResult> = results.iter().filter(|r| r.point.scheme == scheme).collect();
            let steps: Vec<f64> = rows.iter().map(|r| r.point.swept_value(table)).collect();
            for (quantity, side) in [(qf, WavepacketSide::Forward), (qb, WavepacketSide::Backward)] {
                let values: Vec<Option<f64>> = rows
                    .iter()
                    .map(|r| if side == WavepacketSide::Forward { r.forward } else { r.backward }.value())
                    .collect();
                fits.push(RowFit { scheme, quantity, fit: convergence_exponent(&values, &steps).ok() });
            }
        }
    }
    Ok(CampaignResult { table, points: results, fits })
}

/// Runs the campaign and writes its CSV files into `dir`.
pub fn cmd_table(
    table: TableId,
    base: &ExperimentConfig,
    dir: &Path,
    progress: impl Fn(&PointResult) + Sync,
) -> Result<CampaignResult, CliError> {
    let result = run_campaign(table, base, progress)?;
    result.write(dir)?;
    Ok(result)
}
