//! Text formats: CSV cells, snapshot files and run series.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kompakton_core::{Exponent, FieldState, GridSpec, InvariantSeries, NewtonReport, SchemeId};

use crate::error::CliError;

pub const BLOWUP: &str = "blowup";
pub const NOT_DETECTED: &str = "nd";

/// A CSV cell: a finite number or one of the two markers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    BlowUp,
    NotDetected,
}

impl Cell {
    pub fn from_option(v: Option<f64>) -> Self {
        match v {
            Some(v) if v.is_finite() => Cell::Value(v),
            _ => Cell::NotDetected,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }

    pub fn render(self) -> String {
        match self {
            Cell::Value(v) => number(v),
            Cell::BlowUp => BLOWUP.into(),
            Cell::NotDetected => NOT_DETECTED.into(),
        }
    }
}

impl std::str::FromStr for Cell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            BLOWUP => Ok(Cell::BlowUp),
            NOT_DETECTED => Ok(Cell::NotDetected),
            other => match other.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Cell::Value(v)),
                _ => Err(format!("invalid cell '{other}'")),
            },
        }
    }
}

/// Shortest round-trip representation; non-finite values become "nd".
pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        NOT_DETECTED.into()
    }
}

pub fn optional(v: Option<f64>) -> String {
    Cell::from_option(v).render()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Metadata carried in a snapshot header.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub t: f64,
    pub scheme: SchemeId,
    pub p: Exponent,
    pub dx: f64,
}

pub fn render_snapshot(field: &FieldState, scheme: SchemeId, p: Exponent, grid: &GridSpec) -> String {
    let mut s = String::with_capacity(48 * field.len() + 64);
    let _ = writeln!(s, "# t={} scheme={} p={} dx={}", field.t, scheme.name(), p, grid.dx());
    for (m, v) in field.values.iter().enumerate() {
        let _ = writeln!(s, "{:.16e},{:.16e}", grid.x(m), v);
    }
    s
}

/// Parses a snapshot file into its header and `(x, value)` columns.
pub fn parse_snapshot(text: &str) -> Result<(SnapshotHeader, Vec<f64>, Vec<f64>), String> {
    let mut lines = text.lines();
    let head = lines.next().ok_or("empty snapshot file")?;
    let head = head.strip_prefix("# ").ok_or("snapshot header must start with '# '")?;
    let (mut t, mut scheme, mut p, mut dx) = (None, None, None, None);
    for field in head.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(|| format!("malformed header field '{field}'"))?;
        match k {
            "t" => t = v.parse::<f64>().ok(),
            "scheme" => scheme = v.parse::<SchemeId>().ok(),
            "p" => p = v.parse::<Exponent>().ok(),
            "dx" => dx = v.parse::<f64>().ok(),
            _ => return Err(format!("unknown header field '{k}'")),
        }
    }
    let header = SnapshotHeader {
        t: t.ok_or("header lacks a valid t")?,
        scheme: scheme.ok_or("header lacks a valid scheme")?,
        p: p.ok_or("header lacks a valid p")?,
        dx: dx.ok_or("header lacks a valid dx")?,
    };
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let bad = || format!("line {}: expected 'x,value', got '{line}'", i + 2);
        let (x, v) = line.split_once(',').ok_or_else(bad)?;
        xs.push(x.trim().parse::<f64>().map_err(|_| bad())?);
        vs.push(v.trim().parse::<f64>().map_err(|_| bad())?);
    }
    Ok((header, xs, vs))
}

pub fn snapshot_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("snapshot_{index:05}.csv"))
}

pub fn render_invariants(series: &InvariantSeries) -> String {
    let mut s = String::from("t,I1,I2,I3,I4,drift_I1,drift_I2,drift_I3,drift_I4\n");
    let drifts: Vec<Vec<f64>> = (1..=4).map(|j| series.relative_drift(j)).collect();
    for (k, (t, v)) in series.times.iter().zip(&series.values).enumerate() {
        let cells: Vec<String> =
            std::iter::once(*t).chain(v.iter().copied()).chain(drifts.iter().map(|d| d[k])).map(number).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn render_newton(reports: &[NewtonReport], dt: f64) -> String {
    let mut s = String::from("step,t,iterations,residual,update,converged\n");
    for (i, r) in reports.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            i + 1,
            number((i + 1) as f64 * dt),
            r.iterations,
            number(r.final_residual),
            number(r.final_update),
            u8::from(r.converged)
        );
    }
    s
}
