//! `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use kompakton_core::{
    AnalysisConfig, CompactonSpec, Exponent, GridSpec, Partition, SchemeId, StepperConfig, ThresholdPolicy, TimeRule, TimeSpec,
};

/// Keys that must appear in every configuration.
pub const REQUIRED_KEYS: [&str; 7] = ["scheme", "p", "c", "L", "dx or M", "dt", "t_end"];

const KNOWN_KEYS: [&str; 28] = [
    "scheme",
    "rule",
    "p",
    "c",
    "c0",
    "x0",
    "L",
    "dx",
    "M",
    "dt",
    "t_end",
    "snapshot_interval",
    "newton_abs_tol",
    "newton_max_iters",
    "blowup_threshold",
    "discard_fraction",
    "guard_nodes",
    "noise_floor",
    "dominance_length",
    "threshold_fraction",
    "threshold_absolute",
    "partition",
    "probe",
    "output_dir",
    "schemes",
    "sweep",
    "velocity_grids",
    "campaign_t_end",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self { line: Some(line), key: Some(key.to_string()), message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "key '{key}': ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ParseError {}

/// Overrides for table campaigns. Empty fields fall back to the sweeps of
/// the corresponding table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CampaignSettings {
    /// Schemes included; empty means all four.
    pub schemes: Vec<SchemeId>,
    /// Values of the swept parameter (`dx`, `dt`, `c0/c` or `c`).
    pub sweep: Option<Vec<f64>>,
    /// `(dx, dt)` pairs for the front-velocity table.
    pub velocity_grids: Option<Vec<(f64, f64)>>,
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: SchemeId,
    pub rule: TimeRule,
    pub p: Exponent,
    pub c: f64,
    pub c0: f64,
    pub x0: f64,
    pub length: f64,
    pub nodes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_interval: f64,
    pub newton_abs_tol: f64,
    pub newton_max_iters: usize,
    pub blowup_threshold: Option<f64>,
    pub analysis: AnalysisConfig,
    pub output_dir: Option<PathBuf>,
    pub campaign: CampaignSettings,
}

impl ExperimentConfig {
    pub fn dx(&self) -> f64 {
        self.length / self.nodes as f64
    }

    pub fn spec(&self) -> CompactonSpec {
        CompactonSpec::new(self.p, self.c, self.x0, self.c0).expect("validated at parse time")
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.length, self.nodes).expect("validated at parse time")
    }

    pub fn time(&self) -> TimeSpec {
        TimeSpec::with_interval(self.dt, self.t_end, self.snapshot_interval).expect("validated at parse time")
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            rule: self.rule,
            newton_abs_tol: self.newton_abs_tol,
            newton_max_iters: self.newton_max_iters,
            blowup_threshold: self.blowup_threshold,
        }
    }

    /// Canonical text form; parses back to an equal configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("scheme", self.scheme.name().into());
        put("rule", self.rule.name().into());
        put("p", self.p.to_string());
        put("c", self.c.to_string());
        put("c0", self.c0.to_string());
        put("x0", self.x0.to_string());
        put("L", self.length.to_string());
        put("M", self.nodes.to_string());
        put("dt", self.dt.to_string());
        put("t_end", self.t_end.to_string());
        put("snapshot_interval", self.snapshot_interval.to_string());
        put("newton_abs_tol", self.newton_abs_tol.to_string());
        put("newton_max_iters", self.newton_max_iters.to_string());
        if let Some(b) = self.blowup_threshold {
            put("blowup_threshold", b.to_string());
        }
        let a = &self.analysis;
        put("discard_fraction", a.discard_fraction.to_string());
        put("guard_nodes", a.guard_nodes.to_string());
        put("noise_floor", a.noise_floor.to_string());
        put("dominance_length", a.dominance_length.to_string());
        match a.threshold {
            ThresholdPolicy::FinalFraction(f) => put("threshold_fraction", f.to_string()),
            ThresholdPolicy::Absolute(v) => put("threshold_absolute", v.to_string()),
        }
        put("partition", partition_name(a.partition).into());
        put("probe", a.probe.to_string());
        if let Some(dir) = &self.output_dir {
            put("output_dir", dir.display().to_string());
        }
        let camp = &self.campaign;
        if !camp.schemes.is_empty() {
            put("schemes", camp.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(", "));
        }
        if let Some(v) = &camp.sweep {
            put("sweep", v.iter().map(f64::to_string).collect::<Vec<_>>().join(", "));
        }
        if let Some(g) = &camp.velocity_grids {
            put("velocity_grids", g.iter().map(|(dx, dt)| format!("{dx}:{dt}")).collect::<Vec<_>>().join(", "));
        }
        if let Some(t) = camp.t_end {
            put("campaign_t_end", t.to_string());
        }
        s
    }
}

fn partition_name(p: Partition) -> &'static str {
    match p {
        Partition::PredictedSpeeds => "predicted_speeds",
        Partition::DomainEnds => "domain_ends",
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.line)
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ParseError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|m| ParseError::at(e.line, key, m)),
        }
    }

    fn check(&self, key: &str, ok: bool, message: impl Into<String>) -> Result<(), ParseError> {
        if ok {
            Ok(())
        } else {
            Err(ParseError { line: self.0.get(key).map(|e| e.line), key: Some(key.into()), message: message.into() })
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got '{s}'")),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("expected a non-negative integer, got '{s}'"))
}

fn list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(item).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("expected a non-empty comma-separated list".into());
    }
    Ok(items)
}

fn grid_pair(s: &str) -> Result<(f64, f64), String> {
    let (dx, dt) = s.split_once(':').ok_or_else(|| format!("expected dx:dt, got '{s}'"))?;
    Ok((positive(dx.trim())?, positive(dt.trim())?))
}

fn lex(text: &str) -> Result<Entries, ParseError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParseError { line: Some(line), key: None, message: format!("expected 'key = value', got '{content}'") });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(ParseError::at(line, key, "unknown key"));
        }
        if value.is_empty() {
            return Err(ParseError::at(line, key, "missing value"));
        }
        if let Some(prev) = map.get(key).map(|e: &Entry| e.line) {
            return Err(ParseError::at(line, key, format!("duplicate key (first set on line {prev})")));
        }
        map.insert(key.to_string(), Entry { line, value: value.to_string() });
    }
    Ok(Entries(map))
}

/// Parses and validates a configuration, applying defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ParseError> {
    let e = lex(text)?;

    let missing: Vec<&str> = REQUIRED_KEYS
        .iter()
        .copied()
        .filter(|&k| match k {
            "dx or M" => !e.0.contains_key("dx") && !e.0.contains_key("M"),
            _ => !e.0.contains_key(k),
        })
        .collect();
    if !missing.is_empty() {
        return Err(ParseError { line: None, key: None, message: format!("missing required keys: {}", missing.join(", ")) });
    }

    let scheme = e.get("scheme", |s| s.parse::<SchemeId>().map_err(|err| err.to_string()))?.expect("required");
    let rule = e.get("rule", |s| s.parse::<TimeRule>().map_err(|err| err.to_string()))?.unwrap_or(TimeRule::Midpoint);
    let p = e.get("p", |s| s.parse::<Exponent>().map_err(|err| err.to_string()))?.expect("required");
    let c = e.get("c", positive)?.expect("required");
    let c0 = e.get("c0", number)?.unwrap_or(c);
    let length = e.get("L", positive)?.expect("required");
    let dt = e.get("dt", positive)?.expect("required");
    let t_end = e.get("t_end", number)?.expect("required");
    e.check("t_end", t_end >= 0.0, format!("must be non-negative, got {t_end}"))?;

    let dx = e.get("dx", positive)?;
    let m = e.get("M", count)?;
    let nodes = match (dx, m) {
        (_, Some(m)) => {
            e.check("M", m >= GridSpec::MIN_NODES, format!("grid needs at least {} nodes", GridSpec::MIN_NODES))?;
            if let Some(dx) = dx {
                let implied = length / m as f64;
                e.check("dx", (implied - dx).abs() <= 1e-9 * dx, format!("dx = {dx} disagrees with L/M = {implied}"))?;
            }
            m
        }
        (Some(dx), None) => GridSpec::from_spacing(length, dx).map_err(|err| ParseError::at(e.line("dx"), "dx", err.to_string()))?.nodes(),
        (None, None) => unreachable!("checked above"),
    };

    let x0 = e.get("x0", number)?.unwrap_or(length / 5.0);
    let spec = CompactonSpec::new(p, c, x0, c0).map_err(|err| ParseError::at(e.line("p"), "p", err.to_string()))?;
    let (lo, hi) = spec.support_edges(0.0);
    e.check("x0", lo >= 0.0 && hi <= length, format!("compacton support [{lo}, {hi}] leaves the domain [0, {length}]"))?;

    let snapshot_interval = e.get("snapshot_interval", positive)?.unwrap_or(5.0);
    let newton_abs_tol = e.get("newton_abs_tol", positive)?.unwrap_or(1e-12);
    let newton_max_iters = e.get("newton_max_iters", count)?.unwrap_or(20);
    e.check("newton_max_iters", newton_max_iters >= 1, "must be at least 1")?;
    let blowup_threshold = e.get("blowup_threshold", positive)?;

    let mut analysis = AnalysisConfig::default();
    if let Some(v) = e.get("discard_fraction", number)? {
        e.check("discard_fraction", (0.0..1.0).contains(&v), format!("must lie in [0, 1), got {v}"))?;
        analysis.discard_fraction = v;
    }
    if let Some(v) = e.get("guard_nodes", count)? {
        analysis.guard_nodes = v;
    }
    if let Some(v) = e.get("noise_floor", number)? {
        e.check("noise_floor", (0.0..1.0).contains(&v), format!("must lie in [0, 1), got {v}"))?;
        analysis.noise_floor = v;
    }
    if let Some(v) = e.get("dominance_length", number)? {
        e.check("dominance_length", v >= 0.0, format!("must be non-negative, got {v}"))?;
        analysis.dominance_length = v;
    }
    let fraction = e.get("threshold_fraction", positive)?;
    let absolute = e.get("threshold_absolute", positive)?;
    match (fraction, absolute) {
        (Some(_), Some(_)) => {
            return Err(ParseError::at(e.line("threshold_absolute"), "threshold_absolute", "conflicts with threshold_fraction"));
        }
        (Some(f), None) => {
            e.check("threshold_fraction", f <= 1.0, format!("must lie in (0, 1], got {f}"))?;
            analysis.threshold = ThresholdPolicy::FinalFraction(f);
        }
        (None, Some(v)) => analysis.threshold = ThresholdPolicy::Absolute(v),
        (None, None) => {}
    }
    if let Some(v) = e.get("partition", |s| match s {
        "predicted_speeds" => Ok(Partition::PredictedSpeeds),
        "domain_ends" => Ok(Partition::DomainEnds),
        other => Err(format!("expected predicted_speeds or domain_ends, got '{other}'")),
    })? {
        analysis.partition = v;
    }
    if let Some(v) = e.get("probe", positive)? {
        e.check("probe", v <= 1.0, format!("must lie in (0, 1], got {v}"))?;
        analysis.probe = v;
    }

    let output_dir = e.get("output_dir", |s| Ok(PathBuf::from(s)))?;
    let campaign = CampaignSettings {
        schemes: e
            .get("schemes", |s| list(s, |x| x.parse::<SchemeId>().map_err(|err| err.to_string())))?
            .unwrap_or_default(),
        sweep: e.get("sweep", |s| list(s, positive))?,
        velocity_grids: e.get("velocity_grids", |s| list(s, grid_pair))?,
        t_end: e.get("campaign_t_end", positive)?,
    };

    Ok(ExperimentConfig {
        scheme,
        rule,
        p,
        c,
        c0,
        x0,
        length,
        nodes,
        dt,
        t_end,
        snapshot_interval,
        newton_abs_tol,
        newton_max_iters,
        blowup_threshold,
        analysis,
        output_dir,
        campaign,
    })
}
