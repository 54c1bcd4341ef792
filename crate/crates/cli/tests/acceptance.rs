//! Acceptance suite. Runs every criterion at full scale and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.
//!
//! `cargo test -p kompakton-cli --test acceptance -- 3 7` runs a subset.

use std::time::Instant;

use kompakton_cli::{cmd_simulate, cmd_table, parse_config, Cell, TableId};
use kompakton_core::stepper::{jacobian, residual};
use kompakton_core::{
    empirical_order, front_velocity, group_velocity, run, scaling_exponent, AnalysisConfig, CompactonSpec, Exponent, FieldState,
    GridSpec, RadiationAnalyzer, SchemeId, StepperConfig, TimeRule, TimeSpec, WavepacketSide,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SCHEMES: [SchemeId; 4] = [SchemeId::Ismail, SchemeId::DeFrutos, SchemeId::Pade6, SchemeId::Pade8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn k22(c: f64, c0: f64, x0: f64) -> CompactonSpec {
    CompactonSpec::new(Exponent::integer(2), c, x0, c0).unwrap()
}

struct Measured {
    forward: Option<f64>,
    backward: Option<f64>,
    report: kompakton_core::RadiationReport,
}

fn simulate(scheme: SchemeId, spec: &CompactonSpec, length: f64, dx: f64, dt: f64, t_end: f64) -> Measured {
    let grid = GridSpec::from_spacing(length, dx).unwrap();
    let time = TimeSpec::with_interval(dt, t_end, 5.0).unwrap();
    let traj = run(scheme, &StepperConfig::default(), spec, &grid, &time).unwrap();
    assert!(traj.outcome.is_completed(), "{scheme} dx={dx} dt={dt}: {:?}", traj.outcome);
    let report = RadiationAnalyzer::new(scheme, spec, &grid, &AnalysisConfig::default()).unwrap().analyze(&traj).unwrap();
    Measured {
        forward: report.amplitude_at(WavepacketSide::Forward, t_end),
        backward: report.amplitude_at(WavepacketSide::Backward, t_end),
        report,
    }
}

fn operator_orders() -> Outcome {
    let expected = [(SchemeId::Ismail, 2.0, 2.0), (SchemeId::DeFrutos, 6.0, 4.0), (SchemeId::Pade6, 4.0, 6.0), (SchemeId::Pade8, 8.0, 2.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (scheme, first, third) in expected {
        let o1 = empirical_order(scheme, 1).unwrap().finest().unwrap_or(f64::NAN);
        let o3 = empirical_order(scheme, 3).unwrap().finest().unwrap_or(f64::NAN);
        pass &= (o1 - first).abs() <= 0.3 && (o3 - third).abs() <= 0.3;
        parts.push(format!("{scheme} ({o1:.2}, {o3:.2})"));
    }
    outcome(pass, parts.join(", "))
}

fn jacobian_check() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let m = 64;
    let dx = 0.1;
    let dt = 0.05;
    let mut worst = 0.0_f64;
    for scheme in SCHEMES {
        for rule in [TimeRule::Midpoint, TimeRule::Trapezoidal] {
            for p in [Exponent::integer(2), Exponent::integer(3), Exponent::new(5, 3).unwrap()] {
                let spec = CompactonSpec::new(p, 1.0, 3.2, 1.0).unwrap();
                let config = StepperConfig { rule, ..StepperConfig::default() };
                let u_n = FieldState::new(0.0, (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect());
                let u = FieldState::new(dt, (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect());
                let jac = jacobian(scheme, &config, &u_n, &u, dt, &spec, dx).unwrap();
                let scale = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).fold(0.0_f64, |a, (i, j)| a.max(jac.get(i, j).abs()));
                for j in 0..m {
                    let h = 1e-6 * u.values[j].abs().max(1.0);
                    let mut plus = u.clone();
                    let mut minus = u.clone();
                    plus.values[j] += h;
                    minus.values[j] -= h;
                    let rp = residual(scheme, &config, &u_n, &plus, dt, &spec, dx).unwrap();
                    let rm = residual(scheme, &config, &u_n, &minus, dt, &spec, dx).unwrap();
                    for i in 0..m {
                        let fd = (rp[i] - rm[i]) / (2.0 * h);
                        worst = worst.max((fd - jac.get(i, j)).abs() / scale);
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-5, format!("max relative deviation {worst:.2e} over 24 cases"))
}

fn mass_conservation() -> Outcome {
    let cfg = parse_config("scheme = de_frutos\np = 2\nc = 1\nc0 = 1\nL = 600\ndx = 0.05\ndt = 0.1\nt_end = 100\nx0 = 500\n").unwrap();
    let traj = run(cfg.scheme, &cfg.stepper(), &cfg.spec(), &cfg.grid(), &cfg.time()).unwrap();
    let d1 = traj.invariants.max_relative_drift(1);
    let d2 = traj.invariants.max_relative_drift(2);
    let steps = traj.steps_taken();
    outcome(
        traj.outcome.is_completed() && steps == 1000 && d1 <= 1e-9 && d2 <= 1e-3,
        format!("M = {}, {steps} steps, I1 drift {d1:.2e}, I2 drift {d2:.2e}", cfg.nodes),
    )
}

fn table1_spot_check() -> Outcome {
    let spec = k22(1.0, 1.0, 500.0);
    let steps = [0.2, 0.1, 0.05];
    let runs: Vec<Measured> = steps.iter().map(|&dx| simulate(SchemeId::DeFrutos, &spec, 2500.0, dx, 0.05, 150.0)).collect();
    let uf = runs[2].forward.unwrap_or(f64::NAN);
    let ub = runs[2].backward.unwrap_or(f64::NAN);
    let forward: Vec<Option<f64>> = runs.iter().map(|r| r.forward).collect();
    let q = kompakton_core::convergence_exponent(&forward, &steps).map_or(f64::NAN, |f| f.exponent);
    outcome(
        within(uf, 1.61e-7, 0.25) && within(ub, 2.60e-7, 0.25) && (q - 2.4).abs() <= 0.5,
        format!("u_f {uf:.3e}, u_b {ub:.3e}, q {q:.2}"),
    )
}

fn table3_velocities() -> Outcome {
    let spec = k22(1.0, 1.0, 500.0);
    let de_frutos = simulate(SchemeId::DeFrutos, &spec, 2500.0, 0.1, 0.05, 100.0);
    let cf = de_frutos.report.forward.front_velocity.map_or(f64::NAN, |f| f.slope);
    let cb = de_frutos.report.backward.front_velocity.map_or(f64::NAN, |f| f.slope);
    let pade6 = simulate(SchemeId::Pade6, &k22(1.0, 1.0, 850.0), 2500.0, 0.1, 0.05, 100.0);
    let p6 = pade6.report.forward.front_velocity.map_or(f64::NAN, |f| f.slope);
    outcome(
        within(cf, 5.07, 0.05) && within(cb, -1.01, 0.05) && within(p6, 10.1, 0.05),
        format!("de Frutos c_f {cf:.3}, c_b {cb:.3}; Pade-6 c_f {p6:.3}"),
    )
}

fn dispersion_predictions() -> Outcome {
    let dx = 0.05;
    let kmax = std::f64::consts::PI / dx;
    let mut pass = true;
    let mut parts = Vec::new();
    for (scheme, factor) in [(SchemeId::Ismail, 1.0), (SchemeId::DeFrutos, 5.0), (SchemeId::Pade6, 10.0)] {
        for c0 in [0.5, 1.0, 2.0] {
            let v = group_velocity(scheme, kmax, dx, c0).unwrap();
            pass &= within(v, factor * c0, 1e-10);
        }
        parts.push(format!("{scheme} {}", group_velocity(scheme, kmax, dx, 1.0).unwrap()));
    }
    let p8 = group_velocity(SchemeId::Pade8, kmax, dx, 1.0).unwrap();
    pass &= format!("{p8:.2}") == "6.11";
    parts.push(format!("pade8 {p8:.4}"));
    let mut long_wave = 0.0_f64;
    for scheme in SCHEMES {
        let v = group_velocity(scheme, 1e-6 / dx, dx, 1.0).unwrap();
        long_wave = long_wave.max((v + 1.0).abs());
    }
    pass &= long_wave <= 1e-8;
    parts.push(format!("|C(0) + c0| <= {long_wave:.1e}"));
    outcome(pass, parts.join(", "))
}

fn scaling_exponents() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let cases = [
        (SchemeId::DeFrutos, 2500.0, 300.0, 500.0, (0.40, 0.60), (0.40, 0.62)),
        (SchemeId::Pade6, 2500.0, 300.0, 850.0, (0.40, 0.62), (0.40, 0.62)),
        (SchemeId::DeFrutos, 1000.0, 200.0, 250.0, (0.35, 0.70), (0.35, 0.70)),
        (SchemeId::Pade6, 1000.0, 200.0, 250.0, (0.35, 0.70), (0.35, 0.70)),
    ];
    for (scheme, length, t_end, x0, f_range, b_range) in cases {
        let m = simulate(scheme, &k22(1.0, 1.0, x0), length, 0.05, 0.05, t_end);
        let rf = m.report.forward.scaling.map_or(f64::NAN, |f| f.exponent);
        let rb = m.report.backward.scaling.map_or(f64::NAN, |f| f.exponent);
        pass &= (f_range.0..=f_range.1).contains(&rf) && (b_range.0..=b_range.1).contains(&rb);
        parts.push(format!("{scheme} L={length} rho_f {rf:.3} rho_b {rb:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn blowup_reproduction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let text = "scheme = ismail\np = 2\nc = 1\nc0 = 1\nL = 2500\ndx = 0.0125\ndt = 0.05\nt_end = 150\nx0 = 400\nsnapshot_interval = 50\n\
                schemes = ismail\nsweep = 0.0125\n";
    let cfg = parse_config(text).unwrap();
    let summary = cmd_simulate(&cfg, &dir.path().join("run")).unwrap();
    let code = summary.exit_code();
    let table = cmd_table(TableId::AmplitudesDx, &cfg, dir.path(), |_| {}).unwrap();
    let cell = table.cell(SchemeId::Ismail, WavepacketSide::Forward, |p| p.dx == 0.0125);
    let csv = std::fs::read_to_string(dir.path().join("amplitudes_dx.csv")).unwrap();
    let marked = csv.lines().nth(1).is_some_and(|l| l.split(',').nth(2) == Some("blowup"));
    outcome(
        code == 3 && summary.outcome.is_blown_up() && cell == Some(Cell::BlowUp) && marked,
        format!("simulate exit status {code} ({:?}), campaign cell {}", summary.outcome, cell.map_or("missing".into(), |c| c.render())),
    )
}

fn regression_oracles() -> Outcome {
    let times: Vec<f64> = (0..=60).map(|k| 5.0 * k as f64).collect();
    let means: Vec<f64> = times.iter().map(|&t| 3.0 * (t + 1.0).powf(-0.5)).collect();
    let times_shift: Vec<f64> = times.iter().map(|t| t + 1.0).collect();
    let rho = scaling_exponent(&means, &times_shift, 0.25).unwrap().exponent;
    let steps = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let amps: Vec<Option<f64>> = steps.iter().map(|h: &f64| Some(7.0 * h.powf(2.4))).collect();
    let q = kompakton_core::convergence_exponent(&amps, &steps).unwrap().exponent;
    let xs: Vec<f64> = times.iter().map(|t| 12.0 + 5.07 * t).collect();
    let fit = front_velocity(&xs, &times).unwrap();
    let pass = (rho - 0.5).abs() <= 1e-12 && (q - 2.4).abs() <= 1e-12 && 1.0 - fit.r_squared <= 1e-12;
    outcome(pass, format!("rho error {:.1e}, q error {:.1e}, R^2 = {}", (rho - 0.5).abs(), (q - 2.4).abs(), fit.r_squared))
}

fn determinism() -> Outcome {
    let text = "scheme = de_frutos\np = 2\nc = 1\nL = 1000\ndx = 0.1\ndt = 0.05\nt_end = 40\nx0 = 200\n\
                schemes = de_frutos, pade8\nvelocity_grids = 0.1:0.05, 0.5:0.05\ncampaign_t_end = 40\n";
    let cfg = parse_config(text).unwrap();
    let read = |dir: &std::path::Path| {
        ["front_velocities.csv", "front_velocities_long.csv"].map(|f| std::fs::read(dir.join(f)).unwrap())
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_table(TableId::FrontVelocities, &cfg, a.path(), |_| {}).unwrap();
    cmd_table(TableId::FrontVelocities, &cfg, b.path(), |_| {}).unwrap();
    let (fa, fb) = (read(a.path()), read(b.path()));
    outcome(fa == fb, format!("{} + {} bytes compared", fa[0].len(), fa[1].len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("operator orders", operator_orders),
        ("jacobian vs finite differences", jacobian_check),
        ("mass conservation", mass_conservation),
        ("amplitude table spot-check", table1_spot_check),
        ("front velocities", table3_velocities),
        ("dispersion predictions", dispersion_predictions),
        ("scaling exponents", scaling_exponents),
        ("blow-up reproduction", blowup_reproduction),
        ("regression oracles", regression_oracles),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict}  {name}: {} [{:.1}s]", result.detail, start.elapsed().as_secs_f64());
        if !result.pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
