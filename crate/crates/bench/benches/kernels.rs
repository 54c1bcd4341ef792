use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kompakton_bench::{compacton, radiating_field};
use kompakton_core::stepper::{jacobian, residual};
use kompakton_core::{
    dispersion_curve, step, PeriodicBandedMatrix, RadiationAnalyzer, SchemeId, StepperConfig, TimeRule, WavepacketSide,
};

fn banded_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("periodic_banded");
    for n in [1_000usize, 50_000] {
        let mut mat = PeriodicBandedMatrix::circulant(n, [0.1, -0.7, 3.0, 0.6, -0.2]).unwrap();
        *mat.band_mut(0, 2) = 0.3;
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        group.bench_with_input(BenchmarkId::new("factor", n), &n, |b, _| b.iter(|| mat.factor().unwrap()));
        let lu = mat.factor().unwrap();
        group.bench_with_input(BenchmarkId::new("solve", n), &n, |b, _| b.iter(|| lu.solve(&rhs).unwrap()));
    }
    group.finish();
}

fn operators(c: &mut Criterion) {
    let (spec, _grid, field) = compacton(50_000, 0.05);
    let config = StepperConfig::default();
    let mut group = c.benchmark_group("operators");
    for scheme in [SchemeId::Ismail, SchemeId::Pade8] {
        group.bench_function(BenchmarkId::new("residual", scheme), |b| {
            b.iter(|| residual(scheme, &config, &field, &field, 0.05, &spec, 0.05).unwrap())
        });
        group.bench_function(BenchmarkId::new("jacobian", scheme), |b| {
            b.iter(|| jacobian(scheme, &config, &field, &field, 0.05, &spec, 0.05).unwrap())
        });
    }
    group.finish();
}

fn time_step(c: &mut Criterion) {
    let (spec, _grid, field) = compacton(50_000, 0.05);
    let mut group = c.benchmark_group("time_step");
    group.sample_size(10);
    for rule in [TimeRule::Midpoint, TimeRule::Trapezoidal] {
        let config = StepperConfig { rule, ..StepperConfig::default() };
        group.bench_function(BenchmarkId::new("de_frutos", rule), |b| {
            b.iter(|| step(SchemeId::DeFrutos, &config, &field, 0.05, &spec, 0.05).unwrap())
        });
    }
    group.finish();
}

fn analysis(c: &mut Criterion) {
    let (spec, grid, field) = radiating_field(50_000, 0.05);
    let analyzer = RadiationAnalyzer::new(SchemeId::DeFrutos, &spec, &grid, &Default::default()).unwrap();
    c.bench_function("detect_amplitude", |b| {
        b.iter(|| {
            WavepacketSide::BOTH.map(|side| analyzer.detect_amplitude(&field, side).ok())
        })
    });
    c.bench_function("dispersion_curve", |b| b.iter(|| dispersion_curve(SchemeId::Pade8, 0.05, 1.0, 1001).unwrap()));
}

criterion_group!(benches, banded_solve, operators, time_step, analysis);
criterion_main!(benches);
