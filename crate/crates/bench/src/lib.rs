//! Fixtures shared by the benchmarks in `benches/`.

use kompakton_core::{sample_initial, CompactonSpec, Exponent, FieldState, GridSpec};

/// A K(2,2) compacton with `c = c0 = 1` centred in a domain of `nodes`
/// points at spacing `dx`.
pub fn compacton(nodes: usize, dx: f64) -> (CompactonSpec, GridSpec, FieldState) {
    let grid = GridSpec::new(nodes as f64 * dx, nodes).expect("valid grid");
    let spec = CompactonSpec::new(Exponent::integer(2), 1.0, grid.length() / 2.0, 1.0).expect("valid compacton");
    let field = sample_initial(&spec, &grid).expect("support inside the domain");
    (spec, grid, field)
}

/// The compacton plus a small high-frequency carrier on both sides, so the
/// radiation scans have something to find.
pub fn radiating_field(nodes: usize, dx: f64) -> (CompactonSpec, GridSpec, FieldState) {
    let (spec, grid, mut field) = compacton(nodes, dx);
    let centre = grid.length() / 2.0;
    for (m, v) in field.values.iter_mut().enumerate() {
        let d = (grid.x(m) - centre).abs();
        if d > 10.0 {
            *v += 1e-6 * (-(d - 10.0) / 200.0).exp() * if m % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    (spec, grid, field)
}
