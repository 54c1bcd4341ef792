//! Periodic pentadiagonal matrices and their direct solution.
//!
//! A periodic matrix with bandwidth 2 is split into its open band `T` and the
//! wrap-around corner entries, which live in rows and columns
//! `{0, 1, M-2, M-1}`. The band is factored with partial pivoting and the
//! corners are folded back in with a rank-4 Woodbury correction.

use crate::error::{Error, Result};

/// Half bandwidth of every operator in this crate.
pub const HALF_BAND: usize = 2;
const WIDTH: usize = 2 * HALF_BAND + 1;

/// Square periodic matrix whose row `m` is non-zero only in columns
/// `m-2 ..= m+2` taken modulo `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBandedMatrix {
    n: usize,
    /// `rows[m][j + 2]` holds the entry in column `(m + j) mod M`.
    rows: Vec<[f64; WIDTH]>,
}

impl PeriodicBandedMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 2 * WIDTH - 2 {
            return Err(Error::InvalidParameter(format!(
                "periodic banded matrix needs at least {} rows, got {n}",
                2 * WIDTH - 2
            )));
        }
        Ok(Self { n, rows: vec![[0.0; WIDTH]; n] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut mat = Self::zeros(n)?;
        for row in &mut mat.rows {
            row[HALF_BAND] = 1.0;
        }
        Ok(mat)
    }

    /// Circulant matrix built from a single five-point stencil.
    pub fn circulant(n: usize, stencil: [f64; WIDTH]) -> Result<Self> {
        let mut mat = Self::zeros(n)?;
        mat.rows.fill(stencil);
        Ok(mat)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry at row `m`, band offset `offset ∈ -2..=2`.
    pub fn band(&self, m: usize, offset: isize) -> f64 {
        self.rows[m][(offset + HALF_BAND as isize) as usize]
    }

    pub fn band_mut(&mut self, m: usize, offset: isize) -> &mut f64 {
        &mut self.rows[m][(offset + HALF_BAND as isize) as usize]
    }

    pub fn rows(&self) -> &[[f64; WIDTH]] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [[f64; WIDTH]] {
        &mut self.rows
    }

    /// Dense entry `(i, j)`; zero outside the periodic band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let n = self.n as isize;
        let d = (j as isize - i as isize).rem_euclid(n);
        let offset = if d <= HALF_BAND as isize {
            d
        } else if d >= n - HALF_BAND as isize {
            d - n
        } else {
            return 0.0;
        };
        self.band(i, offset)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        let n = self.n;
        (0..n)
            .map(|m| {
                let row = &self.rows[m];
                (0..WIDTH).fold(0.0, |acc, k| acc + row[k] * x[(m + n + k - HALF_BAND) % n])
            })
            .collect()
    }

    pub fn factor(&self) -> Result<PeriodicLu> {
        PeriodicLu::new(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.factor()?.solve(rhs)
    }
}

/// Solves `mat · x = rhs` for a periodic banded matrix.
pub fn solve_periodic_banded(mat: &PeriodicBandedMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    mat.solve(rhs)
}

/// LU factors of an open (non-periodic) band matrix with partial pivoting.
///
/// Row `i` is stored for columns `i-kl ..= i+kl+ku`; the extra `kl`
/// super-diagonals absorb pivoting fill-in.
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    ab: Vec<f64>,
    inv_diag: Vec<f64>,
    pivots: Vec<usize>,
}

/// Magnitudes below this are flushed to zero during substitution. Decaying
/// recursions would otherwise settle into subnormals, which are slow.
pub const FLUSH_TO_ZERO: f64 = 1e-280;

#[inline(always)]
fn flush(v: f64) -> f64 {
    if v.abs() < FLUSH_TO_ZERO {
        0.0
    } else {
        v
    }
}

const KL: usize = HALF_BAND;
const KU: usize = HALF_BAND;
const LDAB: usize = 2 * KL + KU + 1;

impl BandLu {
    #[inline(always)]
    fn idx(i: usize, j: usize) -> usize {
        i * LDAB + (j + KL - i)
    }

    fn factor(mat: &PeriodicBandedMatrix) -> Result<Self> {
        let n = mat.n;
        let mut ab = vec![0.0; n * LDAB];
        let mut scale = 0.0_f64;
        for (i, row) in mat.rows.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                let j = i as isize + k as isize - HALF_BAND as isize;
                if (0..n as isize).contains(&j) {
                    ab[Self::idx(i, j as usize)] = v;
                    scale = scale.max(v.abs());
                }
            }
        }
        if scale == 0.0 {
            return Err(Error::SingularMatrix("zero matrix".into()));
        }
        let tiny = scale * f64::EPSILON * n as f64;
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + KL).min(n - 1);
            let mut p = k;
            let mut best = ab[Self::idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = ab[Self::idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularMatrix(format!("zero pivot in column {k}")));
            }
            pivots[k] = p;
            let last_col = (k + KL + KU).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    ab.swap(Self::idx(k, j), Self::idx(p, j));
                }
            }
            let inv_pivot = 1.0 / ab[Self::idx(k, k)];
            let (head, tail) = ab.split_at_mut((k + 1) * LDAB);
            let prow = &head[k * LDAB + KL + 1..(k + 1) * LDAB];
            for i in k + 1..=last_row {
                // row i, column k sits at offset k + KL - i; columns k+1.. follow
                let off = (i - k - 1) * LDAB + k + KL - i;
                let l = tail[off] * inv_pivot;
                tail[off] = l;
                if l != 0.0 {
                    let width = last_col - k;
                    for (t, &pv) in tail[off + 1..off + 1 + width].iter_mut().zip(&prow[..width]) {
                        *t -= l * pv;
                    }
                }
            }
        }
        let inv_diag = (0..n).map(|k| 1.0 / ab[Self::idx(k, k)]).collect();
        Ok(Self { n, ab, inv_diag, pivots })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        self.solve_from(x, 0);
    }

    /// Solve for a right-hand side that vanishes before index `first`.
    fn solve_from(&self, x: &mut [f64], first: usize) {
        let n = self.n;
        // row exchanges reach at most KL rows back
        for k in first.saturating_sub(KL)..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = flush(x[k]);
            x[k] = xk;
            if xk == 0.0 {
                continue;
            }
            if k + KL < n {
                let l1 = self.ab[Self::idx(k + 1, k)];
                let l2 = self.ab[Self::idx(k + 2, k)];
                x[k + 1] -= l1 * xk;
                x[k + 2] -= l2 * xk;
            } else {
                for i in k + 1..n {
                    x[i] -= self.ab[Self::idx(i, k)] * xk;
                }
            }
        }
        let top = x.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1);
        for k in (0..top).rev() {
            let row = &self.ab[k * LDAB..(k + 1) * LDAB];
            let mut s = x[k];
            if k + KL + KU < n {
                let r: &[f64; KL + KU + 1] = row[KL..].try_into().unwrap();
                let xs: &[f64; KL + KU] = x[k + 1..k + 1 + KL + KU].try_into().unwrap();
                s -= r[1] * xs[0] + r[2] * xs[1] + r[3] * xs[2] + r[4] * xs[3];
            } else {
                for j in k + 1..n {
                    s -= self.ab[Self::idx(k, j)] * x[j];
                }
            }
            x[k] = flush(s * self.inv_diag[k]);
        }
    }
}

/// Nonzero window of a correction vector.
#[derive(Debug, Clone)]
struct Window {
    start: usize,
    values: Vec<f64>,
}

impl Window {
    fn from_dense(v: Vec<f64>) -> Self {
        let Some(first) = v.iter().position(|&x| x != 0.0) else {
            return Self { start: 0, values: Vec::new() };
        };
        let last = v.iter().rposition(|&x| x != 0.0).unwrap_or(first);
        Self { start: first, values: v[first..=last].to_vec() }
    }

    fn get(&self, i: usize) -> f64 {
        i.checked_sub(self.start).and_then(|o| self.values.get(o)).copied().unwrap_or(0.0)
    }
}

/// Factorization of a periodic banded matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct PeriodicLu {
    band: BandLu,
    /// Sparse wrap-around rows: `(column, value)` pairs for each corner row.
    wrap: [Vec<(usize, f64)>; 4],
    /// `T⁻¹ e_r` for each corner row `r`.
    z: [Window; 4],
    /// LU of the 4×4 capacitance matrix `I + W T⁻¹ U` with row pivots.
    cap: [[f64; 4]; 4],
    cap_piv: [usize; 4],
}

impl PeriodicLu {
    fn new(mat: &PeriodicBandedMatrix) -> Result<Self> {
        let n = mat.n;
        let band = BandLu::factor(mat)?;
        let corners = [0, 1, n - 2, n - 1];
        let wrap: [Vec<(usize, f64)>; 4] = corners.map(|r| {
            (0..WIDTH)
                .filter_map(|k| {
                    let j = r as isize + k as isize - HALF_BAND as isize;
                    let v = mat.rows[r][k];
                    (!(0..n as isize).contains(&j) && v != 0.0).then(|| (j.rem_euclid(n as isize) as usize, v))
                })
                .collect()
        });
        let z = corners.map(|r| {
            let mut e = vec![0.0; n];
            e[r] = 1.0;
            band.solve_from(&mut e, r);
            Window::from_dense(e)
        });
        let mut cap = [[0.0; 4]; 4];
        for (a, row) in wrap.iter().enumerate() {
            for (b, zb) in z.iter().enumerate() {
                cap[a][b] = row.iter().map(|&(j, v)| v * zb.get(j)).sum::<f64>() + if a == b { 1.0 } else { 0.0 };
            }
        }
        let cap_piv = lu4(&mut cap)?;
        Ok(Self { band, wrap, z, cap, cap_piv })
    }

    pub fn dim(&self) -> usize {
        self.band.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.band.n {
            return Err(Error::InvalidParameter(format!(
                "right-hand side has length {}, matrix has dimension {}",
                x.len(),
                self.band.n
            )));
        }
        self.band.solve_in_place(x);
        let mut w = [0.0; 4];
        for (a, row) in self.wrap.iter().enumerate() {
            w[a] = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
        lu4_solve(&self.cap, &self.cap_piv, &mut w);
        for (zb, &wb) in self.z.iter().zip(&w) {
            if wb != 0.0 {
                for (xi, zi) in x[zb.start..].iter_mut().zip(&zb.values) {
                    *xi -= zi * wb;
                }
            }
        }
        Ok(())
    }
}

fn lu4(a: &mut [[f64; 4]; 4]) -> Result<[usize; 4]> {
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut piv = [0; 4];
    for k in 0..4 {
        let p = (k..4).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap_or(k);
        if !(a[p][k].abs() > 1e-11 * scale) {
            return Err(Error::SingularMatrix("periodic wrap-around correction is singular".into()));
        }
        piv[k] = p;
        a.swap(k, p);
        for i in k + 1..4 {
            let l = a[i][k] / a[k][k];
            a[i][k] = l;
            for j in k + 1..4 {
                a[i][j] -= l * a[k][j];
            }
        }
    }
    Ok(piv)
}

fn lu4_solve(a: &[[f64; 4]; 4], piv: &[usize; 4], b: &mut [f64; 4]) {
    // full rows (multipliers included) were exchanged during factorization
    for k in 0..4 {
        b.swap(k, piv[k]);
    }
    for k in 0..4 {
        for i in k + 1..4 {
            b[i] -= a[i][k] * b[k];
        }
    }
    for k in (0..4).rev() {
        let mut s = b[k];
        for j in k + 1..4 {
            s -= a[k][j] * b[j];
        }
        b[k] = s / a[k][k];
    }
}
