//! Small dense and sparse kernels: real tridiagonal blocks with shifted complex
//! LU, a general banded LU with partial pivoting, and a CSR matrix.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real tridiagonal matrix. `lower[i]` multiplies `x[i-1]` in row `i`
/// (`lower[0] == 0`), `upper[i]` multiplies `x[i+1]` (`upper[n-1] == 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `alpha * a + beta * b`.
    pub fn combine(alpha: f64, a: &Tridiag, beta: f64, b: &Tridiag) -> Tridiag {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| alpha * p + beta * q).collect();
        Tridiag { lower: mix(&a.lower, &b.lower), diag: mix(&a.diag, &b.diag), upper: mix(&a.upper, &b.upper) }
    }

    pub fn is_zero(&self) -> bool {
        self.lower.iter().chain(&self.diag).chain(&self.upper).all(|v| *v == 0.0)
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.len()).map(|i| self.lower[i].abs() + self.diag[i].abs() + self.upper[i].abs()).fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            out[i] = s;
        }
    }

    pub fn apply_complex(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = x[i] * self.diag[i];
            if i > 0 {
                s += x[i - 1] * self.lower[i];
            }
            if i + 1 < n {
                s += x[i + 1] * self.upper[i];
            }
            out[i] = s;
        }
    }
}

/// LU factors of `T - shift * I` (Thomas algorithm, no pivoting).
#[derive(Debug, Clone)]
pub struct ShiftedTridiagLu {
    upper: Vec<f64>,
    /// Multipliers `l_i` and inverted pivots `1/d_i`.
    mult: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
    min_pivot: f64,
    norm: f64,
}

impl ShiftedTridiagLu {
    pub fn factor(t: &Tridiag, shift: Complex64) -> Self {
        let n = t.len();
        let mut mult = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let mut min_pivot = f64::INFINITY;
        let mut norm = 0.0_f64;
        let mut prev_inv = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let d0 = Complex64::new(t.diag[i], 0.0) - shift;
            norm = norm.max(t.lower[i].abs() + d0.norm() + t.upper[i].abs());
            let d = if i == 0 {
                d0
            } else {
                let l = prev_inv * t.lower[i];
                mult[i] = l;
                d0 - l * t.upper[i - 1]
            };
            let dn = d.norm_sqr();
            min_pivot = min_pivot.min(dn);
            prev_inv = if dn > 0.0 { d.conj() / dn } else { Complex64::new(f64::INFINITY, 0.0) };
            inv_pivot[i] = prev_inv;
        }
        Self { upper: t.upper.clone(), mult, inv_pivot, min_pivot: min_pivot.sqrt(), norm }
    }

    /// Cheap condition proxy `||M||_inf / min |pivot|`.
    pub fn condition_proxy(&self) -> f64 {
        if self.min_pivot > 0.0 {
            self.norm / self.min_pivot
        } else {
            f64::INFINITY
        }
    }

    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        let n = x.len();
        for i in 1..n {
            let prev = x[i - 1];
            x[i] -= self.mult[i] * prev;
        }
        x[n - 1] *= self.inv_pivot[n - 1];
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] = (x[i] - next * self.upper[i]) * self.inv_pivot[i];
        }
    }

    /// Condition estimate `||M||_inf * ||M^{-1}||_inf` with `||M^{-1}||` bounded
    /// below by solves against a few sign probes.
    pub fn refined_condition(&self) -> f64 {
        let n = self.inv_pivot.len();
        let mut best = 0.0_f64;
        for probe in 0..3 {
            let mut x: Vec<Complex64> = (0..n)
                .map(|i| {
                    let s = match probe {
                        0 => 1.0,
                        1 => if i % 2 == 0 { 1.0 } else { -1.0 },
                        _ => if (i / 2) % 2 == 0 { 1.0 } else { -1.0 },
                    };
                    Complex64::new(s, 0.0)
                })
                .collect();
            self.solve_in_place(&mut x);
            best = best.max(x.iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        self.norm * best
    }
}

/// Threshold above which the pivot proxy is refined by probe solves.
pub const CONDITION_REFINE: f64 = 1e8;
/// Condition estimate treated as singular.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Factors `T - shift` and rejects near-singular systems.
pub fn factor_checked(t: &Tridiag, shift: Complex64, time: f64, z: Complex64) -> Result<ShiftedTridiagLu> {
    let lu = ShiftedTridiagLu::factor(t, shift);
    let mut cond = lu.condition_proxy();
    if cond > CONDITION_REFINE && cond.is_finite() {
        cond = lu.refined_condition();
    }
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::NearSingular { t: time, z, condition: cond });
    }
    Ok(lu)
}

/// Real band matrix stored for LU with partial pivoting: `kl` sub- and `ku`
/// super-diagonals, with `kl` extra rows for fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row `i`, column `j` lives at `ab[(j + kl + ku - i) + i * width]`... see `idx`.
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, ab: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    // Row-major band storage: entry (i, j) with i - kl <= j <= i + kl + ku.
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width() + (j + self.kl - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.ku {
            return Err(Error::Parameter(format!("entry ({i}, {j}) outside band ({}, {})", self.kl, self.ku)));
        }
        let k = self.idx(i, j);
        self.ab[k] += v;
        Ok(())
    }

    /// In-place LU with partial pivoting; solves for every column of `rhs`
    /// (column-major, `nrhs` columns of length `n`). Returns the smallest
    /// pivot modulus relative to the largest entry.
    pub fn solve(mut self, rhs: &mut [f64], nrhs: usize) -> Result<f64> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.ab.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Err(Error::Parameter("band matrix is zero".into()));
        }
        let mut min_piv = f64::INFINITY;
        let mut perm = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.ab[self.idx(k, k)].abs();
            for i in (k + 1)..=last_row {
                let v = self.ab[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            perm[k] = p;
            min_piv = min_piv.min(best / scale);
            if best == 0.0 {
                return Err(Error::Parameter(format!("band matrix singular at column {k}")));
            }
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.ab.swap(a, b);
                }
                for c in 0..nrhs {
                    rhs.swap(c * n + k, c * n + p);
                }
            }
            let piv = self.ab[self.idx(k, k)];
            for i in (k + 1)..=last_row {
                let ik = self.idx(i, k);
                let l = self.ab[ik] / piv;
                if l == 0.0 {
                    continue;
                }
                self.ab[ik] = l;
                for j in (k + 1)..=last_col {
                    let kj = self.ab[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.ab[ij] -= l * kj;
                }
                for c in 0..nrhs {
                    let v = rhs[c * n + k];
                    rhs[c * n + i] -= l * v;
                }
            }
        }
        for c in 0..nrhs {
            let x = &mut rhs[c * n..(c + 1) * n];
            for k in (0..n).rev() {
                let last_col = (k + kl + ku).min(n - 1);
                let mut s = x[k];
                for j in (k + 1)..=last_col {
                    s -= self.ab[self.idx(k, j)] * x[j];
                }
                x[k] = s / self.ab[self.idx(k, k)];
            }
        }
        let _ = perm;
        Ok(min_piv)
    }
}

/// Compressed sparse row matrix with real entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed, exact zeros dropped.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] != 0.0).collect();
        let cols: Vec<usize> = keep.iter().map(|&k| cols[k]).collect();
        let rows: Vec<usize> = keep.iter().map(|&k| rows[k]).collect();
        let vals: Vec<f64> = keep.iter().map(|&k| vals[k]).collect();
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn apply_complex(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.row(i).map(|(j, v)| x[j] * v).sum();
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Coordinate text dump: `row col re im`, one entry per line.
    pub fn write_coo(&self, mut w: impl Write) -> Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:.16e} {:.16e}", 0.0)?;
            }
        }
        Ok(())
    }
}
