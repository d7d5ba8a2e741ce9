//! Independent reference solutions: closed forms for the scalar model and a
//! direct space-time solve of the discretized transformed problem.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::abstract_solver::{representation_solution, EvolutionFamily, ScalarFamily, TimeGrid, TimeGridFunction};
use crate::contour::ContourQuadrature;
use crate::disc_operator::{stencil, OperatorFamily};
use crate::error::{Error, Result};
use crate::linalg::{BandMatrix, Tridiag};

/// Largest space-time system the direct solve accepts.
pub const MAX_UNKNOWNS: usize = 2_000_000;
/// Required relative backward error of the direct solve.
pub const BACKWARD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarForcing {
    Constant(f64),
    /// `cos((2k + 1) pi t / T)`.
    Mode(u32),
}

/// `w'' - a w - lambda w = g` on `[0, T]` with anti-periodic conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarModel {
    pub a: f64,
    pub lambda: f64,
    pub length: f64,
    pub forcing: ScalarForcing,
}

impl ScalarModel {
    pub fn new(a: f64, lambda: f64, length: f64, forcing: ScalarForcing) -> Result<Self> {
        if !(a >= 0.0 && lambda > 0.0 && length > 0.0) {
            return Err(Error::Parameter(format!("scalar model needs a >= 0, lambda > 0, T > 0 (a={a}, lambda={lambda}, T={length})")));
        }
        Ok(Self { a, lambda, length, forcing })
    }

    pub fn mu(&self) -> f64 {
        (self.a + self.lambda).sqrt()
    }

    pub fn forcing_at(&self, t: f64) -> f64 {
        match self.forcing {
            ScalarForcing::Constant(c) => c,
            ScalarForcing::Mode(k) => ((2 * k + 1) as f64 * std::f64::consts::PI * t / self.length).cos(),
        }
    }

    pub fn forcing_on(&self, grid: TimeGrid) -> TimeGridFunction {
        TimeGridFunction::from_fn(grid, 1, |t, o| o[0] = self.forcing_at(t - grid.start()))
    }

    pub fn family(&self) -> Result<ScalarFamily> {
        ScalarFamily::constant(self.a, self.length)
    }
}

/// Exact solution of the scalar model at `t`.
pub fn scalar_closed_form(model: &ScalarModel, t: f64) -> f64 {
    let mu = model.mu();
    match model.forcing {
        ScalarForcing::Constant(c) => {
            let half = 0.5 * model.length;
            let cm = (mu * (t - half)).cosh() / (mu * half).cosh();
            c * (cm - 1.0) / (mu * mu)
        }
        ScalarForcing::Mode(k) => {
            let om = (2 * k + 1) as f64 * std::f64::consts::PI / model.length;
            -model.forcing_at(t) / (om * om + mu * mu)
        }
    }
}

/// Bessel `J0` by its power series (accurate to roundoff for `|x| <= 10`).
pub fn bessel_j0(x: f64) -> f64 {
    bessel_series(x, 0)
}

/// Bessel `J1` by its power series.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_series(x, 1)
}

fn bessel_series(x: f64, order: i32) -> f64 {
    let q = -0.25 * x * x;
    let mut term = (0.5 * x).powi(order);
    let mut sum = term;
    for k in 1..80 {
        term *= q / (k as f64 * (k as f64 + order as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// First positive zero of `J0` by Newton iteration (`J0' = -J1`).
pub fn bessel_j0_first_zero() -> f64 {
    let mut x = 2.4;
    for _ in 0..50 {
        let dx = bessel_j0(x) / bessel_j1(x);
        x += dx;
        if dx.abs() < 1e-16 * x {
            break;
        }
    }
    x
}

/// Max node discrepancy of the representation formula against the closed form.
pub fn scalar_representation_check(model: &ScalarModel, contour: &ContourQuadrature, nt: usize) -> Result<f64> {
    let grid = TimeGrid::new(0.0, model.length, nt)?;
    let fam = model.family()?;
    let g = model.forcing_on(grid);
    let (w, _) = representation_solution(&fam, contour, model.lambda, &g, false)?;
    Ok((0..grid.len()).map(|k| (w.node(k)[0] - scalar_closed_form(model, grid.node(k))).abs()).fold(0.0, f64::max))
}

/// `||w_repr - w_mono|| / max(||w_mono||, 1e-14)`.
pub fn compare_solutions(w_repr: &TimeGridFunction, w_mono: &TimeGridFunction) -> Result<f64> {
    let d = w_repr.distance(w_mono).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(d / w_mono.sup_norm().max(1e-14))
}

/// Result of the direct space-time solve.
#[derive(Debug, Clone)]
pub struct MonolithicSolution {
    pub v: TimeGridFunction,
    /// `||r|| / (||M|| ||v|| + ||f||)` recomputed in physical coordinates.
    pub backward_error: f64,
}

/// Position of time level `k` in the folded order `0, N, 1, N-1, ...`.
fn folded(k: usize, n: usize) -> usize {
    if 2 * k <= n {
        2 * k
    } else {
        2 * (n - k) + 1
    }
}

/// Solves one spatial block across all time levels:
/// `(v_{k-1} - 2 v_k + v_{k+1}) / h^2 + (B_k - lambda) v_k = f_k` for `0 < k < N`,
/// `v_0 + v_N = 0` and the one-sided derivative condition. `rhs` holds two
/// columns (real and imaginary parts) in natural order `[k][r]`.
fn solve_block(ops: &[Tridiag], lambda: f64, h: f64, rhs: &mut [f64]) -> Result<()> {
    let n = ops.len() - 1;
    let m = ops[0].len();
    let dim = (n + 1) * m;
    let idx = |k: usize, r: usize| folded(k, n) * m + r;
    let mut band = BandMatrix::zeros(dim, 2 * m + 1, 4 * m + 1);
    let h2 = h * h;
    // Anti-periodicity rows live at the positions of levels 0 and N.
    for r in 0..m {
        band.add(idx(0, r), idx(0, r), 1.0)?;
        band.add(idx(0, r), idx(n, r), 1.0)?;
        let row = idx(n, r);
        for (k, c) in [(0, -3.0), (1, 4.0), (2, -1.0)] {
            band.add(row, idx(k, r), c / (2.0 * h))?;
        }
        for (k, c) in [(n, 3.0), (n - 1, -4.0), (n - 2, 1.0)] {
            band.add(row, idx(k, r), c / (2.0 * h))?;
        }
    }
    for k in 1..n {
        let op = &ops[k];
        for r in 0..m {
            let row = idx(k, r);
            band.add(row, idx(k - 1, r), 1.0 / h2)?;
            band.add(row, idx(k + 1, r), 1.0 / h2)?;
            band.add(row, row, -2.0 / h2 + op.diag[r] - lambda)?;
            if r > 0 {
                band.add(row, idx(k, r - 1), op.lower[r])?;
            }
            if r + 1 < m {
                band.add(row, idx(k, r + 1), op.upper[r])?;
            }
        }
    }
    let mut folded_rhs = vec![0.0; 2 * dim];
    for c in 0..2 {
        for k in 0..=n {
            for r in 0..m {
                let v = if k == 0 || k == n { 0.0 } else { rhs[c * dim + k * m + r] };
                folded_rhs[c * dim + idx(k, r)] = v;
            }
        }
    }
    band.solve(&mut folded_rhs, 2)?;
    for c in 0..2 {
        for k in 0..=n {
            for r in 0..m {
                rhs[c * dim + k * m + r] = folded_rhs[c * dim + idx(k, r)];
            }
        }
    }
    Ok(())
}

/// Normwise backward error `||r|| / (||M|| ||v|| + ||f||)` of `v` for the
/// space-time system, recomputed in physical coordinates. `op_norm` bounds
/// `||A(t)||_inf` over the grid.
fn backward_error<F: EvolutionFamily + ?Sized>(
    fam: &F,
    lambda: f64,
    op_norm: f64,
    v: &TimeGridFunction,
    f: &TimeGridFunction,
) -> Result<f64> {
    let grid = v.grid();
    let n = grid.intervals();
    let h = grid.step();
    let d = v.dim();
    let mut av = vec![0.0; d];
    let mut res = 0.0_f64;
    for k in 1..n {
        let t = (k as f64 * h).min(fam.length());
        fam.apply_physical(t, 0, v.node(k), &mut av)?;
        for r in 0..d {
            let lhs = (v.node(k - 1)[r] - 2.0 * v.node(k)[r] + v.node(k + 1)[r]) / (h * h) + av[r] - lambda * v.node(k)[r];
            res = res.max((lhs - f.node(k)[r]).abs());
        }
    }
    for r in 0..d {
        res = res.max((v.node(0)[r] + v.node(n)[r]).abs());
        let d0 = (-3.0 * v.node(0)[r] + 4.0 * v.node(1)[r] - v.node(2)[r]) / (2.0 * h);
        let dn = (3.0 * v.node(n)[r] - 4.0 * v.node(n - 1)[r] + v.node(n - 2)[r]) / (2.0 * h);
        res = res.max((d0 + dn).abs());
    }
    let m_norm = (op_norm + 4.0 / (h * h) + lambda).max(8.0 / h);
    Ok(res / (m_norm * v.sup_norm() + f.sup_norm()).max(f64::MIN_POSITIVE))
}

fn check_size(nt: usize, d: usize) -> Result<()> {
    if (nt + 1) * d > MAX_UNKNOWNS {
        return Err(Error::Parameter(format!("{} unknowns exceed the direct-solve guard {MAX_UNKNOWNS}", (nt + 1) * d)));
    }
    Ok(())
}

/// Direct space-time solve of `v'' + A(t) v - lambda v = f` on the family's
/// interval. The angular direction is diagonalized by an FFT; every Fourier
/// mode gives one banded real system.
pub fn monolithic_solve(fam: &OperatorFamily, lambda: f64, f: &TimeGridFunction) -> Result<MonolithicSolution> {
    let grid = *fam.grid();
    let tgrid = *f.grid();
    let n = tgrid.intervals();
    check_size(n, grid.len())?;
    if f.dim() != grid.len() || (tgrid.length() - fam.length()).abs() > 1e-12 * fam.length() {
        return Err(Error::GridMismatch("forcing does not match the family's grid or interval".into()));
    }
    if n < 4 {
        return Err(Error::Parameter("direct solve needs at least 4 time intervals".into()));
    }
    let (nr, nt) = (grid.nr(), grid.ntheta());
    let h = tgrid.step();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nt);
    let inv = planner.plan_fft_inverse(nt);

    // spec[m][k][r]
    let mut spec = vec![Complex64::new(0.0, 0.0); nt * (n + 1) * nr];
    let mut buf = vec![Complex64::new(0.0, 0.0); nt];
    for k in 0..=n {
        for r in 0..nr {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(f.node(k)[grid.index(r, j)], 0.0);
            }
            fwd.process(&mut buf);
            for (m, b) in buf.iter().enumerate() {
                spec[(m * (n + 1) + k) * nr + r] = *b;
            }
        }
    }
    let rows: Vec<_> = (0..nr).map(|i| stencil::radial_row(&grid, i)).collect();
    let dth = grid.dtheta();
    let coeffs: Vec<_> = (0..=n).map(|k| fam.coefficients((k as f64 * h).min(fam.length()))).collect::<Result<_>>()?;
    let dim = (n + 1) * nr;
    for m in 0..nt {
        let block = &mut spec[m * dim..(m + 1) * dim];
        if block.iter().all(|v| v.norm() == 0.0) {
            continue;
        }
        let symbol = -(2.0 - 2.0 * (m as f64 * dth).cos());
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        let ops: Vec<Tridiag> = coeffs
            .iter()
            .map(|c| {
                let mut t = Tridiag::zeros(nr);
                for (i, row) in rows.iter().enumerate() {
                    let rad = grid.radius(i);
                    let ang = 1.0 / (rad * rad * dth * dth);
                    t.diag[i] = c.a[0] * (row.lap[1] + symbol * ang) + c.b[0] * row.drift[1];
                    if i == 0 {
                        t.diag[0] += parity * (c.a[0] * row.lap[0] + c.b[0] * row.drift[0]);
                    } else {
                        t.lower[i] = c.a[0] * row.lap[0] + c.b[0] * row.drift[0];
                    }
                    if i + 1 < nr {
                        t.upper[i] = c.a[0] * row.lap[2] + c.b[0] * row.drift[2];
                    }
                }
                t
            })
            .collect();
        let mut rhs = vec![0.0; 2 * dim];
        for (q, v) in block.iter().enumerate() {
            rhs[q] = v.re;
            rhs[dim + q] = v.im;
        }
        solve_block(&ops, lambda, h, &mut rhs)?;
        for (q, v) in block.iter_mut().enumerate() {
            *v = Complex64::new(rhs[q], rhs[dim + q]);
        }
    }
    let mut data = vec![0.0; (n + 1) * grid.len()];
    let scale = 1.0 / nt as f64;
    for k in 0..=n {
        for r in 0..nr {
            for (m, b) in buf.iter_mut().enumerate() {
                *b = spec[(m * (n + 1) + k) * nr + r];
            }
            inv.process(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                data[k * grid.len() + grid.index(r, j)] = b.re * scale;
            }
        }
    }
    let v = TimeGridFunction::from_data(tgrid, grid.len(), data)?;
    let (lap, drift) = (fam.laplacian_matrix().inf_norm(), fam.drift_matrix().inf_norm());
    let op_norm = coeffs.iter().map(|c| c.a[0].abs() * lap + c.b[0].abs() * drift).fold(0.0, f64::max);
    let be = backward_error(fam, lambda, op_norm, &v, f)?;
    if !(be <= BACKWARD_TOL) {
        return Err(Error::Domain(format!("direct solve backward error {be:.3e} exceeds {BACKWARD_TOL:.0e}")));
    }
    Ok(MonolithicSolution { v, backward_error: be })
}

/// Direct space-time solve for any family, block by block in its working
/// basis. Independent of the FFT path used by [`monolithic_solve`].
pub fn family_monolithic<F: EvolutionFamily + ?Sized>(fam: &F, lambda: f64, f: &TimeGridFunction) -> Result<MonolithicSolution> {
    let tgrid = *f.grid();
    let n = tgrid.intervals();
    let d = fam.dim();
    check_size(n, d)?;
    if f.dim() != d || (tgrid.length() - fam.length()).abs() > 1e-12 * fam.length() {
        return Err(Error::GridMismatch("forcing does not match the family's dimension or interval".into()));
    }
    if n < 4 {
        return Err(Error::Parameter("direct solve needs at least 4 time intervals".into()));
    }
    let h = tgrid.step();
    let m = fam.block_len();
    let mut work = vec![0.0; (n + 1) * d];
    for k in 0..=n {
        fam.to_working(f.node(k), &mut work[k * d..(k + 1) * d]);
    }
    let times: Vec<f64> = (0..=n).map(|k| (k as f64 * h).min(fam.length())).collect();
    let dim = (n + 1) * m;
    let mut op_norm = 0.0_f64;
    for b in 0..fam.block_count() {
        let ops: Vec<Tridiag> = times.iter().map(|&t| fam.block_operator(t, 0, b)).collect::<Result<_>>()?;
        op_norm = ops.iter().map(Tridiag::inf_norm).fold(op_norm, f64::max);
        let mut rhs = vec![0.0; 2 * dim];
        for k in 0..=n {
            rhs[k * m..(k + 1) * m].copy_from_slice(&work[k * d + b * m..k * d + (b + 1) * m]);
        }
        if rhs.iter().all(|v| *v == 0.0) {
            continue;
        }
        solve_block(&ops, lambda, h, &mut rhs)?;
        for k in 0..=n {
            work[k * d + b * m..k * d + (b + 1) * m].copy_from_slice(&rhs[k * m..(k + 1) * m]);
        }
    }
    let mut data = vec![0.0; (n + 1) * d];
    for k in 0..=n {
        fam.from_working(&work[k * d..(k + 1) * d], &mut data[k * d..(k + 1) * d]);
    }
    let v = TimeGridFunction::from_data(tgrid, d, data)?;
    let be = backward_error(fam, lambda, op_norm, &v, f)?;
    Ok(MonolithicSolution { v, backward_error: be })
}

/// Direct space-time solve of the scalar model.
pub fn scalar_monolithic(model: &ScalarModel, nt: usize) -> Result<MonolithicSolution> {
    let grid = TimeGrid::new(0.0, model.length, nt)?;
    let f = model.forcing_on(grid);
    let op = Tridiag { lower: vec![0.0], diag: vec![-model.a], upper: vec![0.0] };
    let ops = vec![op; nt + 1];
    let mut rhs = vec![0.0; 2 * (nt + 1)];
    rhs[..nt + 1].copy_from_slice(f.data());
    solve_block(&ops, model.lambda, grid.step(), &mut rhs)?;
    let v = TimeGridFunction::from_data(grid, 1, rhs[..nt + 1].to_vec())?;
    let fam = model.family()?;
    let be = backward_error(&fam, model.lambda, model.a, &v, &f)?;
    Ok(MonolithicSolution { v, backward_error: be })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_zero() {
        let j = bessel_j0_first_zero();
        assert!((j - 2.404_825_557_695_773).abs() < 1e-14);
        assert!(bessel_j0(j).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        let m = ScalarModel::new(0.0, 1.0, 1.0, ScalarForcing::Constant(1.0)).unwrap();
        assert!((scalar_closed_form(&m, 0.5) + 0.1131812).abs() < 1e-7);
        assert_eq!(scalar_closed_form(&m, 0.0), 0.0);
        assert!(scalar_closed_form(&m, 1.0).abs() < 1e-15);
        let pm = ScalarModel::new(0.0, 1.0, 1.0, ScalarForcing::Mode(0)).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((scalar_closed_form(&pm, 0.3) + (std::f64::consts::PI * 0.3).cos() / (pi2 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_satisfy_the_ode() {
        for forcing in [ScalarForcing::Constant(2.0), ScalarForcing::Mode(1)] {
            let m = ScalarModel::new(0.7, 1.3, 1.5, forcing).unwrap();
            let d = 1e-3;
            for t in [0.2, 0.75, 1.3] {
                let w = |s: f64| scalar_closed_form(&m, s);
                let wpp = (w(t + d) - 2.0 * w(t) + w(t - d)) / (d * d);
                let res = wpp - (m.a + m.lambda) * w(t) - m.forcing_at(t);
                assert!(res.abs() < 1e-5, "{res}");
            }
        }
    }

    #[test]
    fn folding_is_a_permutation() {
        for n in [4usize, 5, 10] {
            let mut seen: Vec<usize> = (0..=n).map(|k| folded(k, n)).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..=n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn scalar_direct_solve_is_second_order() {
        let m = ScalarModel::new(0.0, 1.0, 1.0, ScalarForcing::Constant(1.0)).unwrap();
        let err = |nt: usize| {
            let s = scalar_monolithic(&m, nt).unwrap();
            (0..=nt).map(|k| (s.v.node(k)[0] - scalar_closed_form(&m, k as f64 / nt as f64)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "{e1} {e2}");
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let m = ScalarModel::new(0.0, 1.0, 1.0, ScalarForcing::Constant(0.0)).unwrap();
        assert_eq!(scalar_monolithic(&m, 16).unwrap().v.sup_norm(), 0.0);
    }
}
