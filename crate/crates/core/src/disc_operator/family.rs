//! The family `A(t) = a(t) Delta_h + b(t) D_h` on the disc and its shifted
//! resolvents.

use num_complex::Complex64;

use super::grid::{GridFunction, PolarDiscGrid};
use super::stencil::{assemble_physical, ModeBasis};
use crate::abstract_solver::EvolutionFamily;
use crate::error::{Error, Result};
use crate::geometry::CuspParametrization;
use crate::linalg::{factor_checked, Csr, Tridiag};

/// Which drift coefficient multiplies `r d/dr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftConvention {
    /// `b = phi' / phi`.
    #[default]
    PhiPrimeOverPhi,
    /// `b = phi' / phi^2`.
    PhiPrimeOverPhiSquared,
}

impl DriftConvention {
    fn power(self) -> i32 {
        match self {
            DriftConvention::PhiPrimeOverPhi => 1,
            DriftConvention::PhiPrimeOverPhiSquared => 2,
        }
    }
}

#[derive(Debug, Clone)]
enum Coefficients {
    Cone { param: CuspParametrization, drift: DriftConvention },
    Frozen,
}

/// Coefficient values and their first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

/// `A_n(t) = A(t + t_n)` on `[0, T - t_n]`; immutable after assembly.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    grid: PolarDiscGrid,
    coeffs: Coefficients,
    time_offset: f64,
    length: f64,
    modes: ModeBasis,
    lap: Csr,
    drift: Csr,
}

impl OperatorFamily {
    /// Family of the transformed cone problem shifted by `time_offset`.
    pub fn assemble(grid: PolarDiscGrid, param: CuspParametrization, time_offset: f64) -> Result<Self> {
        Self::assemble_with(grid, param, time_offset, DriftConvention::default())
    }

    pub fn assemble_with(
        grid: PolarDiscGrid,
        param: CuspParametrization,
        time_offset: f64,
        drift: DriftConvention,
    ) -> Result<Self> {
        if !(time_offset.is_finite() && time_offset >= 0.0) {
            return Err(Error::Parameter(format!("time offset {time_offset} must be >= 0")));
        }
        let length = param.horizon() - time_offset;
        if length <= 0.0 {
            return Err(Error::Parameter(format!("time offset {time_offset} leaves an empty interval")));
        }
        if param.phi(time_offset)? <= 0.0 {
            return Err(Error::SingularCoefficient { t: time_offset });
        }
        let (lap, drift_mat) = assemble_physical(&grid);
        Ok(Self {
            grid,
            coeffs: Coefficients::Cone { param, drift },
            time_offset,
            length,
            modes: ModeBasis::new(&grid),
            lap,
            drift: drift_mat,
        })
    }

    /// Constant-coefficient family `a = 1`, `b = 0` on `[0, length]`.
    pub fn frozen(grid: PolarDiscGrid, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Parameter(format!("interval length {length} must be positive")));
        }
        let (lap, drift) = assemble_physical(&grid);
        Ok(Self { grid, coeffs: Coefficients::Frozen, time_offset: 0.0, length, modes: ModeBasis::new(&grid), lap, drift })
    }

    pub fn grid(&self) -> &PolarDiscGrid {
        &self.grid
    }

    pub fn time_offset(&self) -> f64 {
        self.time_offset
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self.coeffs, Coefficients::Frozen)
    }

    pub fn param(&self) -> Option<&CuspParametrization> {
        match &self.coeffs {
            Coefficients::Cone { param, .. } => Some(param),
            Coefficients::Frozen => None,
        }
    }

    pub fn laplacian_matrix(&self) -> &Csr {
        &self.lap
    }

    pub fn drift_matrix(&self) -> &Csr {
        &self.drift
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= -1e-14 * self.length && t <= self.length * (1.0 + 1e-14)) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.length)));
        }
        Ok(())
    }

    /// `a, a', a''` and `b, b', b''` at local time `t`.
    pub fn coefficients(&self, t: f64) -> Result<CoefficientSet> {
        self.check_time(t)?;
        match &self.coeffs {
            Coefficients::Frozen => Ok(CoefficientSet { a: [1.0, 0.0, 0.0], b: [0.0; 3] }),
            Coefficients::Cone { param, drift } => {
                let tau = (t + self.time_offset).clamp(0.0, param.horizon());
                let v = param.values_unchecked(tau);
                if v.phi <= 0.0 {
                    return Err(Error::SingularCoefficient { t: tau });
                }
                let (p, p1, p2, p3) = (v.phi, v.d1, v.d2, v.d3);
                let a = [p.powi(-2), -2.0 * p1 * p.powi(-3), -2.0 * p2 * p.powi(-3) + 6.0 * p1 * p1 * p.powi(-4)];
                let k = drift.power();
                let kf = k as f64;
                let b = [
                    p1 * p.powi(-k),
                    p2 * p.powi(-k) - kf * p1 * p1 * p.powi(-k - 1),
                    p3 * p.powi(-k) - 3.0 * kf * p1 * p2 * p.powi(-k - 1)
                        + kf * (kf + 1.0) * p1.powi(3) * p.powi(-k - 2),
                ];
                Ok(CoefficientSet { a, b })
            }
        }
    }

    fn coefficient_pair(&self, t: f64, order: usize) -> Result<(f64, f64)> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        let c = self.coefficients(t)?;
        Ok((c.a[order], c.b[order]))
    }

    /// `(d^order/dt^order A)(t) v`.
    pub fn apply_operator(&self, t: f64, order: usize, v: &GridFunction) -> Result<GridFunction> {
        self.check_grid(v)?;
        let (a, b) = self.coefficient_pair(t, order)?;
        let mut out = GridFunction::zeros(self.grid);
        let mut l = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let mut d = l.clone();
        self.lap.apply_complex(v.values(), &mut l);
        self.drift.apply_complex(v.values(), &mut d);
        for ((o, x), y) in out.values_mut().iter_mut().zip(&l).zip(&d) {
            *o = x * a + y * b;
        }
        Ok(out)
    }

    fn check_grid(&self, v: &GridFunction) -> Result<()> {
        if *v.grid() != self.grid {
            return Err(Error::GridMismatch("grid function and operator use different grids".into()));
        }
        Ok(())
    }

    fn to_modes_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.len();
        let re: Vec<f64> = v.iter().map(|c| c.re).collect();
        let im: Vec<f64> = v.iter().map(|c| c.im).collect();
        let (mut wr, mut wi) = (vec![0.0; n], vec![0.0; n]);
        self.modes.forward(&re, &mut wr);
        self.modes.forward(&im, &mut wi);
        wr.into_iter().zip(wi).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    fn from_modes_complex(&self, w: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.len();
        let re: Vec<f64> = w.iter().map(|c| c.re).collect();
        let im: Vec<f64> = w.iter().map(|c| c.im).collect();
        let (mut pr, mut pi) = (vec![0.0; n], vec![0.0; n]);
        self.modes.inverse(&re, &mut pr);
        self.modes.inverse(&im, &mut pi);
        pr.into_iter().zip(pi).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    /// Resolvent of `A(t) - lambda - z` (order 0) or its first/second
    /// t-derivative applied to `rhs`.
    pub fn resolvent_solve(&self, t: f64, lambda: f64, z: Complex64, rhs: &GridFunction, order: usize) -> Result<GridFunction> {
        self.check_grid(rhs)?;
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Parameter(format!("lambda = {lambda} must be >= 0")));
        }
        let c = self.coefficients(t)?;
        let shift = z + lambda;
        let nr = self.grid.nr();
        let work = self.to_modes_complex(rhs.values());
        let mut out = vec![Complex64::new(0.0, 0.0); work.len()];
        let mut tmp = vec![Complex64::new(0.0, 0.0); nr];
        for s in 0..self.modes.block_count() {
            let chunk = &work[s * nr..(s + 1) * nr];
            if chunk.iter().all(|v| v.norm() == 0.0) {
                continue;
            }
            let (lap, drift) = (self.modes.lap_block(s), self.modes.drift_block(s));
            let op = |k: usize| Tridiag::combine(c.a[k], lap, c.b[k], drift);
            let lu = factor_checked(&op(0), shift, t, z)?;
            let solve = |x: &mut [Complex64]| lu.solve_in_place(x);
            let mut u: Vec<Complex64> = chunk.to_vec();
            solve(&mut u);
            let res = match order {
                0 => u,
                1 => {
                    let a1 = op(1);
                    a1.apply_complex(&u, &mut tmp);
                    solve(&mut tmp);
                    tmp.iter().map(|v| -v).collect()
                }
                _ => {
                    let (a1, a2) = (op(1), op(2));
                    // -R A'' R f + 2 R A' R A' R f
                    let mut first = vec![Complex64::new(0.0, 0.0); nr];
                    a2.apply_complex(&u, &mut first);
                    let mut v1 = vec![Complex64::new(0.0, 0.0); nr];
                    a1.apply_complex(&u, &mut v1);
                    solve(&mut v1);
                    a1.apply_complex(&v1, &mut tmp);
                    for (f, x) in first.iter_mut().zip(&tmp) {
                        *f = 2.0 * x - *f;
                    }
                    solve(&mut first);
                    first
                }
            };
            out[s * nr..(s + 1) * nr].copy_from_slice(&res);
        }
        GridFunction::new(self.grid, self.from_modes_complex(&out))
    }
}

impl EvolutionFamily for OperatorFamily {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn length(&self) -> f64 {
        self.length
    }

    fn block_count(&self) -> usize {
        self.modes.block_count()
    }

    fn block_len(&self) -> usize {
        self.modes.block_len()
    }

    fn block_class(&self, block: usize) -> usize {
        self.modes.class(block)
    }

    fn to_working(&self, phys: &[f64], work: &mut [f64]) {
        self.modes.forward(phys, work);
    }

    fn from_working(&self, work: &[f64], phys: &mut [f64]) {
        self.modes.inverse(work, phys);
    }

    fn block_operator(&self, t: f64, order: usize, block: usize) -> Result<Tridiag> {
        let (a, b) = self.coefficient_pair(t, order)?;
        Ok(Tridiag::combine(a, self.modes.lap_block(block), b, self.modes.drift_block(block)))
    }

    fn apply_physical(&self, t: f64, order: usize, v: &[f64], out: &mut [f64]) -> Result<()> {
        let (a, b) = self.coefficient_pair(t, order)?;
        let mut d = vec![0.0; v.len()];
        self.lap.apply(v, out);
        self.drift.apply(v, &mut d);
        for (o, y) in out.iter_mut().zip(&d) {
            *o = a * *o + b * y;
        }
        Ok(())
    }

    fn is_time_independent(&self) -> bool {
        self.is_frozen()
    }
}
