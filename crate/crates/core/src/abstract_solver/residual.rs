//! Residual checks for a candidate strict solution.

use std::io::Write;

use super::family::EvolutionFamily;
use super::time_grid::TimeGridFunction;
use crate::error::{Error, Result};

/// Boundary and equation residuals; `*_rel` are divided by `||g||` when it is
/// nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualReport {
    pub bc0: f64,
    pub bc1: f64,
    pub pde_residual: f64,
    /// Residual on the two nodes next to each end (one-sided differences).
    pub edge_residual: f64,
    pub bc0_rel: f64,
    pub bc1_rel: f64,
    pub pde_residual_rel: f64,
    pub fixed_point_gap: f64,
    pub g_norm: f64,
}

impl ResidualReport {
    pub fn metrics(&self) -> [(&'static str, f64); 9] {
        [
            ("bc0", self.bc0),
            ("bc1", self.bc1),
            ("pde_residual", self.pde_residual),
            ("edge_residual", self.edge_residual),
            ("bc0_rel", self.bc0_rel),
            ("bc1_rel", self.bc1_rel),
            ("pde_residual_rel", self.pde_residual_rel),
            ("fixed_point_gap", self.fixed_point_gap),
            ("g_norm", self.g_norm),
        ]
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "metric,value")?;
        for (k, v) in self.metrics() {
            writeln!(w, "{k},{v:.16e}")?;
        }
        Ok(())
    }
}

fn sup_diff(a: &[f64], b: &[f64], sign: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x + sign * y).abs()).fold(0.0, f64::max)
}

/// Fourth-order second difference at node `k` (one-sided near the ends).
fn second_difference(w: &TimeGridFunction, k: usize, out: &mut [f64]) {
    let n = w.grid().intervals();
    let h2 = w.grid().step().powi(2);
    let (idx, coef): ([usize; 6], [f64; 6]) = if k >= 2 && k + 2 <= n {
        ([k - 2, k - 1, k, k + 1, k + 2, k], [-1.0, 16.0, -30.0, 16.0, -1.0, 0.0])
    } else if k == 0 {
        ([0, 1, 2, 3, 4, 5], [45.0, -154.0, 214.0, -156.0, 61.0, -10.0])
    } else if k == 1 {
        ([0, 1, 2, 3, 4, 5], [10.0, -15.0, -4.0, 14.0, -6.0, 1.0])
    } else if k == n {
        ([n, n - 1, n - 2, n - 3, n - 4, n - 5], [45.0, -154.0, 214.0, -156.0, 61.0, -10.0])
    } else {
        ([n, n - 1, n - 2, n - 3, n - 4, n - 5], [10.0, -15.0, -4.0, 14.0, -6.0, 1.0])
    };
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, c) in idx.iter().zip(coef) {
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(w.node(*j)) {
                *o += c * v / (12.0 * h2);
            }
        }
    }
}

/// Fourth-order one-sided first differences at both ends.
fn end_derivatives(w: &TimeGridFunction) -> (Vec<f64>, Vec<f64>) {
    let n = w.grid().intervals();
    let h = w.grid().step();
    let c = [-25.0, 48.0, -36.0, 16.0, -3.0];
    let d = w.dim();
    let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
    for (j, cj) in c.iter().enumerate() {
        for r in 0..d {
            a[r] += cj * w.node(j)[r] / (12.0 * h);
            b[r] -= cj * w.node(n - j)[r] / (12.0 * h);
        }
    }
    (a, b)
}

/// Residuals of `w'' + A w - lambda w = g` and the anti-periodic conditions.
/// `dw` (if given) supplies `w'` at the ends; otherwise one-sided differences are used.
pub fn strict_solution_residual<F: EvolutionFamily + ?Sized>(
    fam: &F,
    lambda: f64,
    w: &TimeGridFunction,
    g: &TimeGridFunction,
    dw: Option<&TimeGridFunction>,
) -> Result<ResidualReport> {
    let n = w.grid().intervals();
    if n < 8 {
        return Err(Error::Parameter(format!("residuals need at least 9 time nodes, got {}", n + 1)));
    }
    if !w.grid().same_nodes(g.grid()) || w.dim() != g.dim() || w.dim() != fam.dim() {
        return Err(Error::GridMismatch("w, g and the family must share grid and dimension".into()));
    }
    let d = w.dim();
    let bc0 = sup_diff(w.node(0), w.node(n), 1.0);
    let bc1 = match dw {
        Some(dw) => sup_diff(dw.node(0), dw.node(n), 1.0),
        None => {
            let (a, b) = end_derivatives(w);
            sup_diff(&a, &b, 1.0)
        }
    };
    let mut wpp = vec![0.0; d];
    let mut aw = vec![0.0; d];
    let (mut pde, mut edge) = (0.0_f64, 0.0_f64);
    for k in 0..=n {
        let t = w.grid().node(k) - w.grid().start();
        second_difference(w, k, &mut wpp);
        fam.apply_physical(t.min(fam.length()), 0, w.node(k), &mut aw)?;
        let r = (0..d).map(|r| (wpp[r] + aw[r] - lambda * w.node(k)[r] - g.node(k)[r]).abs()).fold(0.0, f64::max);
        if k >= 2 && k + 2 <= n {
            pde = pde.max(r);
        } else {
            edge = edge.max(r);
        }
    }
    let gn = g.sup_norm();
    let rel = |v: f64| if gn > 0.0 { v / gn } else { v };
    Ok(ResidualReport {
        bc0,
        bc1,
        pde_residual: pde,
        edge_residual: edge,
        bc0_rel: rel(bc0),
        bc1_rel: rel(bc1),
        pde_residual_rel: rel(pde),
        fixed_point_gap: 0.0,
        g_norm: gn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstract_solver::{ScalarFamily, TimeGrid};

    #[test]
    fn zero_and_unit_forcing() {
        let fam = ScalarFamily::constant(0.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let zero = TimeGridFunction::zeros(grid, 1);
        let r = strict_solution_residual(&fam, 1.0, &zero, &zero, None).unwrap();
        assert_eq!((r.bc0, r.bc1, r.pde_residual), (0.0, 0.0, 0.0));
        let one = TimeGridFunction::from_fn(grid, 1, |_, o| o[0] = 1.0);
        let r = strict_solution_residual(&fam, 1.0, &zero, &one, None).unwrap();
        assert_eq!(r.pde_residual, 1.0);
        let short = TimeGridFunction::zeros(TimeGrid::new(0.0, 1.0, 7).unwrap(), 1);
        assert!(strict_solution_residual(&fam, 1.0, &short, &short, None).is_err());
    }

    #[test]
    fn differences_are_fourth_order_exact_on_quartics() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let w = TimeGridFunction::from_fn(grid, 1, |t, o| o[0] = t.powi(4) - 2.0 * t * t + t);
        let mut out = [0.0];
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            second_difference(&w, k, &mut out);
            assert!((out[0] - (12.0 * t * t - 4.0)).abs() < 1e-9, "node {k}");
        }
        let (a, b) = end_derivatives(&w);
        assert!((a[0] - 1.0).abs() < 1e-10 && (b[0] - 1.0).abs() < 1e-10);
    }
}
