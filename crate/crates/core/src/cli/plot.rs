//! Plot-ready CSV tables.

use std::io::Write;

use num_complex::Complex64;

use crate::contour::{green_kernel, sqrt_minus};
use crate::error::{Error, Result};
use crate::limit_scheme::ConvergenceTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LambdaDecay,
    TnConvergence,
    KernelHeatmap,
}

impl PlotKind {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::LambdaDecay => "lambda_decay.csv",
            Self::TnConvergence => "tn_convergence.csv",
            Self::KernelHeatmap => "kernel_heatmap.csv",
        }
    }
}

/// `|K(t, s)|` on a uniform `n x n` grid of `[0, T]^2` at a fixed `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub z: f64,
    pub length: f64,
    pub rows: Vec<(f64, f64, f64)>,
}

impl KernelTable {
    pub fn new(z: f64, length: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter("kernel table needs at least two nodes per side".into()));
        }
        let k = sqrt_minus(Complex64::new(z, 0.0))?;
        let h = length / (n - 1) as f64;
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (t, s) = (i as f64 * h, j as f64 * h);
                rows.push((t, s, green_kernel(k, t, s, length)?.value.norm()));
            }
        }
        Ok(Self { z, length, rows })
    }

    /// `max |K(t, s) - K(s, t)|` over the table.
    pub fn asymmetry(&self) -> f64 {
        let n = (self.rows.len() as f64).sqrt().round() as usize;
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in 0..i {
                m = m.max((self.rows[i * n + j].2 - self.rows[j * n + i].2).abs());
            }
        }
        m
    }
}

pub enum PlotTable<'a> {
    /// `(lambda, ||R_lambda|| estimate)`.
    LambdaDecay(&'a [(f64, f64)]),
    TnConvergence(&'a ConvergenceTable),
    KernelHeatmap(&'a KernelTable),
}

impl PlotTable<'_> {
    pub fn kind(&self) -> PlotKind {
        match self {
            Self::LambdaDecay(_) => PlotKind::LambdaDecay,
            Self::TnConvergence(_) => PlotKind::TnConvergence,
            Self::KernelHeatmap(_) => PlotKind::KernelHeatmap,
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Self::LambdaDecay(r) => r.is_empty(),
            Self::TnConvergence(t) => t.rows.is_empty(),
            Self::KernelHeatmap(k) => k.rows.is_empty(),
        }
    }
}

/// Writes a `#` comment line describing the columns, then the header and rows.
pub fn emit_plot_data(table: &PlotTable<'_>, mut w: impl Write) -> Result<()> {
    if table.is_empty() {
        return Err(Error::Parameter("nothing to plot".into()));
    }
    match table {
        PlotTable::LambdaDecay(rows) => {
            writeln!(w, "# lambda: shift; norm_estimate: probed sup-norm of R_lambda")?;
            writeln!(w, "lambda,norm_estimate")?;
            for (l, e) in rows.iter() {
                writeln!(w, "{l:.16e},{e:.16e}")?;
            }
        }
        PlotTable::TnConvergence(t) => {
            writeln!(w, "# one row per truncation level; cauchy_gap against the previous level (nan for n = 0)")?;
            t.write_csv(&mut w)?;
        }
        PlotTable::KernelHeatmap(k) => {
            writeln!(w, "# t, s: times in [0, {}]; abs_k: |K(t, s)| at z = {}", k.length, k.z)?;
            writeln!(w, "t,s,abs_k")?;
            for (t, s, v) in &k.rows {
                writeln!(w, "{t:.16e},{s:.16e},{v:.16e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_decay_passes_rows_through() {
        let rows = [(10.0, 0.1), (20.0, 0.05), (40.0, 0.025), (80.0, 0.0125)];
        let mut buf = Vec::new();
        emit_plot_data(&PlotTable::LambdaDecay(&rows), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], "lambda,norm_estimate");
        assert_eq!(lines.len(), 6);
        assert!(emit_plot_data(&PlotTable::LambdaDecay(&[]), Vec::new()).is_err());
    }

    #[test]
    fn kernel_table_is_symmetric() {
        let k = KernelTable::new(-1.0, 1.0, 9).unwrap();
        assert_eq!(k.rows.len(), 81);
        assert!(k.asymmetry() < 1e-14);
    }
}
