//! Discretization of `A(t) = phi^-2 Delta + (phi'/phi) r d/dr` on the unit disc.

mod family;
mod grid;
mod hypotheses;
pub(crate) mod stencil;

use std::io::Write;

pub use family::{CoefficientSet, DriftConvention, OperatorFamily};
pub use grid::{GridFunction, PolarDiscGrid};
pub use hypotheses::{estimate_norm, probe_vectors, verify_hypotheses, HypothesisReport, PROBE_SEED};

use crate::error::Result;
use crate::geometry::CuspParametrization;

pub fn build_grid(nr: usize, ntheta: usize) -> Result<PolarDiscGrid> {
    PolarDiscGrid::new(nr, ntheta)
}

pub fn assemble_family(grid: PolarDiscGrid, param: CuspParametrization, time_offset: f64) -> Result<OperatorFamily> {
    OperatorFamily::assemble(grid, param, time_offset)
}

/// Weights `w_i` (per ring) in which the frozen Laplacian is symmetric.
pub fn symmetry_weights(grid: &PolarDiscGrid) -> Vec<f64> {
    stencil::symmetry_weights(grid)
}

/// Dumps `A(t)` (order 0) in coordinate text format `row col re im`.
pub fn write_operator_coo(fam: &OperatorFamily, t: f64, w: impl Write) -> Result<()> {
    let c = fam.coefficients(t)?;
    let lap = fam.laplacian_matrix();
    let drift = fam.drift_matrix();
    let n = lap.n;
    let mut trip = Vec::new();
    for i in 0..n {
        for (j, v) in lap.row(i) {
            trip.push((i, j, c.a[0] * v));
        }
        for (j, v) in drift.row(i) {
            trip.push((i, j, c.b[0] * v));
        }
    }
    crate::linalg::Csr::from_triplets(n, trip).write_coo(w)
}
