//! Representation-formula solver for `w'' + A(t) w - lambda w = g` with
//! `w(0) + w(L) = 0`, `w'(0) + w'(L) = 0`.

pub mod engine;
mod family;
mod fixed_point;
mod representation;
mod residual;
mod time_grid;

pub use engine::{Formulation, PiTerms, Quantities};
pub use family::{EvolutionFamily, ScalarFamily};
pub use fixed_point::{
    select_lambda_star, solve_antiperiodic, solve_gstar, solve_gstar_with, AntiperiodicSolution, FixedPoint, LambdaAudit,
    SolverConfig, FIXED_POINT_SIGN,
};
pub use representation::{
    apply_r_lambda, apply_r_lambda_with, estimate_r_lambda_norm, estimate_r_lambda_norm_with, representation_solution,
    representation_solution_with, second_derivative_decomposition, sign_probes,
};
pub use residual::{strict_solution_residual, ResidualReport};
pub use time_grid::{TimeGrid, TimeGridFunction};

use std::io::Write;

use crate::error::Result;

/// Writes `t,i,j,re,im` rows for a grid-valued series (`ntheta` columns per ring).
pub fn write_solution_csv(mut w: impl Write, f: &TimeGridFunction, ntheta: usize) -> Result<()> {
    writeln!(w, "t,i,j,re,im")?;
    for k in 0..f.grid().len() {
        let t = f.grid().node(k);
        for (idx, v) in f.node(k).iter().enumerate() {
            writeln!(w, "{t:.16e},{},{},{v:.16e},{:.16e}", idx / ntheta, idx % ntheta, 0.0)?;
        }
    }
    Ok(())
}
