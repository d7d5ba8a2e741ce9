//! The representation formula, the perturbation operator `R_lambda` and its
//! norm estimate.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::engine::{evaluate, pi_terms, Formulation, PiTerms, Quantities};
use super::family::EvolutionFamily;
use super::time_grid::{TimeGrid, TimeGridFunction};
use crate::contour::ContourQuadrature;
use crate::error::{Error, Result};

/// `w` and optionally `w'` from the representation formula.
pub fn representation_solution<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    gstar: &TimeGridFunction,
    with_derivative: bool,
) -> Result<(TimeGridFunction, Option<TimeGridFunction>)> {
    representation_solution_with(fam, contour, lambda, gstar, with_derivative, Formulation::OutputTime)
}

pub fn representation_solution_with<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    gstar: &TimeGridFunction,
    with_derivative: bool,
    form: Formulation,
) -> Result<(TimeGridFunction, Option<TimeGridFunction>)> {
    let out = evaluate(fam, contour, lambda, gstar, Quantities { w: true, dw: with_derivative, r_lambda: false }, form)?;
    Ok((out.w.expect("requested"), out.dw))
}

/// `R_lambda g*`; identically zero for a time-independent family.
pub fn apply_r_lambda<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    gstar: &TimeGridFunction,
) -> Result<TimeGridFunction> {
    apply_r_lambda_with(fam, contour, lambda, gstar, Formulation::OutputTime)
}

pub fn apply_r_lambda_with<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    gstar: &TimeGridFunction,
    form: Formulation,
) -> Result<TimeGridFunction> {
    if fam.is_time_independent() {
        return Ok(TimeGridFunction::zeros(*gstar.grid(), gstar.dim()));
    }
    let out = evaluate(fam, contour, lambda, gstar, Quantities { r_lambda: true, ..Default::default() }, form)?;
    Ok(out.r_lambda.expect("requested"))
}

/// Random sign probes on `grid`, deterministic in `seed`.
pub fn sign_probes(grid: TimeGrid, dim: usize, count: usize, seed: u64) -> Vec<TimeGridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| TimeGridFunction::from_fn(grid, dim, |_, out| {
            for v in out.iter_mut() {
                *v = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            }
        }))
        .collect()
}

/// Lower-bound estimate `max_p ||R_lambda p|| / ||p||` over `n_probes` random
/// sign probes on `grid`.
pub fn estimate_r_lambda_norm<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    grid: TimeGrid,
    n_probes: usize,
    seed: u64,
) -> Result<f64> {
    estimate_r_lambda_norm_with(fam, contour, lambda, grid, n_probes, seed, Formulation::OutputTime)
}

pub fn estimate_r_lambda_norm_with<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    grid: TimeGrid,
    n_probes: usize,
    seed: u64,
    form: Formulation,
) -> Result<f64> {
    if n_probes < 8 {
        return Err(Error::Parameter(format!("need at least 8 probes, got {n_probes}")));
    }
    if fam.is_time_independent() {
        return Ok(0.0);
    }
    let mut best = 0.0_f64;
    for p in sign_probes(grid, fam.dim(), n_probes, seed) {
        let r = apply_r_lambda_with(fam, contour, lambda, &p, form)?;
        best = best.max(r.sup_norm() / p.sup_norm());
    }
    Ok(best)
}

/// The five terms of the regularized second derivative at the node nearest
/// to `t`, with window `epsilon` rounded to whole steps (at least two).
pub fn second_derivative_decomposition<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    gstar: &TimeGridFunction,
    t: f64,
    epsilon: f64,
) -> Result<PiTerms> {
    let grid = gstar.grid();
    let h = grid.step();
    if !(epsilon > 0.0 && epsilon < t.min(grid.length() - t)) {
        return Err(Error::Parameter(format!("epsilon = {epsilon} outside (0, min(t, T - t)) at t = {t}")));
    }
    let i = (t / h).round() as usize;
    let e = (epsilon / h).round() as usize;
    if e < 2 {
        return Err(Error::Parameter(format!("epsilon = {epsilon} must be at least two time steps ({})", 2.0 * h)));
    }
    pi_terms(fam, contour, lambda, gstar, i, e)
}
