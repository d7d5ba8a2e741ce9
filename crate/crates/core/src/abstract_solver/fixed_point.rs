//! Neumann iteration for `g = g* - R_lambda g*`, the lambda search and the
//! full anti-periodic solve.

use super::engine::Formulation;
use super::family::EvolutionFamily;
use super::representation::{apply_r_lambda_with, estimate_r_lambda_norm_with, representation_solution_with};
use super::residual::{strict_solution_residual, ResidualReport};
use super::time_grid::TimeGridFunction;
use crate::contour::{ContourConfig, ContourQuadrature};
use crate::error::{Error, Result, StageExt};

/// Sign in `g = g* + FIXED_POINT_SIGN * R_lambda g*`.
pub const FIXED_POINT_SIGN: f64 = -1.0;
const MAX_GROWTH_STEPS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Fixed shift; `None` runs the lambda search.
    pub lambda: Option<f64>,
    pub theta2: f64,
    pub nt: usize,
    pub contour: ContourConfig,
    pub tol: f64,
    pub max_iter: usize,
    pub lambda_init: f64,
    pub growth: f64,
    pub target: f64,
    pub n_probes: usize,
    pub seed: u64,
    pub formulation: Formulation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            theta2: 0.5,
            nt: 64,
            contour: ContourConfig::default(),
            tol: 1e-10,
            max_iter: 200,
            lambda_init: 1.0,
            growth: 2.0,
            target: 0.5,
            n_probes: 8,
            seed: 0x5EED,
            formulation: Formulation::OutputTime,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Parameter(format!("lambda = {l} must be positive")));
            }
        }
        if !(self.theta2 > 0.0 && self.theta2 < 1.0) {
            return Err(Error::Parameter(format!("2 theta = {} outside (0, 1)", self.theta2)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 || self.nt < 8 {
            return Err(Error::Parameter("tol > 0, max_iter >= 1 and Nt >= 8 required".into()));
        }
        if !(self.lambda_init > 0.0 && self.growth > 1.0 && self.target > 0.0 && self.target < 1.0) {
            return Err(Error::Parameter("lambda search needs lambda_init > 0, growth > 1, 0 < target < 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub gstar: TimeGridFunction,
    pub iterations: usize,
    /// Last observed update ratio `||d_{k+1}|| / ||d_k||`.
    pub ratio: f64,
    /// `||g - (g* - R_lambda g*)||`, recomputed after the iteration.
    pub certificate: f64,
}

/// Neumann iteration `g*_{k+1} = g + R_lambda g*_k`.
pub fn solve_gstar<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    g: &TimeGridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    solve_gstar_with(fam, contour, lambda, g, tol, max_iter, Formulation::OutputTime)
}

pub fn solve_gstar_with<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    g: &TimeGridFunction,
    tol: f64,
    max_iter: usize,
    form: Formulation,
) -> Result<FixedPoint> {
    let gn = g.sup_norm();
    let mut gstar = g.clone();
    if fam.is_time_independent() || gn == 0.0 {
        return Ok(FixedPoint { gstar, iterations: 1, ratio: 0.0, certificate: 0.0 });
    }
    let mut prev_update = f64::INFINITY;
    let mut growth = 0;
    let mut ratio = 0.0;
    let mut r = apply_r_lambda_with(fam, contour, lambda, &gstar, form)?;
    for it in 1..=max_iter {
        let next = g.add_scaled(-FIXED_POINT_SIGN, &r)?;
        let update = next.distance(&gstar)?;
        if prev_update.is_finite() && prev_update > 0.0 {
            ratio = update / prev_update;
        }
        growth = if update > prev_update { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(Error::LambdaTooSmall { lambda, ratio });
        }
        gstar = next;
        r = apply_r_lambda_with(fam, contour, lambda, &gstar, form)?;
        if update <= tol * gn {
            let residual = gstar.add_scaled(FIXED_POINT_SIGN, &r)?;
            let certificate = g.distance(&residual)?;
            return Ok(FixedPoint { gstar, iterations: it, ratio, certificate });
        }
        prev_update = update;
    }
    Err(Error::NoContraction { steps: max_iter, lambda, estimate: ratio })
}

/// `(lambda, estimate)` pairs visited by the search.
pub type LambdaAudit = Vec<(f64, f64)>;

/// Multiplies `lambda` by `growth` until the estimated `||R_lambda||` is below `target`.
#[allow(clippy::too_many_arguments)]
pub fn select_lambda_star<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourConfig,
    grid: super::TimeGrid,
    lambda_init: f64,
    growth: f64,
    target: f64,
    n_probes: usize,
    seed: u64,
    form: Formulation,
) -> Result<(f64, LambdaAudit)> {
    if !(lambda_init > 0.0 && growth > 1.0 && target > 0.0 && target < 1.0) {
        return Err(Error::Parameter("lambda search needs lambda_init > 0, growth > 1, 0 < target < 1".into()));
    }
    let mut lambda = lambda_init;
    let mut audit = Vec::new();
    for _ in 0..=MAX_GROWTH_STEPS {
        let quad = contour.build(lambda, fam.length())?;
        let est = estimate_r_lambda_norm_with(fam, &quad, lambda, grid, n_probes, seed, form)?;
        audit.push((lambda, est));
        if est < target {
            return Ok((lambda, audit));
        }
        lambda *= growth;
    }
    let (l, e) = *audit.last().expect("nonempty");
    Err(Error::NoContraction { steps: MAX_GROWTH_STEPS, lambda: l, estimate: e })
}

#[derive(Debug, Clone)]
pub struct AntiperiodicSolution {
    pub lambda: f64,
    pub w: TimeGridFunction,
    pub dw: TimeGridFunction,
    pub gstar: TimeGridFunction,
    pub iterations: usize,
    pub report: ResidualReport,
    pub audit: LambdaAudit,
    pub contour: ContourQuadrature,
}

/// Lambda search (if needed), fixed point, representation and residuals.
pub fn solve_antiperiodic<F: EvolutionFamily + ?Sized>(
    fam: &F,
    config: &SolverConfig,
    g: &TimeGridFunction,
) -> Result<AntiperiodicSolution> {
    config.validate().stage("config")?;
    let (lambda, audit) = match config.lambda {
        Some(l) => (l, Vec::new()),
        None => select_lambda_star(
            fam,
            &config.contour,
            *g.grid(),
            config.lambda_init,
            config.growth,
            config.target,
            config.n_probes,
            config.seed,
            config.formulation,
        )
        .stage("lambda_search")?,
    };
    let contour = config.contour.build(lambda, fam.length()).stage("contour")?;
    let fp = solve_gstar_with(fam, &contour, lambda, g, config.tol, config.max_iter, config.formulation)
        .stage("fixed_point")?;
    let (w, dw) =
        representation_solution_with(fam, &contour, lambda, &fp.gstar, true, config.formulation).stage("representation")?;
    let dw = dw.expect("derivative requested");
    let mut report = strict_solution_residual(fam, lambda, &w, g, Some(&dw)).stage("residual")?;
    report.fixed_point_gap = fp.certificate;
    Ok(AntiperiodicSolution { lambda, w, dw, gstar: fp.gstar, iterations: fp.iterations, report, audit, contour })
}
