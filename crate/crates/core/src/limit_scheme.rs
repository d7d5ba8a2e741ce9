//! Truncation `t_n -> 0`: solves on `[t_n, T]`, compares consecutive solutions
//! on their common interval and maps results back to the cone.

use std::f64::consts::PI;
use std::io::Write;

use crate::abstract_solver::{
    select_lambda_star, solve_antiperiodic, AntiperiodicSolution, ResidualReport, SolverConfig, TimeGrid,
    TimeGridFunction,
};
use crate::disc_operator::{OperatorFamily, PolarDiscGrid};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{holder_seminorm, CuspParametrization, CylinderPoint, HoelderEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationRule {
    /// `t_n = T q^(n+1)`.
    Geometric(f64),
    /// `t_n = T / (n + 2)`.
    Harmonic,
}

impl TruncationRule {
    /// `geometric:q` or `harmonic`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "harmonic" {
            return Ok(Self::Harmonic);
        }
        if let Some(q) = s.strip_prefix("geometric:") {
            let q: f64 = q.trim().parse().map_err(|_| Error::Parse(format!("bad ratio in `{s}`")))?;
            return Ok(Self::Geometric(q));
        }
        Err(Error::Parse(format!("unknown truncation rule `{s}` (geometric:q | harmonic)")))
    }

    pub fn name(&self) -> String {
        match self {
            Self::Geometric(q) => format!("geometric:{q}"),
            Self::Harmonic => "harmonic".into(),
        }
    }
}

/// Strictly decreasing truncation times in `(0, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSequence {
    pub rule: TruncationRule,
    pub base: f64,
    values: Vec<f64>,
}

impl TruncationSequence {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<f64> {
        self.values
            .get(n)
            .copied()
            .ok_or_else(|| Error::Parameter(format!("n = {n} exceeds n_max = {}", self.n_max())))
    }
}

pub fn build_truncation(rule: TruncationRule, n_max: usize, base: f64) -> Result<TruncationSequence> {
    if n_max < 2 {
        return Err(Error::Parameter(format!("n_max = {n_max} must be at least 2")));
    }
    if !(base > 0.0 && base.is_finite()) {
        return Err(Error::Parameter(format!("horizon T = {base} must be positive")));
    }
    let values = match rule {
        TruncationRule::Geometric(q) => {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Parameter(format!("geometric ratio {q} outside (0, 1)")));
            }
            (0..=n_max).map(|n| base * q.powi(n as i32 + 1)).collect()
        }
        TruncationRule::Harmonic => (0..=n_max).map(|n| base / (n as f64 + 2.0)).collect(),
    };
    Ok(TruncationSequence { rule, base, values })
}

/// Built-in forcings on the cylinder, in absolute time and polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CylinderForcing {
    /// `(1 - r^2)^2`.
    RadialBump,
    /// `(1 - r^2)^2 cos((2k + 1) pi (t - t_n) / (T - t_n))` on each truncated interval.
    Mode(u32),
    Constant(f64),
}

impl CylinderForcing {
    /// `radial-bump`, `mode:k` or `constant` / `constant:c`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "radial-bump" => return Ok(Self::RadialBump),
            "constant" => return Ok(Self::Constant(1.0)),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("mode:") {
            let k = k.trim().parse().map_err(|_| Error::Parse(format!("bad mode index in `{s}`")))?;
            return Ok(Self::Mode(k));
        }
        if let Some(c) = s.strip_prefix("constant:") {
            let c = c.trim().parse().map_err(|_| Error::Parse(format!("bad constant in `{s}`")))?;
            return Ok(Self::Constant(c));
        }
        Err(Error::Parse(format!("unknown forcing `{s}` (radial-bump | mode:k | constant[:c])")))
    }

    pub fn name(&self) -> String {
        match self {
            Self::RadialBump => "radial-bump".into(),
            Self::Mode(k) => format!("mode:{k}"),
            Self::Constant(c) => format!("constant:{c}"),
        }
    }

    /// Value at absolute time `t` on the interval `[start, end]`.
    pub fn eval(&self, t: f64, r: f64, start: f64, end: f64) -> f64 {
        let bump = (1.0 - r * r).powi(2);
        match self {
            Self::RadialBump => bump,
            Self::Mode(k) => bump * ((2 * k + 1) as f64 * PI * (t - start) / (end - start)).cos(),
            Self::Constant(c) => *c,
        }
    }

    /// Samples the forcing on the local grid `[0, end - start]` of a truncated problem.
    pub fn sample(&self, grid: &PolarDiscGrid, local: TimeGrid, start: f64, end: f64) -> TimeGridFunction {
        TimeGridFunction::from_fn(local, grid.len(), |tau, out| {
            for i in 0..grid.nr() {
                let v = self.eval(start + tau, grid.radius(i), start, end);
                for j in 0..grid.ntheta() {
                    out[grid.index(i, j)] = v;
                }
            }
        })
    }
}

/// Spatial grid and the time resolution of the full interval `[0, T]`;
/// truncated problems use `Nt` proportional to `T - t_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitGrids {
    pub disc: PolarDiscGrid,
    pub nt_full: usize,
}

impl LimitGrids {
    pub const MIN_NT: usize = 16;

    pub fn nt_for(&self, t_n: f64, horizon: f64) -> usize {
        ((self.nt_full as f64 * (horizon - t_n) / horizon).round() as usize).max(Self::MIN_NT)
    }
}

/// Solution `v_n` on `[t_n, T]` with the underlying solve.
#[derive(Debug, Clone)]
pub struct TruncatedSolution {
    pub n: usize,
    pub t_n: f64,
    pub v: TimeGridFunction,
    pub solution: AntiperiodicSolution,
}

pub fn solve_truncated(
    seq: &TruncationSequence,
    n: usize,
    param: &CuspParametrization,
    grids: &LimitGrids,
    config: &SolverConfig,
    f: &CylinderForcing,
) -> Result<TruncatedSolution> {
    let run = || -> Result<TruncatedSolution> {
        let t_n = seq.get(n)?;
        let horizon = param.horizon();
        let fam = OperatorFamily::assemble(grids.disc, param.clone(), t_n)?;
        let local = TimeGrid::new(0.0, horizon - t_n, grids.nt_for(t_n, horizon))?;
        let g = f.sample(&grids.disc, local, t_n, horizon);
        let solution = solve_antiperiodic(&fam, config, &g)?;
        let v = solution.w.shifted(t_n);
        Ok(TruncatedSolution { n, t_n, v, solution })
    };
    run().map_err(|e| Error::Truncation { n, source: Box::new(e) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub t_n: f64,
    pub sup_norm: f64,
    /// `max ||v_n - v_{n-1}||` over the nodes of `[t_{n-1}, T]`; `None` for `n = 0`.
    pub cauchy_gap: Option<f64>,
    pub lambda: f64,
    pub report: ResidualReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub const HEADER: &'static str = "n,t_n,sup_norm,cauchy_gap,lambda,bc0,bc1,pde_residual";

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in &self.rows {
            let gap = r.cauchy_gap.map_or_else(|| "nan".to_string(), |g| format!("{g:.16e}"));
            writeln!(
                w,
                "{},{:.16e},{:.16e},{gap},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n, r.t_n, r.sup_norm, r.lambda, r.report.bc0, r.report.bc1, r.report.pde_residual
            )?;
        }
        Ok(())
    }

    pub fn sup_norms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sup_norm).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.cauchy_gap).collect()
    }
}

/// Largest nodal difference of `fine` (interpolated linearly in time) against
/// `coarse` on the nodes of `coarse`.
pub fn cauchy_gap(fine: &TimeGridFunction, coarse: &TimeGridFunction) -> Result<f64> {
    if fine.dim() != coarse.dim() {
        return Err(Error::GridMismatch("solutions live on different spatial grids".into()));
    }
    let (fg, cg) = (fine.grid(), coarse.grid());
    let slack = 1e-12 * cg.length();
    if fg.start() > cg.start() + slack || fg.end() < cg.end() - slack {
        return Err(Error::GridMismatch(format!(
            "[{}, {}] does not cover [{}, {}]",
            fg.start(),
            fg.end(),
            cg.start(),
            cg.end()
        )));
    }
    let mut buf = vec![0.0; fine.dim()];
    let mut gap = 0.0_f64;
    for k in 0..cg.len() {
        fine.interpolate(cg.node(k), &mut buf);
        gap = buf.iter().zip(coarse.node(k)).fold(gap, |m, (a, b)| m.max((a - b).abs()));
    }
    Ok(gap)
}

/// Solves for every `n` with one shift shared by all truncations. Without a
/// fixed `lambda` in `config` the shift is searched on the most singular
/// truncation `t_{n_max}` and reused for the others.
pub fn convergence_study(
    seq: &TruncationSequence,
    param: &CuspParametrization,
    grids: &LimitGrids,
    config: &SolverConfig,
    f: &CylinderForcing,
) -> Result<ConvergenceTable> {
    let mut config = config.clone();
    if config.lambda.is_none() {
        let n = seq.n_max();
        let t_n = seq.get(n)?;
        let fam = OperatorFamily::assemble(grids.disc, param.clone(), t_n).stage("lambda_search")?;
        let local = TimeGrid::new(0.0, param.horizon() - t_n, grids.nt_for(t_n, param.horizon()))?;
        let (lambda, _) = select_lambda_star(
            &fam,
            &config.contour,
            local,
            config.lambda_init,
            config.growth,
            config.target,
            config.n_probes,
            config.seed,
            config.formulation,
        )
        .map_err(|e| Error::Truncation { n, source: Box::new(e) })?;
        config.lambda = Some(lambda);
    }
    let mut table = ConvergenceTable::default();
    let mut prev: Option<TimeGridFunction> = None;
    for n in 0..=seq.n_max() {
        let sol = solve_truncated(seq, n, param, grids, &config, f)?;
        let cauchy_gap = match &prev {
            Some(p) => Some(cauchy_gap(&sol.v, p)?),
            None => None,
        };
        table.rows.push(ConvergenceRow {
            n,
            t_n: sol.t_n,
            sup_norm: sol.v.sup_norm(),
            cauchy_gap,
            lambda: sol.solution.lambda,
            report: sol.solution.report,
        });
        prev = Some(sol.v);
    }
    Ok(table)
}

/// Cone samples of a truncated solution and its weighted regularity.
#[derive(Debug, Clone)]
pub struct ConeReconstruction {
    /// `(t, x, y, u)` at every space-time node.
    pub samples: Vec<[f64; 4]>,
    /// `(t, max sqrt(x^2 + y^2))` per time node.
    pub section_radii: Vec<(f64, f64)>,
    /// Weighted Hölder estimate of `d^2 v / dt^2` (interior nodes).
    pub dtt: HoelderEstimate,
    /// Weighted Hölder estimate of `phi^-2 Delta_xi v - lambda v`, the cone
    /// Laplacian pulled back to the cylinder.
    pub laplacian: HoelderEstimate,
}

/// `u(t, phi(t) xi, phi(t) eta) = v(t, xi, eta)` on the nodes of `v`
/// (absolute times), with the weighted estimates of `d^2 v/dt^2` and
/// `(Delta - lambda) v`.
pub fn reconstruct_on_cone(
    v: &TimeGridFunction,
    grid: &PolarDiscGrid,
    param: &CuspParametrization,
    lambda: f64,
    theta2: f64,
) -> Result<ConeReconstruction> {
    if v.dim() != grid.len() {
        return Err(Error::GridMismatch(format!("field of dimension {} on a grid of {} nodes", v.dim(), grid.len())));
    }
    let tg = *v.grid();
    if tg.intervals() < 4 {
        return Err(Error::Parameter("need at least 4 time intervals".into()));
    }
    let mut samples = Vec::with_capacity(tg.len() * grid.len());
    let mut section_radii = Vec::with_capacity(tg.len());
    for k in 0..tg.len() {
        let t = tg.node(k);
        let mut rmax = 0.0_f64;
        for ((xi, eta), u) in grid.cartesian_nodes().zip(v.node(k)) {
            let c = param.to_cone(CylinderPoint::new(t, xi, eta)?)?;
            rmax = rmax.max(c.x.hypot(c.y));
            samples.push([t, c.x, c.y, *u]);
        }
        section_radii.push((t, rmax));
    }
    let frozen = OperatorFamily::frozen(*grid, tg.length())?;
    let lap = frozen.laplacian_matrix();
    let inner = TimeGrid::new(tg.node(1), tg.node(tg.intervals() - 1), tg.intervals() - 2)?;
    let h2 = tg.step() * tg.step();
    let d = v.dim();
    let mut dtt = TimeGridFunction::zeros(inner, d);
    let mut lv = TimeGridFunction::zeros(inner, d);
    let mut buf = vec![0.0; d];
    for k in 1..tg.intervals() {
        let (lo, mid, hi) = (v.node(k - 1), v.node(k), v.node(k + 1));
        for (r, out) in dtt.node_mut(k - 1).iter_mut().enumerate() {
            *out = (lo[r] - 2.0 * mid[r] + hi[r]) / h2;
        }
        let phi = param.phi(tg.node(k))?;
        if phi <= 0.0 {
            return Err(Error::SingularApex { t: tg.node(k) });
        }
        lap.apply(mid, &mut buf);
        for ((out, l), m) in lv.node_mut(k - 1).iter_mut().zip(&buf).zip(mid) {
            *out = l / (phi * phi) - lambda * m;
        }
    }
    Ok(ConeReconstruction {
        samples,
        section_radii,
        dtt: holder_seminorm(&dtt, theta2, Some(param))?,
        laplacian: holder_seminorm(&lv, theta2, Some(param))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences() {
        let g = build_truncation(TruncationRule::Geometric(0.5), 3, 1.0).unwrap();
        assert_eq!(g.values(), &[0.5, 0.25, 0.125, 0.0625]);
        let h = build_truncation(TruncationRule::Harmonic, 3, 1.0).unwrap();
        assert_eq!(h.values(), &[0.5, 1.0 / 3.0, 0.25, 0.2]);
        assert!(build_truncation(TruncationRule::Geometric(1.5), 3, 1.0).is_err());
        assert!(build_truncation(TruncationRule::Harmonic, 1, 1.0).is_err());
        assert_eq!(TruncationRule::parse("geometric:0.5").unwrap(), TruncationRule::Geometric(0.5));
    }

    #[test]
    fn gap_of_identical_functions_is_zero() {
        let fine = TimeGridFunction::from_fn(TimeGrid::new(0.25, 1.0, 30).unwrap(), 2, |t, o| {
            o[0] = t;
            o[1] = 2.0 * t;
        });
        let coarse = TimeGridFunction::from_fn(TimeGrid::new(0.5, 1.0, 7).unwrap(), 2, |t, o| {
            o[0] = t;
            o[1] = 2.0 * t;
        });
        assert!(cauchy_gap(&fine, &coarse).unwrap() < 1e-15);
        assert!(cauchy_gap(&coarse, &fine).is_err());
    }

    #[test]
    fn cone_sections_have_radius_phi() {
        let grid = PolarDiscGrid::new(6, 8).unwrap();
        let param = CuspParametrization::power(2.0, 1.0).unwrap();
        let v = TimeGridFunction::from_fn(TimeGrid::new(0.5, 1.0, 8).unwrap(), grid.len(), |_, o| o.fill(1.0));
        let rec = reconstruct_on_cone(&v, &grid, &param, 1.0, 0.5).unwrap();
        let r_last = grid.radius(grid.nr() - 1);
        for (t, r) in rec.section_radii {
            assert!((r - t * t * r_last).abs() < 1e-14);
        }
        assert_eq!(rec.dtt.seminorm, 0.0);
    }
}
