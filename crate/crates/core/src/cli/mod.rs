//! Command orchestration: every command writes its CSVs and a manifest into
//! the output directory and reports the checks it ran.

mod config;
mod plot;

pub use config::{Mode, RunConfig};
pub use plot::{emit_plot_data, KernelTable, PlotKind, PlotTable};

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::abstract_solver::{
    estimate_r_lambda_norm_with, solve_antiperiodic, write_solution_csv, AntiperiodicSolution, EvolutionFamily,
    ScalarFamily, SolverConfig, TimeGrid, TimeGridFunction,
};
use crate::disc_operator::{verify_hypotheses, OperatorFamily, PolarDiscGrid};
use crate::error::{Error, Result};
use crate::golden;
use crate::limit_scheme::{build_truncation, convergence_study, LimitGrids};
use crate::oracle::{
    compare_solutions, family_monolithic, monolithic_solve, scalar_closed_form, ScalarForcing, ScalarModel,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const USAGE: &str = "usage: cuspcone <solve | verify-hypotheses | sweep-lambda | converge-tn | oracle-compare | kernel-table> \
[--config PATH] [--out DIR] [--threads N] [--seed U64] [--lambda X] [--lambdas a,b,c] [--nmax N]";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    VerifyHypotheses,
    SweepLambda,
    ConvergeTn,
    OracleCompare,
    KernelTable,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Self::Solve,
        Self::VerifyHypotheses,
        Self::SweepLambda,
        Self::ConvergeTn,
        Self::OracleCompare,
        Self::KernelTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::VerifyHypotheses => "verify-hypotheses",
            Self::SweepLambda => "sweep-lambda",
            Self::ConvergeTn => "converge-tn",
            Self::OracleCompare => "oracle-compare",
            Self::KernelTable => "kernel-table",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown command `{s}`")))
    }
}

/// Outcome of one embedded check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound: format!("<= {bound:e}"), passed: value <= bound }
    }

    fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), passed: value >= lo && value <= hi }
    }
}

/// Everything recorded about one run.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: String,
    pub timings: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# cuspcone {VERSION}\ncommand = {}\nstatus = {}", self.command, status(self.passed()));
        let _ = writeln!(s, "\n[config]\n{}", self.config_echo.trim_end());
        let _ = writeln!(s, "\n[timings_seconds]");
        for (stage, t) in &self.timings {
            let _ = writeln!(s, "{stage} = {t:.3}");
        }
        let _ = writeln!(s, "\n[checks]");
        for c in &self.checks {
            let _ = writeln!(s, "{} = {:.16e} ({}) {}", c.name, c.value, c.bound, status(c.passed));
        }
        let _ = writeln!(s, "\n[golden]");
        for e in golden::ledger() {
            let _ = writeln!(s, "{} = {:.16e} # {}", e.name, e.value, e.oracle);
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\n[notes]");
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        let _ = writeln!(s, "\n[files]");
        for f in &self.files {
            let _ = writeln!(s, "{}", f.display());
        }
        s
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    manifest: RunManifest,
    clock: Instant,
}

impl Run<'_> {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.manifest.timings.push((stage.into(), (now - self.clock).as_secs_f64()));
        self.clock = now;
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.cfg.out.join(name);
        self.manifest.files.push(PathBuf::from(name));
        Ok(BufWriter::new(File::create(path)?))
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = self.create(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Runs `cmd`, writing files and `manifest.txt` into `cfg.out`.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<RunManifest> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let mut run = Run {
        cfg,
        manifest: RunManifest { command: cmd.name().into(), config_echo: cfg.echo(), ..Default::default() },
        clock: Instant::now(),
    };
    match cmd {
        Command::Solve => solve(&mut run),
        Command::VerifyHypotheses => hypotheses(&mut run),
        Command::SweepLambda => sweep(&mut run),
        Command::ConvergeTn => converge(&mut run),
        Command::OracleCompare => compare(&mut run),
        Command::KernelTable => kernel(&mut run),
    }?;
    run.manifest.files.push(PathBuf::from("manifest.txt"));
    fs::write(cfg.out.join("manifest.txt"), run.manifest.render())?;
    Ok(run.manifest)
}

/// The scalar model of a config; the radial bump reduces to its centre value 1.
pub fn scalar_model(cfg: &RunConfig, lambda: f64) -> Result<ScalarModel> {
    let forcing = match cfg.forcing {
        crate::limit_scheme::CylinderForcing::Mode(k) => ScalarForcing::Mode(k),
        crate::limit_scheme::CylinderForcing::Constant(c) => ScalarForcing::Constant(c),
        crate::limit_scheme::CylinderForcing::RadialBump => ScalarForcing::Constant(1.0),
    };
    ScalarModel::new(cfg.scalar_a, lambda, cfg.horizon - cfg.t_n, forcing)
}

/// Disc family on `[t_n, T]` (frozen or transformed) and the sampled forcing.
pub fn disc_problem(cfg: &RunConfig) -> Result<(OperatorFamily, TimeGridFunction)> {
    let grid = PolarDiscGrid::new(cfg.nr, cfg.ntheta)?;
    let len = cfg.horizon - cfg.t_n;
    let fam = match cfg.mode {
        Mode::Frozen => OperatorFamily::frozen(grid, len)?,
        _ => OperatorFamily::assemble(grid, cfg.param()?, cfg.t_n)?,
    };
    let local = TimeGrid::new(0.0, len, cfg.solver.nt)?;
    Ok((fam, cfg.forcing.sample(&grid, local, cfg.t_n, cfg.horizon)))
}

/// The scalar model supplies the forcing and, without a slope, the closed form.
fn scalar_problem(cfg: &RunConfig) -> Result<(ScalarModel, ScalarFamily, TimeGridFunction)> {
    let model = scalar_model(cfg, cfg.solver.lambda.unwrap_or(1.0))?;
    let fam = ScalarFamily::polynomial(vec![cfg.scalar_a, cfg.scalar_slope], model.length)?;
    let g = model.forcing_on(TimeGrid::new(0.0, model.length, cfg.solver.nt)?);
    Ok((model, fam, g))
}

fn residual_checks(run: &mut Run<'_>, sol: &AntiperiodicSolution) {
    let r = &sol.report;
    let c = &mut run.manifest.checks;
    c.push(Check::at_most("bc0_rel", r.bc0_rel, 1e-6));
    c.push(Check::at_most("bc1_rel", r.bc1_rel, 1e-6));
    c.push(Check::at_most("pde_residual_rel", r.pde_residual_rel, 5e-3));
    c.push(Check::at_most("fixed_point_certificate", r.fixed_point_gap, 2.0 * run.cfg.solver.tol * r.g_norm.max(1e-300)));
}

fn solve(run: &mut Run<'_>) -> Result<()> {
    let cfg = run.cfg;
    let (sol, ntheta) = if cfg.mode == Mode::Scalar {
        let (model, fam, g) = scalar_problem(cfg)?;
        let solver = SolverConfig { lambda: Some(model.lambda), ..cfg.solver.clone() };
        let sol = solve_antiperiodic(&fam, &solver, &g)?;
        let grid = *sol.w.grid();
        if cfg.scalar_slope == 0.0 {
            let err = (0..grid.len())
                .map(|k| (sol.w.node(k)[0] - scalar_closed_form(&model, grid.node(k))).abs())
                .fold(0.0, f64::max);
            run.manifest.checks.push(Check::at_most("closed_form_discrepancy", err, 1e-6));
        }
        (sol, 1)
    } else {
        let (fam, g) = disc_problem(cfg)?;
        (solve_antiperiodic(&fam, &cfg.solver, &g)?, cfg.ntheta)
    };
    run.lap("solve");
    residual_checks(run, &sol);
    run.manifest.notes.push(format!("lambda = {:.16e}, iterations = {}", sol.lambda, sol.iterations));
    for (l, e) in &sol.audit {
        run.manifest.notes.push(format!("lambda_search {l:.16e} -> {e:.16e}"));
    }
    let w = sol.w.shifted(cfg.t_n);
    run.write("solution.csv", |f| write_solution_csv(f, &w, ntheta))?;
    run.write("residuals.csv", |f| sol.report.write_csv(f))?;
    run.lap("write");
    Ok(())
}

fn hypotheses(run: &mut Run<'_>) -> Result<()> {
    let cfg = run.cfg;
    if cfg.mode == Mode::Scalar {
        return Err(Error::Parameter("verify-hypotheses needs mode = frozen or disc".into()));
    }
    let (fam, _) = disc_problem(cfg)?;
    let lambda = cfg.solver.lambda.unwrap_or(0.0);
    let rep = verify_hypotheses(&fam, lambda, &cfg.z_probes, &cfg.t_probes, cfg.solver.theta2)?;
    run.lap("probe");
    let c = &mut run.manifest.checks;
    if cfg.mode == Mode::Frozen {
        c.push(Check::within("M_est", rep.m_est, 0.9, 1.1));
        c.push(Check::at_most("C1_est", rep.c1_est, 0.0));
        c.push(Check::at_most("C2_est", rep.c2_est, 0.0));
    } else {
        for (name, v) in [("M_est", rep.m_est), ("C1_est", rep.c1_est), ("C2_est", rep.c2_est)] {
            c.push(Check::at_most(name, v, f64::MAX));
        }
    }
    run.write("hypotheses.csv", |f| rep.write_csv(f))?;
    Ok(())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(rows: &[(f64, f64)]) -> f64 {
    let n = rows.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = rows.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest ratio of each estimate to the `C / lambda` prediction from its predecessor.
pub fn decay_excess(rows: &[(f64, f64)]) -> f64 {
    rows.windows(2).map(|w| w[1].1 / (w[0].1 * w[0].0 / w[1].0)).fold(0.0, f64::max)
}

/// `(lambda, ||R_lambda||)` estimates for every shift in the list.
pub fn lambda_sweep<F: EvolutionFamily + ?Sized>(fam: &F, cfg: &RunConfig, grid: TimeGrid) -> Result<Vec<(f64, f64)>> {
    let s = &cfg.solver;
    cfg.lambdas
        .iter()
        .map(|&l| {
            let quad = s.contour.build(l, fam.length())?;
            let est = estimate_r_lambda_norm_with(fam, &quad, l, grid, s.n_probes, s.seed, s.formulation)?;
            Ok((l, est))
        })
        .collect()
}

fn sweep(run: &mut Run<'_>) -> Result<()> {
    let cfg = run.cfg;
    let rows = if cfg.mode == Mode::Scalar {
        let (_, fam, g) = scalar_problem(cfg)?;
        lambda_sweep(&fam, cfg, *g.grid())?
    } else {
        let (fam, g) = disc_problem(cfg)?;
        lambda_sweep(&fam, cfg, *g.grid())?
    };
    run.lap("sweep");
    if rows.len() >= 2 {
        let slope = loglog_slope(&rows);
        run.manifest.checks.push(Check::within("loglog_slope", slope, -1.3, -0.7));
        run.manifest.checks.push(Check::at_most("decay_excess", decay_excess(&rows), 1.1));
    }
    run.write(PlotKind::LambdaDecay.file_name(), |f| emit_plot_data(&PlotTable::LambdaDecay(&rows), f))?;
    Ok(())
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 0 {
        0.5 * (s[m - 1] + s[m])
    } else {
        s[m]
    }
}

/// `last / median` of the sup-norm column.
pub fn bound_ratio(sup_norms: &[f64]) -> f64 {
    sup_norms.last().copied().unwrap_or(0.0) / median(sup_norms).max(f64::MIN_POSITIVE)
}

/// Largest `gap(n) / gap(n - 1)` for `n >= 3` (gaps indexed from `n = 1`).
pub fn gap_growth(gaps: &[f64]) -> f64 {
    (2..gaps.len()).map(|k| gaps[k] / gaps[k - 1].max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}

fn converge(run: &mut Run<'_>) -> Result<()> {
    let cfg = run.cfg;
    if cfg.mode != Mode::Disc {
        return Err(Error::Parameter("converge-tn needs mode = disc".into()));
    }
    let param = cfg.param()?;
    let seq = build_truncation(cfg.tn_rule, cfg.n_max, cfg.horizon)?;
    let grids = LimitGrids { disc: PolarDiscGrid::new(cfg.nr, cfg.ntheta)?, nt_full: cfg.solver.nt };
    let table = convergence_study(&seq, &param, &grids, &cfg.solver, &cfg.forcing)?;
    run.lap("study");
    run.manifest.checks.push(Check::at_most("sup_norm_last_over_median", bound_ratio(&table.sup_norms()), 1.25));
    run.manifest.checks.push(Check::at_most("cauchy_gap_growth", gap_growth(&table.gaps()), 1.1));
    run.write("convergence.csv", |f| table.write_csv(f))?;
    run.write(PlotKind::TnConvergence.file_name(), |f| emit_plot_data(&PlotTable::TnConvergence(&table), f))?;
    Ok(())
}

fn compare(run: &mut Run<'_>) -> Result<()> {
    let cfg = run.cfg;
    let (sol, mono) = if cfg.mode == Mode::Scalar {
        let (model, fam, g) = scalar_problem(cfg)?;
        let solver = SolverConfig { lambda: Some(model.lambda), ..cfg.solver.clone() };
        let sol = solve_antiperiodic(&fam, &solver, &g)?;
        let mono = family_monolithic(&fam, sol.lambda, &g)?;
        (sol, mono)
    } else {
        let (fam, g) = disc_problem(cfg)?;
        let sol = solve_antiperiodic(&fam, &cfg.solver, &g)?;
        run.lap("representation");
        let mono = monolithic_solve(&fam, sol.lambda, &g)?;
        (sol, mono)
    };
    run.lap("direct");
    let rel = compare_solutions(&sol.w, &mono.v)?;
    run.manifest.checks.push(Check::at_most("relative_discrepancy", rel, 0.05));
    let rows = [
        ("lambda", sol.lambda),
        ("relative_discrepancy", rel),
        ("backward_error", mono.backward_error),
        ("bc0_rel", sol.report.bc0_rel),
        ("bc1_rel", sol.report.bc1_rel),
        ("pde_residual_rel", sol.report.pde_residual_rel),
    ];
    run.write("oracle.csv", |f| {
        writeln!(f, "quantity,value")?;
        for (q, v) in rows {
            writeln!(f, "{q},{v:.16e}")?;
        }
        Ok(())
    })?;
    Ok(())
}

fn kernel(run: &mut Run<'_>) -> Result<()> {
    let cfg = run.cfg;
    let table = KernelTable::new(cfg.kernel_z, cfg.horizon, cfg.kernel_n)?;
    run.manifest.checks.push(Check::at_most("kernel_asymmetry", table.asymmetry(), 1e-14));
    run.write(PlotKind::KernelHeatmap.file_name(), |f| emit_plot_data(&PlotTable::KernelHeatmap(&table), f))?;
    Ok(())
}

/// Reads a config file, or the defaults when `path` is `None`.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::parse(&fs::read_to_string(p)?),
        None => Ok(RunConfig::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(Command::parse(c.name()).unwrap(), c);
        }
        assert!(Command::parse("bogus").is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let rows: Vec<(f64, f64)> = [10.0, 20.0, 40.0].iter().map(|l| (*l, 3.0 / l)).collect();
        assert!((loglog_slope(&rows) + 1.0).abs() < 1e-12);
        assert!((decay_excess(&rows) - 1.0).abs() < 1e-12);
        assert_eq!(bound_ratio(&[1.0, 2.0, 3.0]), 1.5);
        assert_eq!(gap_growth(&[1.0, 0.5, 0.25, 0.3]), 1.2);
    }
}
