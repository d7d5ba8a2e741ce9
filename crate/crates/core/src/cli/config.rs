//! Flat `key = value` run configuration.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::abstract_solver::{Formulation, SolverConfig};
use crate::contour::ContourConfig;
use crate::error::{Error, Result};
use crate::geometry::CuspParametrization;
use crate::limit_scheme::{CylinderForcing, TruncationRule};

/// Which operator family a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One-dimensional model `A = -a`.
    Scalar,
    /// Constant coefficients on the disc.
    Frozen,
    /// Transformed cone operator.
    Disc,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "scalar" => Ok(Self::Scalar),
            "frozen" => Ok(Self::Frozen),
            "disc" => Ok(Self::Disc),
            other => Err(Error::Parse(format!("unknown mode `{other}` (scalar | frozen | disc)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Scalar => "scalar",
            Self::Frozen => "frozen",
            Self::Disc => "disc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub mode: Mode,
    pub phi: String,
    pub horizon: f64,
    /// Lower end of the interval for single solves.
    pub t_n: f64,
    pub nr: usize,
    pub ntheta: usize,
    pub tn_rule: TruncationRule,
    pub n_max: usize,
    pub forcing: CylinderForcing,
    /// Scalar model coefficient `a(t) = scalar_a + scalar_slope t`.
    pub scalar_a: f64,
    pub scalar_slope: f64,
    pub lambdas: Vec<f64>,
    pub z_probes: Vec<f64>,
    pub t_probes: Vec<f64>,
    /// Spectral point of the kernel table.
    pub kernel_z: f64,
    pub kernel_n: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            mode: Mode::Disc,
            phi: "power:2".into(),
            horizon: 1.0,
            t_n: 0.25,
            nr: 16,
            ntheta: 24,
            tn_rule: TruncationRule::Geometric(0.5),
            n_max: 6,
            forcing: CylinderForcing::RadialBump,
            scalar_a: 0.0,
            scalar_slope: 0.0,
            lambdas: vec![10.0, 20.0, 40.0, 80.0],
            z_probes: vec![0.0, 1.0, 10.0, 100.0, 1000.0],
            t_probes: vec![0.0, 0.25, 0.5],
            kernel_z: -1.0,
            kernel_n: 33,
            out: PathBuf::from("out"),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| num(key, x.trim())).collect()
}

fn optional(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" || v == "none" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", no + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let s = &mut self.solver;
        let ct: &mut ContourConfig = &mut s.contour;
        match key {
            "mode" => self.mode = Mode::parse(v)?,
            "phi" => self.phi = v.to_string(),
            "horizon" => self.horizon = num(key, v)?,
            "t_n" => self.t_n = num(key, v)?,
            "nr" => self.nr = num(key, v)?,
            "ntheta" => self.ntheta = num(key, v)?,
            "nt" => s.nt = num(key, v)?,
            "tn_rule" => self.tn_rule = TruncationRule::parse(v)?,
            "n_max" => self.n_max = num(key, v)?,
            "forcing" => self.forcing = CylinderForcing::parse(v)?,
            "scalar_a" => self.scalar_a = num(key, v)?,
            "scalar_slope" => self.scalar_slope = num(key, v)?,
            "lambda" => s.lambda = optional(key, v)?,
            "lambdas" => self.lambdas = list(key, v)?,
            "z_probes" => self.z_probes = list(key, v)?,
            "t_probes" => self.t_probes = list(key, v)?,
            "kernel_z" => self.kernel_z = num(key, v)?,
            "kernel_n" => self.kernel_n = num(key, v)?,
            "theta2" => s.theta2 = num(key, v)?,
            "tol" => s.tol = num(key, v)?,
            "max_iter" => s.max_iter = num(key, v)?,
            "lambda_init" => s.lambda_init = num(key, v)?,
            "growth" => s.growth = num(key, v)?,
            "target" => s.target = num(key, v)?,
            "n_probes" => s.n_probes = num(key, v)?,
            "seed" => s.seed = num(key, v)?,
            "formulation" => s.formulation = Formulation::parse(v)?,
            "delta0" => ct.delta0 = num(key, v)?,
            "delta0_over_pi" => ct.delta0 = PI * num::<f64>(key, v)?,
            "r0" => ct.r0 = optional(key, v)?,
            "rmax" => ct.rmax = optional(key, v)?,
            "n_ray" => ct.n_ray = num(key, v)?,
            "n_arc" => ct.n_arc = num(key, v)?,
            "tail_tol" => ct.tail_tol = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(Error::Parse(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.param()?;
        if !(self.t_n >= 0.0 && self.t_n < self.horizon) {
            return Err(Error::Parameter(format!("t_n = {} outside [0, T)", self.t_n)));
        }
        if self.nr < 2 || self.ntheta < 4 || self.n_max < 2 || self.kernel_n < 2 {
            return Err(Error::Parameter("need nr >= 2, ntheta >= 4, n_max >= 2, kernel_n >= 2".into()));
        }
        if self.lambdas.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::Parameter("lambdas must be positive".into()));
        }
        Ok(())
    }

    pub fn param(&self) -> Result<CuspParametrization> {
        CuspParametrization::parse(&self.phi, self.horizon)
    }

    /// Canonical `key = value` echo of every field.
    pub fn echo(&self) -> String {
        let s = &self.solver;
        let ct = &s.contour;
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| format!("{x:?}"));
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let rows = [
            ("mode", self.mode.name().to_string()),
            ("phi", self.phi.clone()),
            ("horizon", format!("{:?}", self.horizon)),
            ("t_n", format!("{:?}", self.t_n)),
            ("nr", self.nr.to_string()),
            ("ntheta", self.ntheta.to_string()),
            ("nt", s.nt.to_string()),
            ("tn_rule", self.tn_rule.name()),
            ("n_max", self.n_max.to_string()),
            ("forcing", self.forcing.name()),
            ("scalar_a", format!("{:?}", self.scalar_a)),
            ("scalar_slope", format!("{:?}", self.scalar_slope)),
            ("lambda", opt(s.lambda)),
            ("lambdas", join(&self.lambdas)),
            ("z_probes", join(&self.z_probes)),
            ("t_probes", join(&self.t_probes)),
            ("kernel_z", format!("{:?}", self.kernel_z)),
            ("kernel_n", self.kernel_n.to_string()),
            ("theta2", format!("{:?}", s.theta2)),
            ("tol", format!("{:?}", s.tol)),
            ("max_iter", s.max_iter.to_string()),
            ("lambda_init", format!("{:?}", s.lambda_init)),
            ("growth", format!("{:?}", s.growth)),
            ("target", format!("{:?}", s.target)),
            ("n_probes", s.n_probes.to_string()),
            ("seed", s.seed.to_string()),
            ("formulation", s.formulation.name().to_string()),
            ("delta0", format!("{:?}", ct.delta0)),
            ("r0", opt(ct.r0)),
            ("rmax", opt(ct.rmax)),
            ("n_ray", ct.n_ray.to_string()),
            ("n_arc", ct.n_arc.to_string()),
            ("tail_tol", format!("{:?}", ct.tail_tol)),
            ("out", self.out.display().to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_echo_round_trip() {
        let c = RunConfig::parse("# test\nmode = scalar\nlambda = 2.5 # shift\nlambdas = 1, 2\nformulation = source\n").unwrap();
        assert_eq!(c.mode, Mode::Scalar);
        assert_eq!(c.solver.lambda, Some(2.5));
        assert_eq!(c.lambdas, vec![1.0, 2.0]);
        assert_eq!(RunConfig::parse(&c.echo()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("nonsense").is_err());
        assert!(RunConfig::parse("unknown = 1").is_err());
        assert!(RunConfig::parse("nr = x").is_err());
        assert!(RunConfig::parse("phi = cube").is_err());
        assert!(RunConfig::parse("t_n = 2").is_err());
    }
}
