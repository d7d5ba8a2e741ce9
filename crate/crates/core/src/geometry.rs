//! The cusped cone, its flattening onto the unit cylinder, and Hölder
//! seminorm estimation for time series of grid functions.
//!
//! The cone has cross-sections `Omega(t) = { x^2 + y^2 <= phi(t)^2 }` with
//! `phi(0) = phi'(0) = 0`. The map `(t, x, y) -> (t, x / phi(t), y / phi(t))`
//! sends it onto `[0, T] x D` with `D` the unit disc.

use std::io::{BufRead, Write};

use crate::abstract_solver::{TimeGrid, TimeGridFunction};
use crate::disc_operator::PolarDiscGrid;
use crate::error::{Error, Result};

const MEMBERSHIP_TOL: f64 = 1e-12;

/// Values of the profile and its first three derivatives at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValues {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Tabulated profile `(t, phi, phi', phi'')`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    t: Vec<f64>,
    phi: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(t: Vec<f64>, phi: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 2 || phi.len() != n || d1.len() != n || d2.len() != n {
            return Err(Error::Parameter("tabulated profile needs >= 2 rows of equal length".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("tabulated times must be strictly increasing".into()));
        }
        if t.iter().chain(&phi).chain(&d1).chain(&d2).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("tabulated profile has non-finite entries".into()));
        }
        Ok(Self { t, phi, d1, d2 })
    }

    fn eval(&self, t: f64) -> ProfileValues {
        let n = self.t.len();
        let k = match self.t.iter().position(|&tk| tk > t) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => n - 2,
        }
        .min(n - 2);
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let lerp = |c: &[f64]| (1.0 - s) * c[k] + s * c[k + 1];
        ProfileValues {
            phi: lerp(&self.phi),
            d1: lerp(&self.d1),
            d2: lerp(&self.d2),
            d3: (self.d2[k + 1] - self.d2[k]) / h,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CuspFamily {
    /// `phi(t) = t^p`, `p >= 2`.
    Power(f64),
    /// `phi(t) = exp(-1/t)`, extended by `phi(0) = 0`.
    ExpCusp,
    Tabulated(TabulatedProfile),
}

/// Cone profile `phi` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspParametrization {
    family: CuspFamily,
    horizon: f64,
}

impl CuspParametrization {
    pub fn new(family: CuspFamily, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Parameter(format!("horizon T = {horizon} must be positive")));
        }
        if let CuspFamily::Power(p) = family {
            if !(p.is_finite() && p >= 2.0) {
                return Err(Error::Parameter(format!("power family needs p >= 2, got {p}")));
            }
        }
        if let CuspFamily::Tabulated(tab) = &family {
            let last = *tab.t.last().unwrap_or(&0.0);
            if tab.t[0] > 0.0 || last < horizon {
                return Err(Error::Parameter("tabulated profile must cover [0, T]".into()));
            }
        }
        Ok(Self { family, horizon })
    }

    pub fn power(p: f64, horizon: f64) -> Result<Self> {
        Self::new(CuspFamily::Power(p), horizon)
    }

    pub fn exp_cusp(horizon: f64) -> Result<Self> {
        Self::new(CuspFamily::ExpCusp, horizon)
    }

    /// Parses `"power:<p>"` or `"exp"`.
    pub fn parse(selector: &str, horizon: f64) -> Result<Self> {
        let s = selector.trim();
        if s == "exp" || s == "exp_cusp" {
            return Self::exp_cusp(horizon);
        }
        if let Some(p) = s.strip_prefix("power:") {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad power exponent in `{selector}`")))?;
            return Self::power(p, horizon);
        }
        if s == "power" {
            return Self::power(2.0, horizon);
        }
        Err(Error::Parse(format!("unknown parametrization `{selector}` (expected power:<p> or exp)")))
    }

    pub fn family(&self) -> &CuspFamily {
        &self.family
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn selector(&self) -> String {
        match &self.family {
            CuspFamily::Power(p) => format!("power:{p}"),
            CuspFamily::ExpCusp => "exp".into(),
            CuspFamily::Tabulated(_) => "tabulated".into(),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-14)) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// `(phi, phi', phi'')` at `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        let v = self.values(t)?;
        Ok((v.phi, v.d1, v.d2))
    }

    /// Profile and derivatives up to third order at `t` in `[0, T]`.
    pub fn values(&self, t: f64) -> Result<ProfileValues> {
        self.check_time(t)?;
        Ok(self.values_unchecked(t))
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        Ok(self.values(t)?.phi)
    }

    pub(crate) fn values_unchecked(&self, t: f64) -> ProfileValues {
        match &self.family {
            CuspFamily::Power(p) => {
                let p = *p;
                let mono = |c: f64, e: f64| if c == 0.0 { 0.0 } else { c * t.powf(e) };
                ProfileValues {
                    phi: t.powf(p),
                    d1: mono(p, p - 1.0),
                    d2: mono(p * (p - 1.0), p - 2.0),
                    d3: mono(p * (p - 1.0) * (p - 2.0), p - 3.0),
                }
            }
            CuspFamily::ExpCusp => {
                if t <= 0.0 {
                    return ProfileValues { phi: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 };
                }
                let u = 1.0 / t;
                let e = (-u).exp();
                ProfileValues {
                    phi: e,
                    d1: e * u * u,
                    d2: e * (u.powi(4) - 2.0 * u.powi(3)),
                    d3: e * (u.powi(6) - 6.0 * u.powi(5) + 6.0 * u.powi(4)),
                }
            }
            CuspFamily::Tabulated(tab) => tab.eval(t),
        }
    }

    /// Cone section -> unit cylinder.
    pub fn to_cylinder(&self, p: ConePoint) -> Result<CylinderPoint> {
        self.check_time(p.t)?;
        let phi = self.values_unchecked(p.t).phi;
        if phi <= 0.0 {
            return Err(Error::SingularApex { t: p.t });
        }
        CylinderPoint::new(p.t, p.x / phi, p.y / phi)
    }

    /// Unit cylinder -> cone section.
    pub fn to_cone(&self, p: CylinderPoint) -> Result<ConePoint> {
        self.check_time(p.t)?;
        let phi = self.values_unchecked(p.t).phi;
        Ok(ConePoint { t: p.t, x: phi * p.xi, y: phi * p.eta })
    }

    /// Checked constructor for a point of the cone.
    pub fn cone_point(&self, t: f64, x: f64, y: f64) -> Result<ConePoint> {
        self.check_time(t)?;
        let phi = self.values_unchecked(t).phi;
        if x * x + y * y > phi * phi + MEMBERSHIP_TOL {
            return Err(Error::Domain(format!("({x}, {y}) lies outside Omega({t}) of radius {phi}")));
        }
        Ok(ConePoint { t, x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPoint {
    pub t: f64,
    pub xi: f64,
    pub eta: f64,
}

impl CylinderPoint {
    pub fn new(t: f64, xi: f64, eta: f64) -> Result<Self> {
        if xi * xi + eta * eta > 1.0 + MEMBERSHIP_TOL {
            return Err(Error::Domain(format!("({xi}, {eta}) lies outside the unit disc")));
        }
        Ok(Self { t, xi, eta })
    }
}

/// Pulls a cone field back to the cylinder: `f(t, xi, eta) = h(t, phi(t) xi, phi(t) eta)`,
/// sampled at the nodes of `grid` and `times` (absolute times).
pub fn transform_field(
    param: &CuspParametrization,
    h: impl Fn(f64, f64, f64) -> f64,
    grid: &PolarDiscGrid,
    times: TimeGrid,
) -> Result<TimeGridFunction> {
    let mut out = TimeGridFunction::zeros(times, grid.len());
    for k in 0..times.len() {
        let t = times.node(k);
        let node = out.node_mut(k);
        for (idx, (xi, eta)) in grid.cartesian_nodes().enumerate() {
            let c = param.to_cone(CylinderPoint::new(t, xi, eta)?)?;
            let c = param.cone_point(c.t, c.x, c.y)?;
            let v = h(c.t, c.x, c.y);
            if !v.is_finite() {
                return Err(Error::Domain(format!("field is not finite at ({}, {}, {})", c.t, c.x, c.y)));
            }
            node[idx] = v;
        }
    }
    Ok(out)
}

/// Result of a Hölder seminorm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoelderEstimate {
    pub theta2: f64,
    pub seminorm: f64,
    pub sup_norm: f64,
    pub weighted: bool,
    /// Time nodes attaining the maximal quotient.
    pub argmax_pair: (f64, f64),
}

/// Exhaustive pair estimate of `sup ||g(t) - g(t')|| / |t - t'|^theta2`.
///
/// With a weight, `g(t)` is first multiplied by `phi(t)^theta2`.
pub fn holder_seminorm(
    g: &TimeGridFunction,
    theta2: f64,
    weight: Option<&CuspParametrization>,
) -> Result<HoelderEstimate> {
    if !(theta2 > 0.0 && theta2 < 1.0) {
        return Err(Error::Parameter(format!("Hölder exponent {theta2} outside (0, 1)")));
    }
    let grid = *g.grid();
    let n = grid.len();
    if n < 2 {
        return Err(Error::Parameter("need at least two time nodes".into()));
    }
    let scale: Vec<f64> = match weight {
        Some(p) => (0..n).map(|k| p.phi(grid.node(k)).map(|phi| phi.powf(theta2))).collect::<Result<_>>()?,
        None => vec![1.0; n],
    };
    let mut best = 0.0_f64;
    let mut pair = (grid.node(0), grid.node(n - 1));
    let mut sup = 0.0_f64;
    for i in 0..n {
        let gi = g.node(i);
        sup = sup.max(gi.iter().fold(0.0_f64, |m, v| m.max((scale[i] * v).abs())));
        for j in (i + 1)..n {
            let gj = g.node(j);
            let diff = gi
                .iter()
                .zip(gj)
                .fold(0.0_f64, |m, (a, b)| m.max((scale[i] * a - scale[j] * b).abs()));
            let q = diff / (grid.node(j) - grid.node(i)).powf(theta2);
            if q > best {
                best = q;
                pair = (grid.node(i), grid.node(j));
            }
        }
    }
    Ok(HoelderEstimate { theta2, seminorm: best, sup_norm: sup, weighted: weight.is_some(), argmax_pair: pair })
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,xi,eta,value` rows (header included).
pub fn write_cylinder_csv(mut w: impl Write, f: &TimeGridFunction, grid: &PolarDiscGrid) -> Result<()> {
    writeln!(w, "t,xi,eta,value")?;
    for k in 0..f.grid().len() {
        let t = f.grid().node(k);
        for ((xi, eta), v) in grid.cartesian_nodes().zip(f.node(k)) {
            writeln!(w, "{},{},{},{}", fmt17(t), fmt17(xi), fmt17(eta), fmt17(*v))?;
        }
    }
    Ok(())
}

/// Writes `t,x,y,value` rows for the cone image of a cylinder field.
pub fn write_cone_csv(
    mut w: impl Write,
    f: &TimeGridFunction,
    grid: &PolarDiscGrid,
    param: &CuspParametrization,
) -> Result<()> {
    writeln!(w, "t,x,y,value")?;
    for k in 0..f.grid().len() {
        let t = f.grid().node(k);
        for ((xi, eta), v) in grid.cartesian_nodes().zip(f.node(k)) {
            let c = param.to_cone(CylinderPoint::new(t, xi, eta)?)?;
            writeln!(w, "{},{},{},{}", fmt17(c.t), fmt17(c.x), fmt17(c.y), fmt17(*v))?;
        }
    }
    Ok(())
}

/// Reads `t,a,b,value` rows (either layout); the header line is optional.
pub fn read_field_csv(r: impl BufRead) -> Result<Vec<[f64; 4]>> {
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
            continue;
        }
        let mut row = [0.0; 4];
        let mut count = 0;
        for (slot, field) in row.iter_mut().zip(line.split(',')) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number `{field}`", lineno + 1)))?;
            count += 1;
        }
        if count != 4 || line.split(',').count() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 columns", lineno + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Rebuilds a cylinder field from `t,xi,eta,value` rows in grid order.
pub fn cylinder_field_from_rows(rows: &[[f64; 4]], grid: &PolarDiscGrid, times: TimeGrid) -> Result<TimeGridFunction> {
    if rows.len() != times.len() * grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} rows for {} time nodes x {} grid nodes",
            rows.len(),
            times.len(),
            grid.len()
        )));
    }
    let mut f = TimeGridFunction::zeros(times, grid.len());
    for k in 0..times.len() {
        let t = times.node(k);
        for (idx, (xi, eta)) in grid.cartesian_nodes().enumerate() {
            let row = rows[k * grid.len() + idx];
            if (row[0] - t).abs() > 1e-12 || (row[1] - xi).abs() > 1e-12 || (row[2] - eta).abs() > 1e-12 {
                return Err(Error::GridMismatch(format!("row {} does not match node ({t}, {xi}, {eta})", k * grid.len() + idx)));
            }
            f.node_mut(k)[idx] = row[3];
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_two_values() {
        let p = CuspParametrization::power(2.0, 1.0).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), (0.0, 0.0, 2.0));
        assert_eq!(p.eval(0.5).unwrap(), (0.25, 1.0, 2.0));
        assert_eq!(p.values(0.5).unwrap().d3, 0.0);
        assert!(matches!(p.eval(1.5), Err(Error::Domain(_))));
        assert!(matches!(p.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn power_three_at_apex() {
        let p = CuspParametrization::power(3.0, 2.0).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), (0.0, 0.0, 0.0));
        let v = p.values(2.0).unwrap();
        assert_eq!((v.phi, v.d1, v.d2, v.d3), (8.0, 12.0, 12.0, 6.0));
    }

    #[test]
    fn exp_cusp_vanishes_at_apex() {
        let p = CuspParametrization::exp_cusp(1.0).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), (0.0, 0.0, 0.0));
        // e^{-1/t} t^{-k} -> 0 for every k; at t = 0.02 all values are below 1e-10.
        let v = p.values(0.02).unwrap();
        for x in [v.phi, v.d1, v.d2, v.d3] {
            assert!(x.abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn exp_cusp_derivatives_match_finite_differences() {
        let p = CuspParametrization::exp_cusp(2.0).unwrap();
        let t = 0.7;
        let d = 1e-5;
        let v = p.values(t).unwrap();
        let (m, q) = (p.values(t - d).unwrap(), p.values(t + d).unwrap());
        assert!(((q.phi - m.phi) / (2.0 * d) - v.d1).abs() < 1e-8);
        assert!(((q.d1 - m.d1) / (2.0 * d) - v.d2).abs() < 1e-8);
        assert!(((q.d2 - m.d2) / (2.0 * d) - v.d3).abs() < 1e-7);
    }

    #[test]
    fn selectors() {
        assert_eq!(CuspParametrization::parse("power:3", 1.0).unwrap().family(), &CuspFamily::Power(3.0));
        assert_eq!(CuspParametrization::parse("exp", 1.0).unwrap().family(), &CuspFamily::ExpCusp);
        assert!(CuspParametrization::parse("power:1", 1.0).is_err());
        assert!(CuspParametrization::parse("spline", 1.0).is_err());
    }

    #[test]
    fn point_maps() {
        let p = CuspParametrization::power(2.0, 1.0).unwrap();
        let c = p.to_cylinder(ConePoint { t: 0.5, x: 0.1, y: 0.2 }).unwrap();
        assert!((c.xi - 0.4).abs() < 1e-15 && (c.eta - 0.8).abs() < 1e-15);
        let back = p.to_cone(CylinderPoint::new(0.5, 0.4, 0.8).unwrap()).unwrap();
        assert!((back.x - 0.1).abs() < 1e-15 && (back.y - 0.2).abs() < 1e-15);
        assert!(matches!(
            p.to_cylinder(ConePoint { t: 0.0, x: 0.0, y: 0.0 }),
            Err(Error::SingularApex { .. })
        ));
        assert!(p.cone_point(0.5, 0.3, 0.0).is_err());
    }

    #[test]
    fn tabulated_profile_interpolates() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let tab = TabulatedProfile::new(
            t.clone(),
            t.iter().map(|s| s * s).collect(),
            t.iter().map(|s| 2.0 * s).collect(),
            vec![2.0; t.len()],
        )
        .unwrap();
        let p = CuspParametrization::new(CuspFamily::Tabulated(tab), 1.0).unwrap();
        let v = p.values(0.25).unwrap();
        assert!((v.phi - 0.065).abs() < 1e-12);
        assert!((v.d1 - 0.5).abs() < 1e-12);
        assert_eq!(v.d3, 0.0);
    }

    #[test]
    fn holder_parameter_errors() {
        let g = TimeGridFunction::zeros(TimeGrid::new(0.0, 1.0, 4).unwrap(), 1);
        assert!(holder_seminorm(&g, 0.0, None).is_err());
        assert!(holder_seminorm(&g, 1.0, None).is_err());
        assert_eq!(holder_seminorm(&g, 0.5, None).unwrap().seminorm, 0.0);
    }

    #[test]
    fn holder_of_identity() {
        let g = TimeGridFunction::from_fn(TimeGrid::new(0.0, 1.0, 16).unwrap(), 1, |t, o| o[0] = t);
        let e = holder_seminorm(&g, 0.5, None).unwrap();
        assert!((e.seminorm - 1.0).abs() < 1e-14);
        assert_eq!(e.argmax_pair, (0.0, 1.0));
    }

    #[test]
    fn holder_of_sqrt_touches_origin() {
        // Oracle: brute force over a fine grid; the quotient sqrt(t)/t^0.5 is 1 for every t' = 0 pair.
        let g = TimeGridFunction::from_fn(TimeGrid::new(0.0, 1.0, 200).unwrap(), 1, |t, o| o[0] = t.sqrt());
        let e = holder_seminorm(&g, 0.5, None).unwrap();
        assert!((e.seminorm - 1.0).abs() < 1e-12, "{}", e.seminorm);
        assert_eq!(e.argmax_pair.0, 0.0);
    }
}
