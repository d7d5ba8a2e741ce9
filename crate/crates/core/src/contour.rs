//! Quadrature on the boundary of the sector `{|arg z| <= delta0} u {|z| <= r0}`,
//! the branch of `sqrt(-z)`, and the anti-periodic Green kernel.
//!
//! The boundary is traversed clockwise around the sector: in along the lower
//! ray, around the arc through `-r0`, out along the upper ray. This is the
//! positive orientation around the spectrum of `A - lambda` on the negative axis.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tail constant in `C_TAIL / Rmax < tail_tol`. On the scalar model the
/// truncation error behaves like `0.17 / Rmax`; 0.5 leaves a margin of three.
pub const C_TAIL: f64 = 0.5;
/// Smallest admissible `|1 + exp(-T sqrt(-z))|` on the nodes.
pub const POLE_GUARD: f64 = 1e-6;
/// Panel ratio along the rays.
pub const PANEL_RATIO: f64 = 2.0;
const MIN_PANEL_ORDER: usize = 8;

/// Principal `sqrt(-z)` with `arg(-z)` in `(-pi, pi]`; the real part is `>= 0`.
pub fn sqrt_minus(z: Complex64) -> Result<Complex64> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::Domain("sqrt(-z) needs z != 0".into()));
    }
    // Normalise -0.0 so that the negative real axis of -z maps to +i.
    let w = Complex64::new(-z.re + 0.0, -z.im + 0.0);
    Ok(w.sqrt())
}

fn pole_factor(k: Complex64, len: f64) -> Result<Complex64> {
    let d = 1.0 + (-k * len).exp();
    if d.norm() == 0.0 || !d.norm().is_finite() {
        return Err(Error::KernelPole { modulus: d.norm() });
    }
    Ok(d)
}

/// Which case of the kernel formula was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelBranch {
    /// `s <= t`.
    Below,
    /// `s > t`.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub branch_used: KernelBranch,
}

fn check_times(t: f64, s: f64, len: f64) -> Result<()> {
    if !(0.0..=len).contains(&t) || !(0.0..=len).contains(&s) {
        return Err(Error::Domain(format!("(t, s) = ({t}, {s}) outside [0, {len}]^2")));
    }
    Ok(())
}

/// Anti-periodic Green kernel
/// `K(t, s) = (e^{-k|t-s|} - e^{-k(T-|t-s|)}) / (2k(1 + e^{-kT}))`, `k = sqrt(-z)`.
pub fn green_kernel(k: Complex64, t: f64, s: f64, len: f64) -> Result<KernelValue> {
    check_times(t, s, len)?;
    let d = pole_factor(k, len)?;
    let (gap, branch) = if s <= t { (t - s, KernelBranch::Below) } else { (s - t, KernelBranch::Above) };
    let value = ((-k * gap).exp() - (-k * (len - gap)).exp()) / (2.0 * k * d);
    Ok(KernelValue { value, branch_used: branch })
}

/// `dK/dt` for `t != s`: `-(e^{-k(t-s)} + e^{-k(T-t+s)}) / (2(1+e^{-kT}))` when
/// `s < t` and `+(e^{-k(s-t)} + e^{-k(T+t-s)}) / (2(1+e^{-kT}))` when `s > t`.
pub fn green_kernel_dt(k: Complex64, t: f64, s: f64, len: f64) -> Result<Complex64> {
    check_times(t, s, len)?;
    if t == s {
        return Err(Error::JumpPoint { t });
    }
    let d = pole_factor(k, len)?;
    let gap = (t - s).abs();
    let sum = (-k * gap).exp() + (-k * (len - gap)).exp();
    Ok(if s < t { -sum / (2.0 * d) } else { sum / (2.0 * d) })
}

/// `c(t) = (e^{-kt} + e^{-k(T-t)}) / (1 + e^{-kT})`.
pub fn boundary_coefficient(k: Complex64, t: f64, len: f64) -> Result<Complex64> {
    let d = pole_factor(k, len)?;
    Ok(((-k * t).exp() + (-k * (len - t)).exp()) / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    RayUpper,
    Arc,
    RayLower,
}

/// One quadrature node: `integral f dz ~ sum w f(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourNode {
    pub z: Complex64,
    pub weight: Complex64,
    pub sqrt_mz: Complex64,
    pub segment: Segment,
}

/// Contour parameters; `r0` and `rmax` default from `lambda`, `T` and `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourConfig {
    pub delta0: f64,
    pub r0: Option<f64>,
    pub rmax: Option<f64>,
    pub n_ray: usize,
    pub n_arc: usize,
    pub tail_tol: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { delta0: PI / 6.0, r0: None, rmax: None, n_ray: 256, n_arc: 32, tail_tol: 1e-10 }
    }
}

impl ContourConfig {
    /// `min(1, lambda/2, 0.9 (pi/T)^2)`, kept strictly below the pole bound.
    pub fn default_r0(lambda: f64, len: f64) -> f64 {
        let pole = 0.9 * (PI / len).powi(2);
        1.0_f64.min(0.5 * lambda).min(pole * (1.0 - 1e-12))
    }

    pub fn build(&self, lambda: f64, len: f64) -> Result<ContourQuadrature> {
        let r0 = self.r0.unwrap_or_else(|| Self::default_r0(lambda, len));
        build_contour(self.delta0, r0, self.rmax, self.n_ray, self.n_arc, len, self.tail_tol)
    }
}

/// Auto truncation radius from the tail rule.
pub fn auto_rmax(r0: f64, tail_tol: f64) -> f64 {
    (C_TAIL / tail_tol).max(16.0 * r0)
}

/// Composite Gauss-Legendre quadrature on the sector boundary.
///
/// Only the upper half is stored; the lower half is its mirror image
/// (`z -> conj z`, `w -> -conj w`).
#[derive(Debug, Clone, PartialEq)]
pub struct ContourQuadrature {
    pub delta0: f64,
    pub r0: f64,
    pub rmax: f64,
    pub length: f64,
    half: Vec<ContourNode>,
}

fn gl_rule(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("positive order"));
    let mut pairs = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

pub fn build_contour(
    delta0: f64,
    r0: f64,
    rmax: Option<f64>,
    n_ray: usize,
    n_arc: usize,
    len: f64,
    tail_tol: f64,
) -> Result<ContourQuadrature> {
    if !(delta0 > 0.0 && delta0 < PI / 2.0) {
        return Err(Error::Parameter(format!("delta0 = {delta0} outside (0, pi/2)")));
    }
    if !(len.is_finite() && len > 0.0) {
        return Err(Error::Parameter(format!("T = {len} must be positive")));
    }
    if n_ray < 8 || n_arc < 8 {
        return Err(Error::Parameter("n_ray and n_arc must be at least 8".into()));
    }
    if !(r0 > 0.0) {
        return Err(Error::Parameter(format!("r0 = {r0} must be positive")));
    }
    let pole_bound = 0.9 * (PI / len).powi(2);
    if r0 >= pole_bound {
        return Err(Error::ContourConflict(format!("r0 = {r0} is not below 0.9 (pi/T)^2 = {pole_bound}")));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::Parameter(format!("tail_tol = {tail_tol} must be positive")));
    }
    let rmax = rmax.unwrap_or_else(|| auto_rmax(r0, tail_tol));
    if !(rmax > r0) {
        return Err(Error::Parameter(format!("Rmax = {rmax} must exceed r0 = {r0}")));
    }

    let mut half = Vec::new();
    // Arc from alpha = pi down to delta0 (the upper half of the clockwise arc).
    let arc_nodes = (n_arc / 2).max(MIN_PANEL_ORDER);
    for (x, w) in gl_rule(arc_nodes).into_iter().rev() {
        let alpha = 0.5 * (PI + delta0) + 0.5 * (PI - delta0) * x;
        let e = Complex64::from_polar(1.0, alpha);
        let z = e * r0;
        let weight = -Complex64::i() * z * (0.5 * (PI - delta0) * w);
        half.push(ContourNode { z, weight, sqrt_mz: sqrt_minus(z)?, segment: Segment::Arc });
    }
    // Upper ray outward, geometric panels [r0 q^k, r0 q^{k+1}] cut at Rmax.
    let mut edges = vec![r0];
    while *edges.last().unwrap() < rmax {
        let next = (edges.last().unwrap() * PANEL_RATIO).min(rmax);
        if rmax - next < 1e-12 * rmax {
            edges.push(rmax);
        } else {
            edges.push(next);
        }
    }
    let panels = edges.len() - 1;
    let order = MIN_PANEL_ORDER.max(n_ray.div_ceil(panels));
    let rule = gl_rule(order);
    let dir = Complex64::from_polar(1.0, delta0);
    for p in 0..panels {
        let (a, b) = (edges[p], edges[p + 1]);
        for &(x, w) in &rule {
            let rho = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let z = dir * rho;
            half.push(ContourNode { z, weight: dir * (0.5 * (b - a) * w), sqrt_mz: sqrt_minus(z)?, segment: Segment::RayUpper });
        }
    }
    let quad = ContourQuadrature { delta0, r0, rmax, length: len, half };
    let m = quad.min_pole_modulus();
    if m < POLE_GUARD {
        return Err(Error::ContourConflict(format!("min |1 + exp(-T sqrt(-z))| = {m:.3e} on the nodes")));
    }
    Ok(quad)
}

impl ContourQuadrature {
    /// Upper-half nodes (arc part first, then the upper ray).
    pub fn half_nodes(&self) -> &[ContourNode] {
        &self.half
    }

    /// All nodes in traversal order: lower ray inward, arc, upper ray outward.
    pub fn nodes(&self) -> Vec<ContourNode> {
        let mirror = |n: &ContourNode| ContourNode {
            z: n.z.conj(),
            weight: -n.weight.conj(),
            sqrt_mz: n.sqrt_mz.conj(),
            segment: if n.segment == Segment::RayUpper { Segment::RayLower } else { Segment::Arc },
        };
        let arc: Vec<&ContourNode> = self.half.iter().filter(|n| n.segment == Segment::Arc).collect();
        let ray: Vec<&ContourNode> = self.half.iter().filter(|n| n.segment == Segment::RayUpper).collect();
        let mut out: Vec<ContourNode> = ray.iter().rev().map(|n| mirror(n)).collect();
        out.extend(arc.iter().rev().map(|n| mirror(n)));
        out.extend(arc.iter().map(|n| **n));
        out.extend(ray.iter().map(|n| **n));
        out
    }

    pub fn len(&self) -> usize {
        2 * self.half.len()
    }

    pub fn is_empty(&self) -> bool {
        self.half.is_empty()
    }

    /// `min_j |1 + exp(-T sqrt(-z_j))|` over the nodes.
    pub fn min_pole_modulus(&self) -> f64 {
        self.half.iter().map(|n| (1.0 + (-n.sqrt_mz * self.length).exp()).norm()).fold(f64::INFINITY, f64::min)
    }

    /// `sum_j w_j f(z_j)` over the full contour for a function with
    /// `f(conj z) = conj f(z)`: twice the imaginary part is dropped, so this is
    /// `sum_half (w f - conj(w f))`.
    pub fn integrate_symmetric(&self, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
        let s: Complex64 = self.half.iter().map(|n| n.weight * f(n.z)).sum();
        s - s.conj()
    }

    /// `sum_j w_j f(z_j)` over the full contour.
    pub fn integrate(&self, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.nodes().iter().map(|n| n.weight * f(n.z)).sum()
    }
}

fn boundary_modulus(k: Complex64, len: f64) -> f64 {
    (1.0 + (-k * len).exp()).norm()
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn scan_min(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..=n {
        let v = f(a + k as f64 * h);
        if v < best.0 {
            best = (v, k);
        }
    }
    let lo = (a + (best.1 as f64 - 1.0) * h).max(a);
    let hi = (a + (best.1 as f64 + 1.0) * h).min(b);
    let (_, v) = golden_min(&f, lo, hi);
    v.min(best.0)
}

/// Continuous minimum of `|1 + exp(-T sqrt(-z))|` over the sector boundary
/// (rays for `r0 <= |z| <= rmax`, and the arc).
pub fn lemma_constant(delta0: f64, r0: f64, len: f64, rmax: f64) -> Result<f64> {
    if !(delta0 > 0.0 && delta0 < PI / 2.0 && r0 > 0.0 && rmax > r0 && len > 0.0) {
        return Err(Error::Parameter("invalid sector for the boundary minimum".into()));
    }
    let ray = |x: f64| {
        let z = Complex64::from_polar(x.exp(), delta0);
        boundary_modulus(sqrt_minus(z).unwrap_or_default(), len)
    };
    let arc = |alpha: f64| {
        let z = Complex64::from_polar(r0, alpha);
        boundary_modulus(sqrt_minus(z).unwrap_or_default(), len)
    };
    let m_ray = scan_min(ray, r0.ln(), rmax.ln(), 20_000);
    let m_arc = scan_min(arc, delta0, PI, 4_000);
    Ok(m_ray.min(m_arc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn branch_examples() {
        assert_eq!(sqrt_minus(c(-1.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(sqrt_minus(c(4.0, 0.0)).unwrap(), c(0.0, 2.0));
        assert!((sqrt_minus(c(-0.25, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-16);
        assert!(matches!(sqrt_minus(c(0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn kernel_examples() {
        let k = c(1.0, 0.0);
        let v = green_kernel(k, 0.5, 0.25, 1.0).unwrap();
        let expect = ((-0.25f64).exp() - (-0.75f64).exp()) / (2.0 * (1.0 + (-1.0f64).exp()));
        assert!((v.value.re - expect).abs() < 1e-15);
        assert!((v.value.re - 0.1120107).abs() < 1e-7);
        assert_eq!(v.branch_used, KernelBranch::Below);
        let cc = boundary_coefficient(k, 0.5, 1.0).unwrap();
        assert!((cc.re - 0.8868188).abs() < 1e-7);
        assert!((boundary_coefficient(k, 0.0, 1.0).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(green_kernel_dt(k, 0.3, 0.3, 1.0), Err(Error::JumpPoint { .. })));
    }

    #[test]
    fn pole_is_reported() {
        // 1 + exp(-i pi) = 0 for k = i pi and T = 1.
        let k = c(0.0, PI);
        match green_kernel(k, 0.2, 0.1, 1.0) {
            Err(Error::KernelPole { modulus }) => assert!(modulus < 1e-15),
            Ok(v) => assert!(v.value.norm() > 1e12),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn constant_integrates_to_endpoint_difference() {
        let q = build_contour(PI / 6.0, 1.0, Some(1e4), 64, 32, 1.0, 1e-8).unwrap();
        let d = Complex64::from_polar(1.0, PI / 6.0);
        // Path runs from rmax e^{-i d} to rmax e^{i d}.
        assert!((q.integrate(|_| c(1.0, 0.0)) - 1e4 * (d - d.conj())).norm() < 1e-9);
        // Arc alone: from r0 e^{-i d} to r0 e^{i d} gives their difference.
        let arc: Complex64 = q.nodes().iter().filter(|n| n.segment == Segment::Arc).map(|n| n.weight).sum();
        assert!((arc - (d - d.conj())).norm() < 1e-12);
    }

    #[test]
    fn nodes_lie_on_boundary() {
        let q = build_contour(PI / 4.0, 0.5, None, 64, 16, 2.0, 1e-8).unwrap();
        for n in q.nodes() {
            assert!(n.sqrt_mz.re >= 0.0);
            match n.segment {
                Segment::Arc => assert!((n.z.norm() - 0.5).abs() < 1e-14),
                _ => {
                    assert!((n.z.arg().abs() - PI / 4.0).abs() < 1e-12);
                    assert!(n.z.norm() >= 0.5 && n.z.norm() <= q.rmax);
                    let expect = n.z.norm().sqrt() * (PI / 8.0).sin();
                    assert!((n.sqrt_mz.re - expect).abs() <= 1e-12 * (1.0 + expect));
                }
            }
        }
    }

    #[test]
    fn conflicting_radius() {
        let pole = 0.9 * PI * PI;
        assert!(matches!(build_contour(PI / 6.0, pole, None, 64, 16, 1.0, 1e-8), Err(Error::ContourConflict(_))));
        assert!(build_contour(PI / 6.0, 1.0, None, 4, 16, 1.0, 1e-8).is_err());
    }

    #[test]
    fn auto_rmax_inverts_tail_rule() {
        let q = build_contour(PI / 6.0, 1.0, None, 64, 32, 1.0, 1e-8).unwrap();
        assert!(q.rmax >= C_TAIL / 1e-8);
    }
}
