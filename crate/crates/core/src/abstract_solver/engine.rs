//! Double integrals over the contour and the time interval.
//!
//! With `R(t, z) = (A(t) - lambda - z)^{-1}` and the kernel `K` on `[0, L]`,
//!
//! ```text
//! w(t)        = (1/2 pi i) int_G int_0^L K(t,s) R(t,z) g(s) ds dz
//! w'(t)       = (1/2 pi i) int_G R [S1 - A' R S0] dz
//! R_lambda g  = (1/2 pi i) int_G R [2 A' R S1 + A'' R S0 - 2 A' R A' R S0] dz
//! ```
//!
//! where `S0 = int K g ds` and `S1 = int dK/dt g ds`. With the resolvent frozen
//! at the source time instead ([`Formulation::SourceTime`]),
//!
//! ```text
//! w(t)        = (1/2 pi i) int_G int_0^L K(t,s) R(s,z) g(s) ds dz
//! R_lambda g  = -(1/2 pi i) int_G int_0^L K(t,s) (A(t) - A(s)) R(s,z) g(s) ds dz
//! ```
//!
//! The s-integrals are done
//! exactly for the piecewise-linear interpolant of `g`, which keeps them
//! accurate for every `|z|` on the contour. Real data make the integrand
//! conjugate-symmetric, so only the upper half contour is visited.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::family::EvolutionFamily;
use super::time_grid::TimeGridFunction;
use crate::contour::{ContourNode, ContourQuadrature};
use crate::error::{Error, Result};
use crate::linalg::{factor_checked, ShiftedTridiagLu, Tridiag};

const CHUNKS: usize = 16;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Blocks whose largest entry is below this fraction of the data maximum are skipped.
const BLOCK_FLOOR: f64 = 1e-15;

/// Time at which the resolvent is frozen inside the double integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    /// `R(t, z)` at the output time, as in the representation formula.
    #[default]
    OutputTime,
    /// `R(s, z)` under the s-integral: `w` is anti-periodic for every `g*` and
    /// no t-derivatives of `A` are needed.
    SourceTime,
}

impl Formulation {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "output" => Ok(Self::OutputTime),
            "source" => Ok(Self::SourceTime),
            _ => Err(Error::Parameter(format!("unknown formulation '{s}' (output | source)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::OutputTime => "output",
            Self::SourceTime => "source",
        }
    }
}

/// Which integrals to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Quantities {
    pub w: bool,
    pub dw: bool,
    pub r_lambda: bool,
}

#[derive(Debug, Clone, Default)]
pub struct EngineOutput {
    pub w: Option<TimeGridFunction>,
    pub dw: Option<TimeGridFunction>,
    pub r_lambda: Option<TimeGridFunction>,
}

/// `phi1 = (1 - e^{-x}) / x` and `psi = (1 - e^{-x}(1 + x)) / x^2`.
pub(crate) fn phi_psi(x: Complex64) -> (Complex64, Complex64) {
    if x.norm() < 0.5 {
        let (mut phi, mut psi) = (ZERO, ZERO);
        let mut term = Complex64::new(1.0, 0.0); // (-x)^n / n!
        for n in 0..24 {
            let nf = n as f64;
            phi += term / (nf + 1.0);
            psi += term / ((nf + 1.0) * (nf + 2.0)) * (nf + 1.0);
            term *= -x / (nf + 1.0);
        }
        (phi, psi)
    } else {
        let e = (-x).exp();
        ((1.0 - e) / x, (1.0 - e * (1.0 + x)) / (x * x))
    }
}

/// Exponential tables for one contour node on a uniform grid of `n + 1` nodes.
pub(crate) struct NodeTables {
    pub k: Complex64,
    pub h: f64,
    pub ekh: Complex64,
    /// `e^{-k t_i}` and `e^{-k (L - t_i)}`.
    pub ekt: Vec<Complex64>,
    pub ekl: Vec<Complex64>,
    pub a: Complex64,
    pub b: Complex64,
    pub denom: Complex64,
}

impl NodeTables {
    pub fn new(k: Complex64, n: usize, len: f64) -> Result<Self> {
        let h = len / n as f64;
        let ekt: Vec<Complex64> = (0..=n).map(|i| (-k * (i as f64 * h)).exp()).collect();
        let ekl: Vec<Complex64> = (0..=n).map(|i| (-k * ((n - i) as f64 * h)).exp()).collect();
        let denom = 1.0 + ekt[n];
        if denom.norm() < 1e-300 {
            return Err(Error::KernelPole { modulus: denom.norm() });
        }
        let (phi, psi) = phi_psi(k * h);
        Ok(Self { k, h, ekh: (-k * h).exp(), ekt, ekl, a: (phi - psi) * h, b: psi * h, denom })
    }
}

/// Partial integrals `P, M, Q, N` of one block (length `m`) at every node.
pub(crate) struct Partials {
    pub m: usize,
    pub p: Vec<Complex64>,
    pub mm: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub nn: Vec<Complex64>,
}

impl Partials {
    /// `g[i * m + r]` holds the block value at time node `i`.
    pub fn new(tab: &NodeTables, g: &[f64], m: usize) -> Self {
        Self::build(tab, g.len() / m - 1, m, |q| Complex64::new(g[q], 0.0))
    }

    pub fn new_complex(tab: &NodeTables, g: &[Complex64], m: usize) -> Self {
        Self::build(tab, g.len() / m - 1, m, |q| g[q])
    }

    fn build(tab: &NodeTables, n: usize, m: usize, g: impl Fn(usize) -> Complex64) -> Self {
        let mut p = vec![ZERO; (n + 1) * m];
        let mut mm = vec![ZERO; (n + 1) * m];
        let mut q = vec![ZERO; (n + 1) * m];
        let mut nn = vec![ZERO; (n + 1) * m];
        let (a, b) = (tab.a, tab.b);
        for i in 1..=n {
            let (cur, prev) = (i * m, (i - 1) * m);
            for r in 0..m {
                let (gi, gp) = (g(cur + r), g(prev + r));
                p[cur + r] = tab.ekh * p[prev + r] + a * gi + b * gp;
                mm[cur + r] = mm[prev + r] + tab.ekt[i - 1] * (a * gp + b * gi);
            }
        }
        for i in (0..n).rev() {
            let (cur, next) = (i * m, (i + 1) * m);
            for r in 0..m {
                let (gi, gn) = (g(cur + r), g(next + r));
                q[cur + r] = tab.ekh * q[next + r] + a * gi + b * gn;
                nn[cur + r] = nn[next + r] + tab.ekl[i + 1] * (a * gn + b * gi);
            }
        }
        Self { m, p, mm, q, nn }
    }

    /// `S0 = int K g ds` and `S1 = int dK/dt g ds` at node `i`, over
    /// `|t - s| >= e h` (`e = 0` gives the full integrals).
    pub fn sums(&self, tab: &NodeTables, i: usize, e: usize, s0: &mut [Complex64], s1: &mut [Complex64]) {
        let m = self.m;
        let n = self.p.len() / m - 1;
        let cut = tab.ekt[e];
        let two_d = 2.0 * tab.denom;
        let inv0 = 1.0 / (tab.k * two_d);
        let inv1 = 1.0 / two_d;
        for r in 0..m {
            let (pl, ml) = if i >= e { (cut * self.p[(i - e) * m + r], tab.ekl[i] * self.mm[(i - e) * m + r]) } else { (ZERO, ZERO) };
            let (qr, nr) = if i + e <= n { (cut * self.q[(i + e) * m + r], tab.ekt[i] * self.nn[(i + e) * m + r]) } else { (ZERO, ZERO) };
            s0[r] = (pl - ml + qr - nr) * inv0;
            s1[r] = (-pl - ml + qr + nr) * inv1;
        }
    }
}

/// Block operators `A^{(order)}(t_i)` for every class in use.
pub(crate) struct BlockOperators {
    /// `ops[class_slot][i][order]`.
    ops: Vec<Vec<[Option<Tridiag>; 3]>>,
    class_slot: Vec<Option<usize>>,
}

impl BlockOperators {
    pub fn new<F: EvolutionFamily + ?Sized>(fam: &F, times: &[f64], blocks: &[usize], max_order: usize) -> Result<Self> {
        let mut class_slot = vec![None; fam.block_count()];
        let mut classes: Vec<usize> = Vec::new();
        let mut reps: Vec<usize> = Vec::new();
        for &b in blocks {
            let c = fam.block_class(b);
            if let Some(pos) = classes.iter().position(|&x| x == c) {
                class_slot[b] = Some(pos);
            } else {
                class_slot[b] = Some(classes.len());
                classes.push(c);
                reps.push(b);
            }
        }
        let ops = reps
            .iter()
            .map(|&b| {
                times
                    .iter()
                    .map(|&t| {
                        let mut row: [Option<Tridiag>; 3] = [None, None, None];
                        for (order, slot) in row.iter_mut().enumerate().take(max_order + 1) {
                            let op = fam.block_operator(t, order, b)?;
                            *slot = if order > 0 && op.is_zero() { None } else { Some(op) };
                        }
                        Ok(row)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ops, class_slot })
    }

    pub fn class_of(&self, block: usize) -> usize {
        self.class_slot[block].expect("block is active")
    }

    pub fn class_count(&self) -> usize {
        self.ops.len()
    }

    pub fn get(&self, class: usize, i: usize, order: usize) -> Option<&Tridiag> {
        self.ops[class][i][order].as_ref()
    }
}

/// Physical time series -> working coordinates `[i][block][r]` and the list
/// of blocks that are not identically zero.
pub(crate) fn to_working<F: EvolutionFamily + ?Sized>(fam: &F, g: &TimeGridFunction) -> Result<(Vec<f64>, Vec<usize>)> {
    if g.dim() != fam.dim() {
        return Err(Error::GridMismatch(format!("data dimension {} vs family dimension {}", g.dim(), fam.dim())));
    }
    let len = g.grid().length();
    if (len - fam.length()).abs() > 1e-12 * fam.length().max(1.0) {
        return Err(Error::GridMismatch(format!("interval length {len} vs family length {}", fam.length())));
    }
    let n = g.grid().len();
    let d = fam.dim();
    let mut work = vec![0.0; n * d];
    for i in 0..n {
        fam.to_working(g.node(i), &mut work[i * d..(i + 1) * d]);
    }
    let m = fam.block_len();
    // Transform round-off leaves ~1e-17 residue in blocks that are zero in
    // exact arithmetic (e.g. angular modes of radial data); drop it.
    let floor = BLOCK_FLOOR * work.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut active = Vec::new();
    for b in 0..fam.block_count() {
        let big = (0..n).any(|i| work[i * d + b * m..i * d + (b + 1) * m].iter().any(|v| v.abs() > floor));
        if big {
            active.push(b);
        } else {
            for i in 0..n {
                work[i * d + b * m..i * d + (b + 1) * m].iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
    Ok((work, active))
}

/// Gathers block `b` from the working layout into `[i][r]`.
pub(crate) fn gather_block(work: &[f64], n: usize, d: usize, m: usize, b: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        out.extend_from_slice(&work[i * d + b * m..i * d + (b + 1) * m]);
    }
    out
}

pub(crate) fn factor<'a>(
    ops: &'a BlockOperators,
    class: usize,
    i: usize,
    shift: Complex64,
    t: f64,
    z: Complex64,
) -> Result<(ShiftedTridiagLu, Option<&'a Tridiag>, Option<&'a Tridiag>)> {
    let a0 = ops.get(class, i, 0).expect("order 0 operator");
    let lu = factor_checked(a0, shift, t, z)?;
    Ok((lu, ops.get(class, i, 1), ops.get(class, i, 2)))
}

/// Adds `Im(weight * x) / pi` to `acc`.
fn accumulate(acc: &mut [f64], weight: Complex64, x: &[Complex64]) {
    let c = weight / PI;
    for (a, v) in acc.iter_mut().zip(x) {
        *a += (c * v).im;
    }
}

pub(crate) fn chunked<T: Send>(nodes: &[ContourNode], f: impl Fn(&[ContourNode]) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let size = nodes.len().div_ceil(CHUNKS).max(1);
    nodes.par_chunks(size).map(f).collect()
}

/// Evaluates the requested double integrals for data `g` on the family's interval.
pub fn evaluate<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    g: &TimeGridFunction,
    what: Quantities,
    form: Formulation,
) -> Result<EngineOutput> {
    if form == Formulation::SourceTime {
        return evaluate_source(fam, contour, lambda, g, what);
    }
    let grid = *g.grid();
    let n = grid.intervals();
    let d = fam.dim();
    let m = fam.block_len();
    let len = grid.length();
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * len / n as f64).collect();
    let (work, active) = to_working(fam, g)?;
    let static_family = fam.is_time_independent();
    let need_r = what.r_lambda && !static_family;
    let max_order = if need_r { 2 } else if what.dw && !static_family { 1 } else { 0 };
    let ops = BlockOperators::new(fam, &times, &active, max_order)?;
    let blocks: Vec<Vec<f64>> = active.iter().map(|&b| gather_block(&work, n + 1, d, m, b)).collect();
    let flags = [what.w, what.dw, need_r];
    let stride = (n + 1) * d;

    let partial_sums = chunked(contour.half_nodes(), |chunk| {
        let mut acc = vec![0.0; 3 * stride];
        let mut s0 = vec![ZERO; m];
        let mut s1 = vec![ZERO; m];
        let mut u0 = vec![ZERO; m];
        let mut x = vec![ZERO; m];
        let mut y = vec![ZERO; m];
        let mut tmp = vec![ZERO; m];
        for node in chunk {
            let tab = NodeTables::new(node.sqrt_mz, n, len)?;
            let shift = node.z + lambda;
            let partials: Vec<Partials> = blocks.iter().map(|gb| Partials::new(&tab, gb, m)).collect();
            for i in 0..=n {
                let mut lus: Vec<Option<(ShiftedTridiagLu, Option<&Tridiag>, Option<&Tridiag>)>> =
                    (0..ops.class_count()).map(|_| None).collect();
                for (slot, &b) in active.iter().enumerate() {
                    let c = ops.class_of(b);
                    if lus[c].is_none() {
                        lus[c] = Some(factor(&ops, c, i, shift, times[i], node.z)?);
                    }
                    let (lu, a1, a2) = lus[c].as_ref().unwrap();
                    partials[slot].sums(&tab, i, 0, &mut s0, &mut s1);
                    u0.copy_from_slice(&s0);
                    lu.solve_in_place(&mut u0);
                    let off = i * d + b * m;
                    if flags[0] {
                        accumulate(&mut acc[off..off + m], node.weight, &u0);
                    }
                    if flags[1] {
                        x.copy_from_slice(&s1);
                        if let Some(a1) = a1 {
                            a1.apply_complex(&u0, &mut tmp);
                            for (xv, tv) in x.iter_mut().zip(&tmp) {
                                *xv -= tv;
                            }
                        }
                        lu.solve_in_place(&mut x);
                        accumulate(&mut acc[stride + off..stride + off + m], node.weight, &x);
                    }
                    if flags[2] {
                        // x = 2 A' R S1 + A'' u0 - 2 A' R A' u0, then R x.
                        x.iter_mut().for_each(|v| *v = ZERO);
                        if let Some(a1) = a1 {
                            y.copy_from_slice(&s1);
                            lu.solve_in_place(&mut y);
                            a1.apply_complex(&u0, &mut tmp);
                            lu.solve_in_place(&mut tmp);
                            for (yv, tv) in y.iter_mut().zip(&tmp) {
                                *yv -= tv;
                            }
                            a1.apply_complex(&y, &mut tmp);
                            for (xv, tv) in x.iter_mut().zip(&tmp) {
                                *xv += 2.0 * tv;
                            }
                        }
                        if let Some(a2) = a2 {
                            a2.apply_complex(&u0, &mut tmp);
                            for (xv, tv) in x.iter_mut().zip(&tmp) {
                                *xv += tv;
                            }
                        }
                        lu.solve_in_place(&mut x);
                        accumulate(&mut acc[2 * stride + off..2 * stride + off + m], node.weight, &x);
                    }
                }
            }
        }
        Ok(acc)
    })?;

    assemble_output(fam, grid, &partial_sums, what)
}

/// Sums the per-chunk accumulators (fixed order) and maps back to physical data.
fn assemble_output<F: EvolutionFamily + ?Sized>(
    fam: &F,
    grid: super::TimeGrid,
    parts: &[Vec<f64>],
    what: Quantities,
) -> Result<EngineOutput> {
    let d = fam.dim();
    let n = grid.intervals();
    let stride = (n + 1) * d;
    let mut total = vec![0.0; 3 * stride];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    let finish = |q: usize| -> Result<TimeGridFunction> {
        let mut data = vec![0.0; stride];
        for i in 0..=n {
            fam.from_working(&total[q * stride + i * d..q * stride + (i + 1) * d], &mut data[i * d..(i + 1) * d]);
        }
        TimeGridFunction::from_data(grid, d, data)
    };
    Ok(EngineOutput {
        w: if what.w { Some(finish(0)?) } else { None },
        dw: if what.dw { Some(finish(1)?) } else { None },
        r_lambda: if what.r_lambda { Some(finish(2)?) } else { None },
    })
}

/// Source-time variant of [`evaluate`].
fn evaluate_source<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    g: &TimeGridFunction,
    what: Quantities,
) -> Result<EngineOutput> {
    let grid = *g.grid();
    let n = grid.intervals();
    let d = fam.dim();
    let m = fam.block_len();
    let len = grid.length();
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * len / n as f64).collect();
    let (work, active) = to_working(fam, g)?;
    let need_r = what.r_lambda && !fam.is_time_independent();
    let ops = BlockOperators::new(fam, &times, &active, 0)?;
    let blocks: Vec<Vec<f64>> = active.iter().map(|&b| gather_block(&work, n + 1, d, m, b)).collect();
    let stride = (n + 1) * d;

    let partial_sums = chunked(contour.half_nodes(), |chunk| {
        let mut acc = vec![0.0; 3 * stride];
        let mut s0 = vec![ZERO; m];
        let mut s1 = vec![ZERO; m];
        let mut v0 = vec![ZERO; m];
        let mut x = vec![ZERO; m];
        let mut u = vec![vec![ZERO; (n + 1) * m]; active.len()];
        let mut au = vec![vec![ZERO; if need_r { (n + 1) * m } else { 0 }]; active.len()];
        for node in chunk {
            let tab = NodeTables::new(node.sqrt_mz, n, len)?;
            let shift = node.z + lambda;
            // u(s_i) = R(s_i, z) g(s_i) and A(s_i) u(s_i).
            for i in 0..=n {
                let mut lus: Vec<Option<ShiftedTridiagLu>> = (0..ops.class_count()).map(|_| None).collect();
                for (slot, &b) in active.iter().enumerate() {
                    let c = ops.class_of(b);
                    if lus[c].is_none() {
                        lus[c] = Some(factor(&ops, c, i, shift, times[i], node.z)?.0);
                    }
                    let ui = &mut u[slot][i * m..(i + 1) * m];
                    for (uv, gv) in ui.iter_mut().zip(&blocks[slot][i * m..(i + 1) * m]) {
                        *uv = Complex64::new(*gv, 0.0);
                    }
                    lus[c].as_ref().unwrap().solve_in_place(ui);
                    if need_r {
                        let a0 = ops.get(c, i, 0).expect("order 0 operator");
                        a0.apply_complex(ui, &mut au[slot][i * m..(i + 1) * m]);
                    }
                }
            }
            for (slot, &b) in active.iter().enumerate() {
                let c = ops.class_of(b);
                let pu = Partials::new_complex(&tab, &u[slot], m);
                let pa = if need_r { Some(Partials::new_complex(&tab, &au[slot], m)) } else { None };
                for i in 0..=n {
                    pu.sums(&tab, i, 0, &mut s0, &mut s1);
                    let off = i * d + b * m;
                    if what.w {
                        accumulate(&mut acc[off..off + m], node.weight, &s0);
                    }
                    if what.dw {
                        accumulate(&mut acc[stride + off..stride + off + m], node.weight, &s1);
                    }
                    if let Some(pa) = &pa {
                        // -(A(t_i) S0[u] - S0[A u])
                        pa.sums(&tab, i, 0, &mut v0, &mut x);
                        ops.get(c, i, 0).expect("order 0 operator").apply_complex(&s0, &mut x);
                        for (xv, vv) in x.iter_mut().zip(&v0) {
                            *xv = *vv - *xv;
                        }
                        accumulate(&mut acc[2 * stride + off..2 * stride + off + m], node.weight, &x);
                    }
                }
            }
        }
        Ok(acc)
    })?;
    assemble_output(fam, grid, &partial_sums, what)
}

/// Terms of the epsilon-regularized second derivative at one time node.
#[derive(Debug, Clone)]
pub struct PiTerms {
    pub t: f64,
    pub epsilon: f64,
    /// `Pi^1 .. Pi^5` in physical coordinates.
    pub terms: [Vec<f64>; 5],
    pub sum: Vec<f64>,
}

/// Evaluates the five terms of `w''` with the window `|t - s| >= e h`:
/// the kernel second derivative, the two boundary terms of the window, the
/// mixed `dK/dt dR/dt` term and the `K d^2R/dt^2` term.
pub fn pi_terms<F: EvolutionFamily + ?Sized>(
    fam: &F,
    contour: &ContourQuadrature,
    lambda: f64,
    g: &TimeGridFunction,
    i: usize,
    e: usize,
) -> Result<PiTerms> {
    let grid = *g.grid();
    let n = grid.intervals();
    if e < 2 || i < e || i + e > n {
        return Err(Error::Parameter(format!("window of {e} steps at node {i} leaves [0, T] (n = {n}); need e >= 2")));
    }
    let d = fam.dim();
    let m = fam.block_len();
    let len = grid.length();
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * len / n as f64).collect();
    let (work, active) = to_working(fam, g)?;
    let ops = BlockOperators::new(fam, &times, &active, 2)?;
    let blocks: Vec<Vec<f64>> = active.iter().map(|&b| gather_block(&work, n + 1, d, m, b)).collect();

    let parts = chunked(contour.half_nodes(), |chunk| {
        let mut acc = vec![0.0; 5 * d];
        let mut s0 = vec![ZERO; m];
        let mut s1 = vec![ZERO; m];
        let mut x = vec![ZERO; m];
        let mut tmp = vec![ZERO; m];
        for node in chunk {
            let tab = NodeTables::new(node.sqrt_mz, n, len)?;
            let k = node.sqrt_mz;
            let eps = e as f64 * tab.h;
            let ee = tab.ekt[e];
            let el = (-k * (len - eps)).exp();
            let bcoef = (ee + el) / (2.0 * tab.denom);
            let ccoef = (ee - el) / (2.0 * k * tab.denom);
            let shift = node.z + lambda;
            for (slot, &b) in active.iter().enumerate() {
                let c = ops.class_of(b);
                let (lu, a1, a2) = factor(&ops, c, i, shift, times[i], node.z)?;
                let part = Partials::new(&tab, &blocks[slot], m);
                part.sums(&tab, i, e, &mut s0, &mut s1);
                let gm = &blocks[slot][(i - e) * m..(i - e + 1) * m];
                let gp = &blocks[slot][(i + e) * m..(i + e + 1) * m];
                let dr = |v: &mut Vec<Complex64>, tmp: &mut Vec<Complex64>| {
                    // v <- -R A' R v
                    lu.solve_in_place(v);
                    match a1 {
                        Some(a1) => {
                            a1.apply_complex(v, tmp);
                            lu.solve_in_place(tmp);
                            for (vv, tv) in v.iter_mut().zip(tmp.iter()) {
                                *vv = -tv;
                            }
                        }
                        None => v.iter_mut().for_each(|vv| *vv = ZERO),
                    }
                };
                let off = b * m;
                // Pi^1: R k^2 S0.
                for (xv, sv) in x.iter_mut().zip(&s0) {
                    *xv = k * k * sv;
                }
                lu.solve_in_place(&mut x);
                accumulate(&mut acc[off..off + m], node.weight, &x);
                // Pi^2: -B R (g(t-e) + g(t+e)).
                for r in 0..m {
                    x[r] = -bcoef * (gm[r] + gp[r]);
                }
                lu.solve_in_place(&mut x);
                accumulate(&mut acc[d + off..d + off + m], node.weight, &x);
                // Pi^3: C R' (g(t-e) - g(t+e)).
                for r in 0..m {
                    x[r] = ccoef * (gm[r] - gp[r]);
                }
                dr(&mut x, &mut tmp);
                accumulate(&mut acc[2 * d + off..2 * d + off + m], node.weight, &x);
                // Pi^4: 2 R' S1.
                for (xv, sv) in x.iter_mut().zip(&s1) {
                    *xv = 2.0 * sv;
                }
                dr(&mut x, &mut tmp);
                accumulate(&mut acc[3 * d + off..3 * d + off + m], node.weight, &x);
                // Pi^5: R'' S0 = -R A'' R S0 + 2 R A' R A' R S0.
                let mut u0 = s0.clone();
                lu.solve_in_place(&mut u0);
                x.iter_mut().for_each(|v| *v = ZERO);
                if let Some(a1) = a1 {
                    a1.apply_complex(&u0, &mut tmp);
                    lu.solve_in_place(&mut tmp);
                    let mut t2 = vec![ZERO; m];
                    a1.apply_complex(&tmp, &mut t2);
                    for (xv, tv) in x.iter_mut().zip(&t2) {
                        *xv += 2.0 * tv;
                    }
                }
                if let Some(a2) = a2 {
                    a2.apply_complex(&u0, &mut tmp);
                    for (xv, tv) in x.iter_mut().zip(&tmp) {
                        *xv -= tv;
                    }
                }
                lu.solve_in_place(&mut x);
                accumulate(&mut acc[4 * d + off..4 * d + off + m], node.weight, &x);
            }
        }
        Ok(acc)
    })?;
    let mut total = vec![0.0; 5 * d];
    for p in &parts {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    let mut terms: [Vec<f64>; 5] = Default::default();
    let mut sum = vec![0.0; d];
    for (q, term) in terms.iter_mut().enumerate() {
        let mut phys = vec![0.0; d];
        fam.from_working(&total[q * d..(q + 1) * d], &mut phys);
        for (s, v) in sum.iter_mut().zip(&phys) {
            *s += v;
        }
        *term = phys;
    }
    Ok(PiTerms { t: times[i], epsilon: e as f64 * len / n as f64, terms, sum })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_psi_series_matches_closed_form() {
        for x in [Complex64::new(0.49, 0.0), Complex64::new(0.3, 0.35), Complex64::new(-0.2, 0.4)] {
            let (p, s) = phi_psi(x);
            let e = (-x).exp();
            assert!((p - (1.0 - e) / x).norm() < 1e-13);
            assert!((s - (1.0 - e * (1.0 + x)) / (x * x)).norm() < 1e-12);
        }
        let (p, s) = phi_psi(Complex64::new(0.0, 0.0));
        assert_eq!((p.re, s.re), (1.0, 0.5));
    }

    #[test]
    fn partial_sums_match_quadrature_for_linear_data() {
        // g(s) = 1 + 2s is reproduced exactly by the interpolant.
        let k = Complex64::new(2.0, 1.5);
        let (n, len) = (20, 1.0);
        let tab = NodeTables::new(k, n, len).unwrap();
        let g: Vec<f64> = (0..=n).map(|i| 1.0 + 2.0 * i as f64 / n as f64).collect();
        let part = Partials::new(&tab, &g, 1);
        let (mut s0, mut s1) = ([ZERO], [ZERO]);
        let i = 7;
        let t = i as f64 / n as f64;
        part.sums(&tab, i, 0, &mut s0, &mut s1);
        // Fine midpoint oracle split at s = t.
        let fine = 200_000;
        let (mut o0, mut o1) = (ZERO, ZERO);
        for j in 0..fine {
            let s = (j as f64 + 0.5) / fine as f64;
            let gs = 1.0 + 2.0 * s;
            let kv = crate::contour::green_kernel(k, t, s, len).unwrap().value;
            let dk = crate::contour::green_kernel_dt(k, t, s, len).unwrap();
            o0 += kv * gs / fine as f64;
            o1 += dk * gs / fine as f64;
        }
        assert!((s0[0] - o0).norm() < 1e-8, "{} vs {}", s0[0], o0);
        assert!((s1[0] - o1).norm() < 1e-5, "{} vs {}", s1[0], o1);
    }
}
