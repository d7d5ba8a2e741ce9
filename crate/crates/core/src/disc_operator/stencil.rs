//! Finite-difference stencils for the polar Laplacian `Delta_h` and the radial
//! drift `D_h = r d/dr`, in physical (CSR) form and block-diagonalized by a
//! real Fourier basis in the angle.
//!
//! Interior rings use centred differences for `u_rr + u_r / r`. The innermost
//! ring couples across the pole to the antipodal node (ghost at `r = -dr/2`),
//! whose Laplacian weight vanishes identically. The outermost ring uses a
//! non-uniform three-point stencil with the Dirichlet value at `r = 1`.

use super::grid::PolarDiscGrid;
use crate::linalg::{Csr, Tridiag};

/// Radial weights for ring `i`: `(lower, diag, upper)` for `Delta_h` and `D_h`.
/// On ring 0, `lower` multiplies the antipodal value on ring 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RadialRow {
    pub lap: [f64; 3],
    pub drift: [f64; 3],
}

pub(crate) fn radial_row(grid: &PolarDiscGrid, i: usize) -> RadialRow {
    let h = grid.dr();
    let r = grid.radius(i);
    if i + 1 < grid.nr() {
        RadialRow {
            lap: [1.0 / (h * h) - 1.0 / (2.0 * h * r), -2.0 / (h * h), 1.0 / (h * h) + 1.0 / (2.0 * h * r)],
            drift: [-r / (2.0 * h), 0.0, r / (2.0 * h)],
        }
    } else {
        // Neighbours at distances hm = h (inside) and hp = h / 2 (boundary, value 0).
        let (hm, hp) = (h, 0.5 * h);
        let urr = [2.0 / (hm * (hm + hp)), -2.0 / (hm * hp)];
        let ur = [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp)];
        RadialRow { lap: [urr[0] + ur[0] / r, urr[1] + ur[1] / r, 0.0], drift: [r * ur[0], r * ur[1], 0.0] }
    }
}

fn angular_weight(grid: &PolarDiscGrid, i: usize) -> f64 {
    let r = grid.radius(i);
    let dth = grid.dtheta();
    1.0 / (r * r * dth * dth)
}

/// Physical sparse matrices of `Delta_h` and `D_h`.
pub(crate) fn assemble_physical(grid: &PolarDiscGrid) -> (Csr, Csr) {
    let (nr, nt) = (grid.nr(), grid.ntheta());
    let mut lap = Vec::with_capacity(grid.len() * 5);
    let mut drift = Vec::with_capacity(grid.len() * 3);
    for i in 0..nr {
        let row = radial_row(grid, i);
        let ang = angular_weight(grid, i);
        for j in 0..nt {
            let p = grid.index(i, j);
            let inner = if i == 0 { grid.index(0, (j + nt / 2) % nt) } else { grid.index(i - 1, j) };
            lap.push((p, inner, row.lap[0]));
            lap.push((p, p, row.lap[1] - 2.0 * ang));
            if i + 1 < nr {
                lap.push((p, grid.index(i + 1, j), row.lap[2]));
            }
            lap.push((p, grid.index(i, (j + 1) % nt), ang));
            lap.push((p, grid.index(i, (j + nt - 1) % nt), ang));
            drift.push((p, inner, row.drift[0]));
            drift.push((p, p, row.drift[1]));
            if i + 1 < nr {
                drift.push((p, grid.index(i + 1, j), row.drift[2]));
            }
        }
    }
    (Csr::from_triplets(grid.len(), lap), Csr::from_triplets(grid.len(), drift))
}

/// Orthonormal real Fourier basis on `Ntheta` equispaced angles together with
/// the per-class radial blocks of `Delta_h` and `D_h`.
///
/// Slot `s = 0` is the constant, `1..Ntheta/2` are cosines, `Ntheta/2` the
/// alternating mode and the rest sines. Slot `s` has angular class
/// `m = s` for `s <= Ntheta/2` and `m = s - Ntheta/2` otherwise.
#[derive(Debug, Clone)]
pub(crate) struct ModeBasis {
    nr: usize,
    nt: usize,
    basis: Vec<f64>,
    lap_blocks: Vec<Tridiag>,
    drift_blocks: Vec<Tridiag>,
}

impl ModeBasis {
    pub fn new(grid: &PolarDiscGrid) -> Self {
        let (nr, nt) = (grid.nr(), grid.ntheta());
        let half = nt / 2;
        let mut basis = vec![0.0; nt * nt];
        let c0 = 1.0 / (nt as f64).sqrt();
        let c1 = (2.0 / nt as f64).sqrt();
        for s in 0..nt {
            for j in 0..nt {
                let th = grid.angle(j);
                basis[s * nt + j] = if s == 0 {
                    c0
                } else if s < half {
                    c1 * (s as f64 * th).cos()
                } else if s == half {
                    if j % 2 == 0 { c0 } else { -c0 }
                } else {
                    c1 * ((s - half) as f64 * th).sin()
                };
            }
        }
        let mut lap_blocks = Vec::with_capacity(half + 1);
        let mut drift_blocks = Vec::with_capacity(half + 1);
        for m in 0..=half {
            let symbol = -(2.0 - 2.0 * (m as f64 * grid.dtheta()).cos());
            let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut lap = Tridiag::zeros(nr);
            let mut drift = Tridiag::zeros(nr);
            for i in 0..nr {
                let row = radial_row(grid, i);
                lap.diag[i] = row.lap[1] + symbol * angular_weight(grid, i);
                drift.diag[i] = row.drift[1];
                if i == 0 {
                    lap.diag[0] += parity * row.lap[0];
                    drift.diag[0] += parity * row.drift[0];
                } else {
                    lap.lower[i] = row.lap[0];
                    drift.lower[i] = row.drift[0];
                }
                if i + 1 < nr {
                    lap.upper[i] = row.lap[2];
                    drift.upper[i] = row.drift[2];
                }
            }
            lap_blocks.push(lap);
            drift_blocks.push(drift);
        }
        Self { nr, nt, basis, lap_blocks, drift_blocks }
    }

    pub fn block_count(&self) -> usize {
        self.nt
    }

    pub fn block_len(&self) -> usize {
        self.nr
    }

    pub fn class(&self, slot: usize) -> usize {
        if slot <= self.nt / 2 {
            slot
        } else {
            slot - self.nt / 2
        }
    }

    pub fn lap_block(&self, slot: usize) -> &Tridiag {
        &self.lap_blocks[self.class(slot)]
    }

    pub fn drift_block(&self, slot: usize) -> &Tridiag {
        &self.drift_blocks[self.class(slot)]
    }

    /// Physical `(i, j)` layout -> slot-major `(s, i)` coefficients.
    pub fn forward(&self, phys: &[f64], work: &mut [f64]) {
        let (nr, nt) = (self.nr, self.nt);
        for s in 0..nt {
            let b = &self.basis[s * nt..(s + 1) * nt];
            for i in 0..nr {
                let row = &phys[i * nt..(i + 1) * nt];
                work[s * nr + i] = b.iter().zip(row).map(|(x, y)| x * y).sum();
            }
        }
    }

    pub fn inverse(&self, work: &[f64], phys: &mut [f64]) {
        let (nr, nt) = (self.nr, self.nt);
        phys.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..nt {
            let b = &self.basis[s * nt..(s + 1) * nt];
            for i in 0..nr {
                let c = work[s * nr + i];
                if c == 0.0 {
                    continue;
                }
                for (p, x) in phys[i * nt..(i + 1) * nt].iter_mut().zip(b) {
                    *p += c * x;
                }
            }
        }
    }
}

/// Weights making frozen `Delta_h` symmetric: proportional to `r_i` on the
/// interior rings, with the last ring fixed by the boundary stencil.
pub(crate) fn symmetry_weights(grid: &PolarDiscGrid) -> Vec<f64> {
    let nr = grid.nr();
    let mut w: Vec<f64> = (0..nr).map(|i| grid.radius(i)).collect();
    let (a, b) = (radial_row(grid, nr - 2), radial_row(grid, nr - 1));
    w[nr - 1] = w[nr - 2] * a.lap[2] / b.lap[0];
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_weight_of_laplacian_vanishes() {
        let g = PolarDiscGrid::new(8, 16).unwrap();
        let row = radial_row(&g, 0);
        assert!(row.lap[0].abs() < 1e-12);
        assert!((row.drift[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn basis_round_trip() {
        let g = PolarDiscGrid::new(5, 12).unwrap();
        let mb = ModeBasis::new(&g);
        let v: Vec<f64> = (0..g.len()).map(|k| ((k * 7919) % 23) as f64 - 11.0).collect();
        let mut w = vec![0.0; g.len()];
        let mut back = vec![0.0; g.len()];
        mb.forward(&v, &mut w);
        mb.inverse(&w, &mut back);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn blocks_reproduce_physical_matrices() {
        let g = PolarDiscGrid::new(6, 10).unwrap();
        let mb = ModeBasis::new(&g);
        let (lap, drift) = assemble_physical(&g);
        let v: Vec<f64> = g.polar_nodes().map(|(r, th)| (3.0 * r).sin() * (1.0 + (2.0 * th).cos() + 0.3 * (3.0 * th).sin())).collect();
        for (mat, which) in [(&lap, 0), (&drift, 1)] {
            let mut direct = vec![0.0; g.len()];
            mat.apply(&v, &mut direct);
            let mut w = vec![0.0; g.len()];
            mb.forward(&v, &mut w);
            let mut out = vec![0.0; g.len()];
            for s in 0..mb.block_count() {
                let blk = if which == 0 { mb.lap_block(s) } else { mb.drift_block(s) };
                blk.apply(&w[s * 6..(s + 1) * 6], &mut out[s * 6..(s + 1) * 6]);
            }
            let mut via = vec![0.0; g.len()];
            mb.inverse(&out, &mut via);
            for (a, b) in direct.iter().zip(&via) {
                assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }
}
