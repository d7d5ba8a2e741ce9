//! Cell-centred polar grid on the unit disc and complex grid functions.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes `(r_i, theta_j)` with `r_i = (i + 1/2) / Nr` and `theta_j = 2 pi j / Ntheta`.
/// Flat index is `i * Ntheta + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarDiscGrid {
    nr: usize,
    ntheta: usize,
}

impl PolarDiscGrid {
    pub fn new(nr: usize, ntheta: usize) -> Result<Self> {
        if nr < 4 {
            return Err(Error::Parameter(format!("Nr = {nr} must be at least 4")));
        }
        if ntheta < 8 || ntheta % 2 != 0 {
            return Err(Error::Parameter(format!("Ntheta = {ntheta} must be even and at least 8")));
        }
        Ok(Self { nr, ntheta })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn len(&self) -> usize {
        self.nr * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dr(&self) -> f64 {
        1.0 / self.nr as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.ntheta as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.nr as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.nr).map(|i| self.radius(i)).collect()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ntheta + j
    }

    /// `(xi, eta)` of every node in flat order.
    pub fn cartesian_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.nr).flat_map(move |i| {
            let r = self.radius(i);
            (0..self.ntheta).map(move |j| {
                let th = self.angle(j);
                (r * th.cos(), r * th.sin())
            })
        })
    }

    /// `(r, theta)` of every node in flat order.
    pub fn polar_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.nr).flat_map(move |i| (0..self.ntheta).map(move |j| (self.radius(i), self.angle(j))))
    }

    /// Samples `f(r, theta)` on the grid.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.polar_nodes().map(|(r, th)| f(r, th)).collect()
    }
}

/// Complex-valued function on a [`PolarDiscGrid`] with the sup norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: PolarDiscGrid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: PolarDiscGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn new(grid: PolarDiscGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain("grid function has non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: PolarDiscGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_polar(grid: PolarDiscGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.polar_nodes().map(|(r, th)| Complex64::new(f(r, th), 0.0)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &PolarDiscGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn imag_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &GridFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("grid functions live on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("grid functions live on different grids".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_radii() {
        let g = PolarDiscGrid::new(4, 8).unwrap();
        assert_eq!(g.radii(), vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(PolarDiscGrid::new(10, 16).unwrap().len(), 160);
    }

    #[test]
    fn bad_sizes() {
        assert!(matches!(PolarDiscGrid::new(3, 8), Err(Error::Parameter(_))));
        assert!(PolarDiscGrid::new(4, 9).is_err());
        assert!(PolarDiscGrid::new(4, 6).is_err());
    }

    #[test]
    fn nodes_stay_inside_open_disc() {
        let g = PolarDiscGrid::new(7, 12).unwrap();
        for (x, y) in g.cartesian_nodes() {
            let r = (x * x + y * y).sqrt();
            assert!(r > 0.0 && r < 1.0);
        }
    }

    #[test]
    fn sup_norm_uses_moduli() {
        let g = PolarDiscGrid::new(4, 8).unwrap();
        let mut f = GridFunction::zeros(g);
        f.values_mut()[5] = Complex64::new(3.0, -4.0);
        assert_eq!(f.sup_norm(), 5.0);
        assert!(GridFunction::new(g, vec![Complex64::new(f64::NAN, 0.0); 32]).is_err());
    }
}
