//! Uniform time grids and grid-function-valued time series.

use crate::error::{Error, Result};

/// Uniform grid `start = t_0 < t_1 < ... < t_N = end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    end: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, intervals: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::Parameter(format!("time interval [{start}, {end}] is empty")));
        }
        if intervals == 0 {
            return Err(Error::Parameter("time grid needs at least one interval".into()));
        }
        Ok(Self { start, end, intervals })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / self.intervals as f64
    }

    /// Node `k`; the last node is `end` exactly.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.end
        } else {
            self.start + k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    /// Same node layout translated by `offset`.
    pub fn shifted(&self, offset: f64) -> TimeGrid {
        TimeGrid { start: self.start + offset, end: self.end + offset, intervals: self.intervals }
    }

    pub(crate) fn same_nodes(&self, other: &TimeGrid) -> bool {
        self.intervals == other.intervals
            && (self.start - other.start).abs() <= 1e-12 * (1.0 + self.start.abs())
            && (self.end - other.end).abs() <= 1e-12 * (1.0 + self.end.abs())
    }
}

/// A function `[a, b] -> E` sampled on a uniform grid; each node holds a
/// real vector of length `dim` (a grid function, or a scalar when `dim == 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGridFunction {
    grid: TimeGrid,
    dim: usize,
    data: Vec<f64>,
}

impl TimeGridFunction {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self { grid, dim, data: vec![0.0; grid.len() * dim] }
    }

    pub fn from_data(grid: TimeGrid, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != grid.len() * dim {
            return Err(Error::GridMismatch(format!(
                "expected {} x {} samples, got {}",
                grid.len(),
                dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("time grid function has non-finite samples".into()));
        }
        Ok(Self { grid, dim, data })
    }

    /// Builds the function node by node; `fill(t, out)` writes the value at `t`.
    pub fn from_fn(grid: TimeGrid, dim: usize, mut fill: impl FnMut(f64, &mut [f64])) -> Self {
        let mut f = Self::zeros(grid, dim);
        for k in 0..grid.len() {
            let t = grid.node(k);
            fill(t, f.node_mut(k));
        }
        f
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    /// `max_k ||f(t_k)||_inf`.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn node_norm(&self, k: usize) -> f64 {
        self.node(k).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// Same samples re-labelled on a translated grid.
    pub fn shifted(&self, offset: f64) -> Self {
        Self { grid: self.grid.shifted(offset), dim: self.dim, data: self.data.clone() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid, dim: self.dim, data: self.data.iter().map(|v| v * factor).collect() }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || !self.grid.same_nodes(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "[{}, {}]x{} (dim {}) vs [{}, {}]x{} (dim {})",
                self.grid.start,
                self.grid.end,
                self.grid.intervals,
                self.dim,
                other.grid.start,
                other.grid.end,
                other.grid.intervals,
                other.dim
            )));
        }
        Ok(())
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + factor * b).collect();
        Ok(Self { grid: self.grid, dim: self.dim, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    /// `||self - other||` in the max-over-nodes sup norm.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.data.iter().zip(&other.data).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Linear interpolation in time at `t` (clamped to the grid).
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.grid.step();
        let x = ((t - self.grid.start) / h).clamp(0.0, self.grid.intervals as f64);
        let k = (x.floor() as usize).min(self.grid.intervals - 1);
        let frac = x - k as f64;
        let (lo, hi) = (self.node(k), self.node(k + 1));
        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *o = (1.0 - frac) * a + frac * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_node_is_exact() {
        let g = TimeGrid::new(0.1, 0.7, 3).unwrap();
        assert_eq!(g.node(3), 0.7);
        assert!((g.node(1) - 0.3).abs() < 1e-15);
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_linear_data() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let f = TimeGridFunction::from_fn(g, 2, |t, out| {
            out[0] = 2.0 * t + 1.0;
            out[1] = -t;
        });
        let mut v = [0.0; 2];
        f.interpolate(0.6, &mut v);
        assert!((v[0] - 2.2).abs() < 1e-14 && (v[1] + 0.6).abs() < 1e-14);
        f.interpolate(1.5, &mut v);
        assert!((v[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = TimeGridFunction::zeros(TimeGrid::new(0.0, 1.0, 4).unwrap(), 1);
        let b = TimeGridFunction::zeros(TimeGrid::new(0.0, 1.0, 8).unwrap(), 1);
        assert!(matches!(a.distance(&b), Err(Error::GridMismatch(_))));
    }
}
