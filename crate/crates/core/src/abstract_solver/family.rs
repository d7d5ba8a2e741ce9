//! The operator-family interface the solver integrates against.
//!
//! A family `A(t)`, `t` in `[0, L]`, acts on a real space of dimension `dim`.
//! Internally it is block diagonal in a fixed orthogonal "working" basis:
//! block `b` is a real tridiagonal matrix of size `block_len`, and blocks with
//! equal `block_class` share their operator.

use crate::error::{Error, Result};
use crate::linalg::Tridiag;

pub trait EvolutionFamily: Sync {
    /// Physical dimension of a value `w(t)`.
    fn dim(&self) -> usize;

    /// Length `L` of the time interval `[0, L]`.
    fn length(&self) -> f64;

    fn block_count(&self) -> usize;

    fn block_len(&self) -> usize;

    fn block_class(&self, block: usize) -> usize;

    /// Physical vector -> working coordinates (`block_count * block_len` entries).
    fn to_working(&self, phys: &[f64], work: &mut [f64]);

    fn from_working(&self, work: &[f64], phys: &mut [f64]);

    /// `d^order/dt^order A(t)` restricted to `block`.
    fn block_operator(&self, t: f64, order: usize, block: usize) -> Result<Tridiag>;

    /// `d^order/dt^order A(t) v` in physical coordinates, assembled independently
    /// of the block structure.
    fn apply_physical(&self, t: f64, order: usize, v: &[f64], out: &mut [f64]) -> Result<()>;

    /// True when `A` does not depend on `t` (then `R_lambda = 0`).
    fn is_time_independent(&self) -> bool;
}

/// Scalar family `A(t) = -a(t)` with `a` a polynomial in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFamily {
    coeffs: Vec<f64>,
    length: f64,
}

impl ScalarFamily {
    /// `a(t) = sum_k coeffs[k] t^k` on `[0, length]`.
    pub fn polynomial(coeffs: Vec<f64>, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Parameter(format!("interval length {length} must be positive")));
        }
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("scalar family needs finite coefficients".into()));
        }
        Ok(Self { coeffs, length })
    }

    pub fn constant(a: f64, length: f64) -> Result<Self> {
        Self::polynomial(vec![a], length)
    }

    /// `d^order/dt^order a(t)`.
    pub fn a_derivative(&self, t: f64, order: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(order)
            .map(|(k, c)| {
                let falling: f64 = ((k - order + 1)..=k).map(|m| m as f64).product();
                c * falling * t.powi((k - order) as i32)
            })
            .sum()
    }

    fn check_order(order: usize) -> Result<()> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(())
    }
}

impl EvolutionFamily for ScalarFamily {
    fn dim(&self) -> usize {
        1
    }

    fn length(&self) -> f64 {
        self.length
    }

    fn block_count(&self) -> usize {
        1
    }

    fn block_len(&self) -> usize {
        1
    }

    fn block_class(&self, _block: usize) -> usize {
        0
    }

    fn to_working(&self, phys: &[f64], work: &mut [f64]) {
        work[0] = phys[0];
    }

    fn from_working(&self, work: &[f64], phys: &mut [f64]) {
        phys[0] = work[0];
    }

    fn block_operator(&self, t: f64, order: usize, _block: usize) -> Result<Tridiag> {
        Self::check_order(order)?;
        Ok(Tridiag { lower: vec![0.0], diag: vec![-self.a_derivative(t, order)], upper: vec![0.0] })
    }

    fn apply_physical(&self, t: f64, order: usize, v: &[f64], out: &mut [f64]) -> Result<()> {
        Self::check_order(order)?;
        out[0] = -self.a_derivative(t, order) * v[0];
        Ok(())
    }

    fn is_time_independent(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| *c == 0.0)
    }
}
