//! Probe-based estimates of the resolvent bounds the solver relies on.
//!
//! Operator sup-norms are bounded from below by `max_p ||X p|| / ||p||` over the
//! constant probe, 64 seeded random sign probes and the coordinate probes of a
//! coarse node subsample.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::family::OperatorFamily;
use super::grid::GridFunction;
use crate::error::{Error, Result};

pub const PROBE_SEED: u64 = 0x5EED;
const RANDOM_PROBES: usize = 64;
const COORDINATE_PROBES: usize = 32;

/// Estimates of the constants in the sectorial and regularity bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub m_est: f64,
    pub c1_est: f64,
    pub c2_est: f64,
    pub hoelder_quotient_est: f64,
    pub z_probes: Vec<f64>,
    pub t_probes: Vec<f64>,
    pub theta2: f64,
    /// `(quantity, t, z, value)` per probe point.
    pub rows: Vec<(&'static str, f64, f64, f64)>,
}

impl HypothesisReport {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "quantity,t,z,value")?;
        for (q, t, z, v) in &self.rows {
            writeln!(w, "{q},{t:.16e},{z:.16e},{v:.16e}")?;
        }
        for (q, v) in [
            ("M_est", self.m_est),
            ("C1_est", self.c1_est),
            ("C2_est", self.c2_est),
            ("hoelder_quotient_est", self.hoelder_quotient_est),
        ] {
            writeln!(w, "{q},nan,nan,{v:.16e}")?;
        }
        Ok(())
    }
}

/// The fixed probe set for a grid of `n` nodes.
pub fn probe_vectors(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut probes = vec![vec![1.0; n]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_PROBES {
        probes.push((0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect());
    }
    let stride = n.div_ceil(COORDINATE_PROBES).max(1);
    for k in (0..n).step_by(stride) {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        probes.push(e);
    }
    probes
}

/// Lower-bound estimate of `||X||_inf` for a linear map given by `apply`.
pub fn estimate_norm(
    fam: &OperatorFamily,
    probes: &[Vec<f64>],
    mut apply: impl FnMut(&GridFunction) -> Result<GridFunction>,
) -> Result<f64> {
    let mut best = 0.0_f64;
    for p in probes {
        let g = GridFunction::from_real(*fam.grid(), p)?;
        let out = apply(&g)?;
        best = best.max(out.sup_norm() / g.sup_norm());
    }
    Ok(best)
}

/// Probes the sectorial bound and the t-regularity of the resolvent.
pub fn verify_hypotheses(
    fam: &OperatorFamily,
    lambda: f64,
    z_probes: &[f64],
    t_probes: &[f64],
    theta2: f64,
) -> Result<HypothesisReport> {
    if z_probes.is_empty() || t_probes.is_empty() {
        return Err(Error::Parameter("probe grids must be nonempty".into()));
    }
    if z_probes.iter().any(|z| !(*z >= 0.0)) {
        return Err(Error::Parameter("z probes must be real and >= 0".into()));
    }
    if !(theta2 > 0.0 && theta2 < 1.0) {
        return Err(Error::Parameter(format!("2 theta = {theta2} outside (0, 1)")));
    }
    let probes = probe_vectors(fam.grid().len(), PROBE_SEED);
    let mut rep = HypothesisReport {
        m_est: 0.0,
        c1_est: 0.0,
        c2_est: 0.0,
        hoelder_quotient_est: 0.0,
        z_probes: z_probes.to_vec(),
        t_probes: t_probes.to_vec(),
        theta2,
        rows: Vec::new(),
    };
    for &t in t_probes {
        for &z in z_probes {
            let zc = Complex64::new(z, 0.0);
            for (order, name) in [(0, "M"), (1, "C1"), (2, "C2")] {
                let v = if order > 0 && fam.is_frozen() {
                    0.0
                } else {
                    (z + 1.0) * estimate_norm(fam, &probes, |g| fam.resolvent_solve(t, lambda, zc, g, order))?
                };
                rep.rows.push((name, t, z, v));
                let slot = match order {
                    0 => &mut rep.m_est,
                    1 => &mut rep.c1_est,
                    _ => &mut rep.c2_est,
                };
                *slot = slot.max(v);
            }
        }
    }
    if !fam.is_frozen() {
        for (k, &t) in t_probes.iter().enumerate() {
            for &s in &t_probes[k + 1..] {
                if t == s {
                    continue;
                }
                for &z in z_probes {
                    let zc = Complex64::new(z, 0.0);
                    let diff = estimate_norm(fam, &probes, |g| {
                        let mut a = fam.resolvent_solve(t, lambda, zc, g, 2)?;
                        let b = fam.resolvent_solve(s, lambda, zc, g, 2)?;
                        a.axpy(Complex64::new(-1.0, 0.0), &b)?;
                        Ok(a)
                    })?;
                    let q = (z + 1.0) * diff / (t - s).abs().powf(theta2);
                    rep.rows.push(("hoelder_quotient", t.min(s), z, q));
                    rep.hoelder_quotient_est = rep.hoelder_quotient_est.max(q);
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc_operator::PolarDiscGrid;

    #[test]
    fn probes_are_deterministic() {
        assert_eq!(probe_vectors(50, 7), probe_vectors(50, 7));
        assert_ne!(probe_vectors(50, 7), probe_vectors(50, 8));
        assert_eq!(probe_vectors(64, 1).len(), 1 + 64 + 32);
    }

    #[test]
    fn frozen_report_has_zero_derivative_constants() {
        let g = PolarDiscGrid::new(8, 8).unwrap();
        let fam = OperatorFamily::frozen(g, 1.0).unwrap();
        let rep = verify_hypotheses(&fam, 0.0, &[0.0, 10.0], &[0.5], 0.5).unwrap();
        assert_eq!(rep.c1_est, 0.0);
        assert_eq!(rep.c2_est, 0.0);
        assert!(rep.m_est > 0.0 && rep.m_est.is_finite());
        assert!(verify_hypotheses(&fam, 0.0, &[], &[0.5], 0.5).is_err());
        assert!(verify_hypotheses(&fam, 0.0, &[-1.0], &[0.5], 0.5).is_err());
    }
}
