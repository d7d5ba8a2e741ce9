//! Recorded reference constants. Each value was produced once by the named
//! oracle and is re-derived by the acceptance suite.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Sector half-angles of the boundary minimum table.
pub const LEMMA_DELTAS: [f64; 3] = [PI / 12.0, PI / 6.0, PI / 4.0];
/// Interval lengths of the boundary minimum table.
pub const LEMMA_HORIZONS: [f64; 3] = [0.5, 1.0, 2.0];
pub const LEMMA_R0: f64 = 1.0;
pub const LEMMA_RMAX: f64 = 1e4;

/// `min |1 + exp(-T sqrt(-z))|` on the sector boundary, rows by delta, columns by `T`.
/// The ray minimum depends on `T sqrt|z|` only, so rows repeat while it stays inside the ray.
pub const LEMMA_MINIMA: [[f64; 3]; 3] = [
    [0.336_808_664_670_687_76, 0.336_808_664_670_687_76, 0.336_808_664_670_687_76],
    [0.560_440_211_180_974_5, 0.560_440_211_180_974_5, 0.560_440_211_180_974_5],
    [0.711_280_978_318_014_8, 0.711_280_978_318_014_8, 0.711_280_978_318_014_7],
];

/// Scalar model `a = 0`, `lambda = 1`, `T = 1`, `g = 1` at `t = 1/2`.
pub const SCALAR_W_HALF: f64 = -0.113_181_116_029_925_98;
/// `K(0.5, 0.25)` for `sqrt(-z) = 1`, `T = 1`.
pub const KERNEL_SAMPLE: f64 = 0.112_010_686_434_457_29;
/// Boundary coefficient at `t = 0.5` for `sqrt(-z) = 1`, `T = 1`.
pub const BOUNDARY_SAMPLE: f64 = 0.886_818_883_970_073_9;
/// First zero of `J0`.
pub const BESSEL_J01: f64 = 2.404_825_557_695_773;
/// Shift selected on `power(2)`, `t_n = 0.25`, grid `(16, 24, 64)`, default search.
pub const LAMBDA_STAR_POWER2: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenEntry {
    pub name: String,
    pub value: f64,
    pub oracle: &'static str,
}

pub fn lemma_name(i: usize, j: usize) -> String {
    format!("lemma_min_delta{}_T{}", ["pi/12", "pi/6", "pi/4"][i], LEMMA_HORIZONS[j])
}

/// Every recorded constant with the oracle that produced it.
pub fn ledger() -> Vec<GoldenEntry> {
    let mut out = Vec::new();
    for (i, row) in LEMMA_MINIMA.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out.push(GoldenEntry { name: lemma_name(i, j), value: *v, oracle: "dense boundary sampling" });
        }
    }
    let fixed = [
        ("scalar_w_half", SCALAR_W_HALF, "closed-form anti-periodic ODE"),
        ("kernel_sample", KERNEL_SAMPLE, "direct kernel evaluation"),
        ("boundary_sample", BOUNDARY_SAMPLE, "direct kernel evaluation"),
        ("bessel_j01", BESSEL_J01, "Bessel series with Newton iteration"),
        ("frozen_eigenvalue", -BESSEL_J01 * BESSEL_J01, "Bessel series with Newton iteration"),
        ("lambda_star_power2", LAMBDA_STAR_POWER2, "seeded probe search"),
    ];
    out.extend(fixed.into_iter().map(|(name, value, oracle)| GoldenEntry { name: name.into(), value, oracle }));
    out
}

pub fn lookup(name: &str) -> Result<f64> {
    ledger()
        .into_iter()
        .find(|e| e.name == name)
        .map(|e| e.value)
        .ok_or_else(|| Error::Parameter(format!("no golden constant named {name}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let l = ledger();
        for (k, e) in l.iter().enumerate() {
            assert!(l[k + 1..].iter().all(|o| o.name != e.name));
            assert!(e.value.is_finite());
        }
        assert!(lookup("bessel_j01").is_ok());
        assert!(lookup("missing").is_err());
    }
}
