use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use cuspcone::abstract_solver::{representation_solution, ScalarFamily, TimeGrid, TimeGridFunction};
use cuspcone::cli::RunConfig;
use cuspcone::contour::{build_contour, green_kernel, sqrt_minus, Segment};
use cuspcone::geometry::{holder_seminorm, CuspParametrization, CylinderPoint};
use cuspcone::limit_scheme::{build_truncation, cauchy_gap, TruncationRule};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn sqrt_minus_is_principal(re in -50.0..50.0f64, im in -50.0..50.0f64) {
        prop_assume!(im.abs() > 1e-6 || re < 0.0);
        let z = Complex64::new(re, im);
        let k = sqrt_minus(z).unwrap();
        prop_assert!(k.re >= 0.0);
        prop_assert!((k * k + z).norm() <= 1e-12 * (1.0 + z.norm()));
    }

    #[test]
    fn kernel_is_symmetric(r in 0.1..100.0f64, arg in -2.5..2.5f64, t in 0.0..1.0f64, s in 0.0..1.0f64, len in 0.5..2.0f64) {
        let k = sqrt_minus(Complex64::from_polar(r, PI - arg)).unwrap();
        let (t, s) = (t * len, s * len);
        let a = green_kernel(k, t, s, len).unwrap().value;
        let b = green_kernel(k, s, t, len).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-14 * (1.0 + a.norm()));
    }

    #[test]
    fn ray_real_part_matches_closed_form(delta in 0.1..1.4f64, r0 in 0.05..0.5f64) {
        let q = build_contour(delta, r0, Some(1e4), 32, 8, 1.0, 1e-8).unwrap();
        for n in q.nodes().iter().filter(|n| n.segment != Segment::Arc) {
            let expect = n.z.norm().sqrt() * (0.5 * delta).sin();
            prop_assert!((n.sqrt_mz.re - expect).abs() <= 1e-12 * (1.0 + expect));
        }
    }

    #[test]
    fn cone_cylinder_round_trip(p in 2.0..4.0f64, t in 0.01..1.0f64, rho in 0.0..1.0f64, ang in 0.0..6.28f64) {
        let param = CuspParametrization::power(p, 1.0).unwrap();
        let c = CylinderPoint::new(t, rho * ang.cos(), rho * ang.sin()).unwrap();
        let back = param.to_cylinder(param.to_cone(c).unwrap()).unwrap();
        prop_assert!((back.xi - c.xi).abs() < 1e-12 && (back.eta - c.eta).abs() < 1e-12);
    }

    #[test]
    fn truncation_decreases_to_zero(q in 0.05..0.95f64, n_max in 2usize..12) {
        let seq = build_truncation(TruncationRule::Geometric(q), n_max, 1.0).unwrap();
        prop_assert_eq!(seq.values().len(), n_max + 1);
        prop_assert!(seq.values().windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn holder_seminorm_is_absolutely_homogeneous(c in -5.0..5.0f64, freq in 0.5..4.0f64) {
        let g = TimeGridFunction::from_fn(TimeGrid::new(0.1, 1.0, 24).unwrap(), 2, |t, o| {
            o[0] = (freq * t).sin();
            o[1] = t * t;
        });
        let a = holder_seminorm(&g, 0.5, None).unwrap().seminorm;
        let b = holder_seminorm(&g.scaled(c), 0.5, None).unwrap().seminorm;
        prop_assert!((b - c.abs() * a).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn gap_against_itself_vanishes(a in -3.0..3.0f64, b in -3.0..3.0f64, n in 4usize..40) {
        let f = TimeGridFunction::from_fn(TimeGrid::new(0.2, 1.0, n).unwrap(), 1, |t, o| o[0] = a * t + b);
        prop_assert!(cauchy_gap(&f, &f).unwrap() <= 1e-15 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn representation_is_linear(a1 in -2.0..2.0f64, a2 in -2.0..2.0f64, slope in 0.0..4.0f64) {
        let fam = ScalarFamily::polynomial(vec![1.0, slope], 1.0).unwrap();
        let q = build_contour(PI / 6.0, 1.0, None, 64, 16, 1.0, 1e-6).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let g1 = TimeGridFunction::from_fn(grid, 1, |t, o| o[0] = 1.0 + t);
        let g2 = TimeGridFunction::from_fn(grid, 1, |t, o| o[0] = (3.0 * t).cos());
        let mix = g1.scaled(a1).add_scaled(a2, &g2).unwrap();
        let (w1, _) = representation_solution(&fam, &q, 2.0, &g1, false).unwrap();
        let (w2, _) = representation_solution(&fam, &q, 2.0, &g2, false).unwrap();
        let (wm, _) = representation_solution(&fam, &q, 2.0, &mix, false).unwrap();
        let expect = w1.scaled(a1).add_scaled(a2, &w2).unwrap();
        prop_assert!(wm.distance(&expect).unwrap() <= 1e-12 * (1.0 + expect.sup_norm()));
    }

    #[test]
    fn config_echo_round_trips(nr in 2usize..64, nt in 8usize..512, lambda in 0.01..1e4f64, seed in any::<u64>()) {
        let mut c = RunConfig::default();
        c.nr = nr;
        c.solver.nt = nt;
        c.solver.lambda = Some(lambda);
        c.solver.seed = seed;
        prop_assert_eq!(RunConfig::parse(&c.echo()).unwrap(), c);
    }
}
