use proptest::prelude::*;

use visclimit::layers::{core_identity_residual, LayerSpec};
use visclimit::polyparams::{
    c3_bar, c3_star, classify, from_monomial, in_interior_j0, in_j, poly_min, tau, to_monomial,
    Alpha, Coeffs, RegimeKind,
};
use visclimit::profile::rescale_by_norm;
use visclimit::riccati::{default_grid, solve_lower, solve_upper};

fn brute_min(c: &Coeffs, n: usize) -> f64 {
    (0..n)
        .map(|i| c.p(-1.0 + 2.0 * i as f64 / (n - 1) as f64))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #[test]
    fn regions_are_nested(c1 in -0.5f64..5.0, c2 in -0.5f64..5.0, c3 in -10.0f64..5.0,
                          nu1 in 1e-3f64..1.0, nu2 in 1e-3f64..1.0) {
        let (lo, hi) = if nu1 < nu2 { (nu1, nu2) } else { (nu2, nu1) };
        let c = Coeffs::new(c1, c2, c3);
        if in_j(0.0, &c) {
            prop_assert!(in_j(lo, &c));
        }
        if in_j(lo, &c) {
            prop_assert!(in_j(hi, &c));
        }
    }

    #[test]
    fn j0_is_nonnegativity_of_p(c1 in -1.0f64..5.0, c2 in -1.0f64..5.0, c3 in -8.0f64..5.0) {
        let c = Coeffs::new(c1, c2, c3);
        let m = brute_min(&c, 2001);
        // near-boundary cases are left to the acceptance sweep
        if m.abs() > 1e-3 {
            prop_assert_eq!(in_j(0.0, &c), m >= 0.0);
        }
    }

    #[test]
    fn poly_min_beats_sampling(c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, c3 in -5.0f64..5.0) {
        let c = Coeffs::new(c1, c2, c3);
        let (x, v) = poly_min(&c);
        prop_assert!((-1.0..=1.0).contains(&x));
        prop_assert!((c.p(x) - v).abs() < 1e-12);
        prop_assert!(v <= brute_min(&c, 4001) + 1e-12);
    }

    #[test]
    fn monomial_round_trip(c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, c3 in -5.0f64..5.0) {
        let c = Coeffs::new(c1, c2, c3);
        let (a0, a1, a2) = to_monomial(&c);
        let back = from_monomial(a0, a1, a2);
        prop_assert!((back.c1 - c1).abs() < 1e-12);
        prop_assert!((back.c2 - c2).abs() < 1e-12);
        prop_assert!((back.c3 - c3).abs() < 1e-12);
    }

    #[test]
    fn alpha_determines_kappa(c1 in 0.0f64..3.0, c2 in 0.0f64..3.0, t in -1.0f64..3.0) {
        prop_assume!(c1 + c2 > 1e-3);
        let c = Coeffs::new(c1, c2, c3_star(c1, c2).unwrap() + t.max(0.0));
        let r = classify(&c).unwrap();
        prop_assert!(r.kind != RegimeKind::OutsideJ0);
        let alpha = r.alpha.unwrap();
        prop_assert_eq!(r.kappa.unwrap() == 1, alpha == Alpha::One);
        prop_assert_eq!(alpha == Alpha::One, in_interior_j0(&c) && t > 0.0);
    }

    #[test]
    fn tau_identities(c1 in -0.009f64..5.0, c2 in -0.009f64..5.0, nu in 0.1f64..1.0) {
        let c = Coeffs::new(c1, c2, c3_bar(c1, c2, nu).unwrap() + 1.0);
        let t = tau(nu, &c).unwrap();
        prop_assert!((t.tau1 + t.tau2 - 4.0 * nu).abs() < 1e-12);
        prop_assert!((t.tau1 * t.tau2 + 4.0 * c1).abs() < 1e-12 * (1.0 + c1.abs()) + 1e-13);
        prop_assert!((t.tau1p + t.tau2p + 4.0 * nu).abs() < 1e-12);
        prop_assert!((t.tau1p * t.tau2p + 4.0 * c2).abs() < 1e-12 * (1.0 + c2.abs()) + 1e-13);
        // reflection swaps the ends
        let r = tau(nu, &c.reflected()).unwrap();
        prop_assert!((r.tau1 + t.tau2p).abs() < 1e-14);
        prop_assert!((r.tau2 + t.tau1p).abs() < 1e-14);
    }

    #[test]
    fn tanh_core_identity(nu in 1e-4f64..1.0, c1 in 0.1f64..5.0, c2 in 0.1f64..5.0,
                          x_k in -0.9f64..0.9, x in -1.0f64..1.0) {
        let c = Coeffs::new(c1, c2, 0.0);
        let spec = LayerSpec::new(nu, c, x_k, None).unwrap();
        prop_assert!(core_identity_residual(&spec, x).abs() <= 1e-12 * (1.0 + c.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reflection_maps_upper_to_lower(c1 in 0.0f64..3.0, c2 in 0.0f64..3.0, t in 0.0f64..2.0,
                                      nu in 0.02f64..0.5) {
        prop_assume!(c1 + c2 > 0.05);
        let c = Coeffs::new(c1, c2, c3_bar(c1, c2, nu).unwrap() + t);
        let g = default_grid();
        let up = solve_upper(nu, &c.reflected(), &g).unwrap();
        let lo = solve_lower(nu, &c, &g).unwrap();
        for &x in g.iter().step_by(10) {
            prop_assert!((lo.value_at(x) + up.value_at(-x)).abs() < 1e-8);
        }
    }

    #[test]
    fn scaling_by_the_norm(c1 in 0.0f64..3.0, c2 in 0.0f64..3.0, t in 0.0f64..2.0,
                           nu in 0.02f64..0.5, lambda in 0.25f64..4.0) {
        prop_assume!(c1 + c2 > 0.05);
        let c = Coeffs::new(c1, c2, c3_bar(c1, c2, nu).unwrap() + t);
        let g = default_grid();
        let big = solve_upper(nu, &c, &g).unwrap();
        let scaled = rescale_by_norm(&big, lambda).unwrap();
        let direct = solve_upper(scaled.nu, &scaled.c, &g).unwrap();
        for &x in g.iter().step_by(10) {
            prop_assert!((scaled.value_at(x) - direct.value_at(x)).abs() < 1e-8 * (1.0 + big.max_abs()));
        }
    }
}
