use visclimit::polyparams::{c3_bar, c3_star};
use visclimit::riccati::{default_grid, solve_upper};
use visclimit::vanish::{
    full_window, log_grid, nonconv_search, rate_sweep, rate_sweep_with, sup_error, table1_check,
    Metric, Reference, SweepBranch, SweepOptions,
};
use visclimit::{Coeffs, Error};

#[test]
fn sup_error_shrinks_with_viscosity() {
    let c = Coeffs::new(1.0, 1.0, 0.0);
    let grid = default_grid();
    let e = |nu: f64| {
        let p = solve_upper(nu, &c, &grid).unwrap();
        sup_error(&p, Reference::EulerPlus, Metric::SupU, &full_window()).unwrap()
    };
    let (e1, e2) = (e(1e-1), e(1e-2));
    assert!(e2 > 0.0 && e2 < e1);
}

#[test]
fn metrics_are_consistent() {
    // |U^2/2 - P| = |U - V| |U + V| / 2 with V = sqrt(2P)
    let c = Coeffs::new(1.0, 1.0, 0.0);
    let p = solve_upper(1e-2, &c, &default_grid()).unwrap();
    let su = sup_error(&p, Reference::EulerPlus, Metric::SupU, &full_window()).unwrap();
    let sh = sup_error(
        &p,
        Reference::EulerPlus,
        Metric::SupHalfUSqMinusP,
        &full_window(),
    )
    .unwrap();
    let m = p.max_abs() + 2.0;
    assert!(sh <= 0.5 * su * m + 1e-12);
}

#[test]
fn interior_rate_example() {
    let c = Coeffs::new(1.0, 1.0, 0.0);
    let nus = [1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5), 1e-3];
    let r = rate_sweep(
        &c,
        SweepBranch::Upper,
        Reference::EulerPlus,
        Metric::SupU,
        &full_window(),
        &nus,
    )
    .unwrap();
    assert!(
        (0.85..=1.15).contains(&r.fit.slope),
        "slope {}",
        r.fit.slope
    );
    assert!(r.verdict);
}

#[test]
fn sweeps_are_deterministic_across_thread_counts() {
    let c = Coeffs::new(1.0, 2.0, 0.0);
    let nus = log_grid(1e-1, 1e-3, 5).unwrap();
    let run = |threads| {
        let opts = SweepOptions {
            threads: Some(threads),
            ..Default::default()
        };
        rate_sweep_with(
            &opts,
            &c,
            SweepBranch::Lower,
            Reference::EulerMinus,
            Metric::SupU,
            &full_window(),
            &nus,
        )
        .unwrap()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn short_nu_grids_are_rejected() {
    let c = Coeffs::new(1.0, 1.0, 0.0);
    let r = rate_sweep(
        &c,
        SweepBranch::Upper,
        Reference::EulerPlus,
        Metric::SupU,
        &full_window(),
        &[1e-1, 5e-2, 3e-2, 2e-2],
    );
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn convergence_table_cells() {
    let nus = [1e-1, 1e-2, 1e-3];
    let t = table1_check(&Coeffs::new(1.0, 1.0, 0.0), &nus).unwrap();
    assert_eq!(t.len(), 2);
    assert!(t.values().all(|&b| b), "{t:?}");

    let t = table1_check(&Coeffs::new(0.0, 1.0, c3_star(0.0, 1.0).unwrap()), &nus).unwrap();
    assert_eq!(
        t.get("c3 = c3*, c1 = 0: U- -> -sqrt(2P_c)"),
        Some(&true),
        "{t:?}"
    );

    let t = table1_check(&Coeffs::new(0.0, 1.0, 0.0), &nus).unwrap();
    assert_eq!(t.len(), 2);
    assert!(t.values().all(|&b| b), "{t:?}");

    assert!(table1_check(&Coeffs::new(1.0, 1.0, -3.0), &nus).is_err());
}

#[test]
fn nonconvergence_witnesses() {
    let ws = nonconv_search(25.0 / 9.0, 1.0 / 9.0, 0.1, &[1e-1, 1e-2]).unwrap();
    assert_eq!(ws.len(), 2);
    for w in &ws {
        assert!(w.zero_location > 0.9 && w.zero_location < 1.0, "{w:?}");
        assert!(w.gap >= 0.4 * w.p_limit, "{w:?}");
        assert!(w.delta > 0.0);
        assert!((w.c_k3 - c3_bar(25.0 / 9.0, 1.0 / 9.0, w.nu_k).unwrap() - w.delta).abs() < 1e-9);
    }
}

#[test]
fn far_end_of_the_bracket_has_no_zero() {
    let (c1, c2) = (25.0 / 9.0, 1.0 / 9.0);
    for nu in [1e-1, 1e-2] {
        let c = Coeffs::new(c1, c2, c3_bar(c1, c2, nu).unwrap() + 10.0);
        let p = solve_upper(nu, &c, &default_grid()).unwrap();
        assert!(p.zeros().is_empty(), "nu {nu}: {:?}", p.zeros());
    }
}
