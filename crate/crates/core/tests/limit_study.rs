use cloak_core::field::limit_coefficient;
use cloak_core::geometry::dyadic_truncation;
use cloak_core::limit_study::{
    boundary_residual, dn_deviation, dn_deviation_vacuum, run_sweep, spread, SweepReport,
};
use cloak_core::mode_solver::{interior_gain, CloakParams};
use num_complex::Complex64;

fn sweep(k_range: [u32; 2]) -> SweepReport {
    run_sweep(1.0, 1.0, k_range, &[0, 1, 2]).unwrap()
}

#[test]
fn residual_ratio_between_k6_and_k10_is_rho_squared() {
    let at = |k| boundary_residual(1, &CloakParams::new(1.0, 1.0, dyadic_truncation(k), 1).unwrap()).unwrap();
    let ratio = at(10).abs_n / at(6).abs_n;
    let expected = 2f64.powi(-8);
    assert!(ratio <= 2.0 * expected && ratio >= 0.5 * expected, "{ratio:e}");
}

#[test]
fn boundary_residual_orders() {
    let report = sweep([6, 14]);
    for n in [1, 2] {
        let order = report.mode(n).unwrap().fitted_orders.residual.unwrap();
        assert!((1.7..=2.3).contains(&order), "n={n}: {order}");
    }
    let product = report.mode(0).unwrap().n0_log_product.clone().unwrap();
    assert!(spread(&product) <= 3.0, "{product:?}");
}

#[test]
fn mode_zero_log_product_bounded_from_k4() {
    let product = sweep([4, 14]).mode(0).unwrap().n0_log_product.clone().unwrap();
    assert!(spread(&product) <= 3.0, "{product:?}");
}

#[test]
fn exterior_coefficients_decay_like_rho_to_the_n() {
    let report = sweep([6, 14]);
    for n in [1, 2] {
        let fit = report.mode(n).unwrap().fitted_orders;
        for order in [fit.abs_b.unwrap(), fit.abs_c.unwrap()] {
            assert!((order - n as f64).abs() <= 0.3, "n={n}: {order}");
        }
    }
}

#[test]
fn interior_coefficient_approaches_limit() {
    let report = sweep([4, 14]);
    for n in [1, 2] {
        let rows = &report.mode(n).unwrap().rows;
        assert!(rows.last().unwrap().rel_gap_a <= 1e-3);
        for w in rows.windows(2) {
            assert!(w[1].gap_a < w[0].gap_a, "n={n}");
        }
    }
    // the gain of mode 1 at k = 12 is already within 1e-3 of the limit
    let p = CloakParams::new(1.0, 1.0, dyadic_truncation(12), 1).unwrap();
    let gain = interior_gain(1, &p).unwrap();
    let limit = limit_coefficient(1, 1.0, 1.0, Complex64::new(1.0, 0.0)).unwrap();
    assert!((gain.norm() - limit.norm()).abs() <= 1e-3 * limit.norm());
}

#[test]
fn dn_map_converges_to_vacuum() {
    let dev = |k| dn_deviation(1, &CloakParams::new(1.0, 1.0, dyadic_truncation(k), 1).unwrap()).unwrap();
    assert!(dev(12) <= dev(4));
    assert!(dev(14) <= 1e-4 * dev(4));
    let rows = &sweep([4, 14]).mode(1).unwrap().rows.clone();
    for w in rows.windows(2) {
        assert!(w[1].dn_dev < w[0].dn_dev);
    }
    assert!(dn_deviation_vacuum(1, 1.0, 1.7).unwrap() <= 1e-10);
}

#[test]
fn sweep_rows_are_aligned_and_ordered() {
    let report = sweep([4, 8]);
    assert_eq!(report.truncations.len(), 5);
    for m in &report.per_mode {
        assert_eq!(m.rows.len(), 5);
        for (row, r) in m.rows.iter().zip(&report.truncations) {
            assert_eq!(row.truncation, *r);
            assert_eq!(row.rho, 2.0 * (r - 1.0));
        }
    }
    assert!(report.mode(0).unwrap().fitted_orders.residual.is_none());
}
