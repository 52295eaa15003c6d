use cloak_core::resonance::{
    blowup_contract_holds, blowup_probe, companion_function, eigenfunction_residual,
    find_resonances, resonance_function, strictly_increasing, NONDEGENERACY_FLOOR,
};
use cloak_oracle::bessel_j_zeros;
use num_complex::Complex64;

/// For κ = 1 the roots of gₙ are the zeros of J₁ (n = 0) or of J_{|n|−1}.
fn oracle_roots(n: u32, lo: f64, hi: f64) -> Vec<f64> {
    let order = if n == 0 { 1 } else { n - 1 };
    bessel_j_zeros(order, lo, hi, 0.05)
}

#[test]
fn mode_zero_roots_are_j1_zeros() {
    let report = find_resonances(0, 1.0, [0.5, 8.0], 0.01).unwrap();
    let got: Vec<f64> = report.roots.iter().map(|r| r.omega).collect();
    let want = [3.8317059702, 7.0155866698];
    assert_eq!(got.len(), 2, "{got:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
    }
    for (g, w) in got.iter().zip(oracle_roots(0, 0.5, 8.0)) {
        assert!((g - w).abs() <= 1e-9);
    }
}

#[test]
fn mode_one_roots_are_j0_zeros() {
    let report = find_resonances(1, 1.0, [0.5, 6.0], 0.01).unwrap();
    let got: Vec<f64> = report.roots.iter().map(|r| r.omega).collect();
    let want = [2.4048255577, 5.5200781103];
    assert_eq!(got.len(), 2, "{got:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
    }
}

#[test]
fn mode_zero_roots_scale_with_kappa() {
    let one = find_resonances(0, 1.0, [0.5, 8.0], 0.01).unwrap();
    let two = find_resonances(0, 2.0, [0.25, 4.0], 0.01).unwrap();
    assert_eq!(one.roots.len(), two.roots.len());
    for (a, b) in one.roots.iter().zip(&two.roots) {
        assert!((a.omega / 2.0 - b.omega).abs() <= 1e-9);
    }
}

#[test]
fn root_sets_and_counts_match_oracle() {
    for n in 0..=5u32 {
        let report = find_resonances(n as i32, 1.0, [0.5, 20.0], 0.01).unwrap();
        let want = oracle_roots(n, 0.5, 20.0);
        assert_eq!(report.roots.len(), want.len(), "n={n}");
        assert!(strictly_increasing(&report.roots.iter().map(|r| r.omega).collect::<Vec<_>>()));
        for (root, w) in report.roots.iter().zip(&want) {
            assert!((root.omega - w).abs() <= 1e-9, "n={n}: {} vs {w}", root.omega);
            // local slope of gₙ sets the scale of an acceptable residual
            let h = 1e-6;
            let slope = (resonance_function(n as i32, 1.0, root.omega + h).unwrap()
                - resonance_function(n as i32, 1.0, root.omega - h).unwrap())
                / (2.0 * h);
            assert!(root.g_abs <= 1e-10 * (1.0 + slope.abs()), "n={n}: g = {:e}", root.g_abs);
            assert!(root.h_abs >= NONDEGENERACY_FLOOR);
            assert_eq!(root.h_abs, companion_function(n as i32, 1.0, root.omega).unwrap().norm());
        }
        assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    }
}

#[test]
fn eigenfunctions_at_reported_roots() {
    for n in 0..=3 {
        for root in find_resonances(n, 1.0, [0.5, 8.0], 0.01).unwrap().roots {
            let res = eigenfunction_residual(n, 1.0, root.omega, &[0.5, 0.7, 0.9], 1e-3).unwrap();
            assert!(res.boundary <= 1e-9, "n={n} ω={}: {:e}", root.omega, res.boundary);
            assert!(res.interior <= 1e-5, "n={n} ω={}: {:e}", root.omega, res.interior);
        }
    }
}

#[test]
fn mode_one_blowup_satisfies_contract() {
    let ks: Vec<u32> = (4..=14).collect();
    let mags = blowup_probe(1, 1.0, 2.404_825_557_695_773, &ks, Complex64::new(1.0, 0.0)).unwrap();
    assert!(blowup_contract_holds(&mags), "{mags:?}");
    assert!(mags[10] > 100.0 * mags[0]);
}

#[test]
fn nonresonant_probe_converges() {
    let ks: Vec<u32> = (4..=14).collect();
    let mags = blowup_probe(1, 1.0, 1.0, &ks, Complex64::new(1.0, 0.0)).unwrap();
    let tail: Vec<f64> = mags[6..].windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(strictly_increasing(&tail.iter().map(|d| -d).collect::<Vec<_>>()), "{mags:?}");
    assert!(tail.last().unwrap() < &1e-3, "{mags:?}");
}
