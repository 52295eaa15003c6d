//! Sweeps R → 1⁺ along R_k = 1 + 2⁻ᵏ and the quantities whose decay
//! expresses the limit behaviour of the truncated cloak.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::limit_coefficient;
use crate::geometry::{dyadic_truncation, DOMAIN_RADIUS};
use crate::mode_solver::{
    interior_gain, solve_interface_direct, solve_mode_closed, CloakParams, Interface, ModeInput,
};
use crate::resonance::{check_nonresonant_with, Violation, MARGIN_FLOOR};
use crate::specfun::cylinder;

/// Quantities below this are treated as roundoff and left out of slope fits.
pub const FIT_FLOOR: f64 = 1e-13;

/// Boundary expression κR∂ᵣΦ + m·Φ at r = R for Φ = (A/B)J(κωr) + H(κωr),
/// normalized by its largest term; `m` is |n| and the variant uses n².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResidual {
    pub abs_n: f64,
    pub n_squared: f64,
}

pub fn boundary_residual(n: i32, params: &CloakParams) -> Result<BoundaryResidual> {
    let gain = interior_gain(n, params)?;
    let (kappa, omega, r) = (params.kappa, params.omega, params.truncation());
    let c = cylinder(n.unsigned_abs(), kappa * omega * r)?;
    let flux = kappa * r * kappa * omega;
    let flux_terms = [flux * gain * c.jp, flux * c.hp()];
    let value_terms = [gain * c.j, c.h()];
    let measure = |m: f64| {
        let terms = [flux_terms[0], flux_terms[1], value_terms[0] * m, value_terms[1] * m];
        let big = terms.iter().fold(0.0f64, |acc, t| acc.max(t.norm()));
        let sum: Complex64 = terms.iter().sum();
        if big == 0.0 {
            0.0
        } else {
            sum.norm() / big
        }
    };
    let order = n.unsigned_abs() as f64;
    Ok(BoundaryResidual { abs_n: measure(order), n_squared: measure(order * order) })
}

/// |ω(bJ′ + cH′)(3ω) − ωJ′(3ω)/J(3ω)| for boundary data fₙ = 1 and no source.
pub fn dn_deviation(n: i32, params: &CloakParams) -> Result<f64> {
    let outer = outer_cylinder(n, params.omega)?;
    let coeffs = solve_mode_closed(&ModeInput::boundary(n, Complex64::new(1.0, 0.0)), params)?;
    Ok(dn_gap(coeffs.b, coeffs.c, &outer, params.omega))
}

/// The same deviation for a continuous vacuum interface at `radius`, solved
/// by the direct method; zero up to roundoff.
pub fn dn_deviation_vacuum(n: i32, omega: f64, radius: f64) -> Result<f64> {
    let outer = outer_cylinder(n, omega)?;
    let input = ModeInput::boundary(n, Complex64::new(1.0, 0.0));
    let coeffs = solve_interface_direct(&input, omega, &Interface::vacuum(radius))?;
    Ok(dn_gap(coeffs.b, coeffs.c, &outer, omega))
}

fn outer_cylinder(n: i32, omega: f64) -> Result<crate::specfun::Cylinder> {
    let outer = cylinder(n.unsigned_abs(), DOMAIN_RADIUS * omega)?;
    if outer.j.abs() < MARGIN_FLOOR {
        return Err(Error::VacuumDirichletEigenvalue { n });
    }
    Ok(outer)
}

fn dn_gap(b: Complex64, c: Complex64, outer: &crate::specfun::Cylinder, omega: f64) -> f64 {
    let cloak = omega * (b * outer.jp + c * outer.hp());
    let vacuum = omega * outer.jp / outer.j;
    (cloak - vacuum).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u32,
    pub truncation: f64,
    pub rho: f64,
    pub residual: f64,
    pub residual_n_squared: f64,
    pub abs_b: f64,
    pub abs_c: f64,
    pub gap_a: f64,
    pub rel_gap_a: f64,
    pub dn_dev: f64,
}

/// Least-squares slopes of ln(quantity) against ln ρ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FittedOrders {
    pub residual: Option<f64>,
    pub abs_b: Option<f64>,
    pub abs_c: Option<f64>,
    pub gap_a: Option<f64>,
    pub dn_dev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSweep {
    pub n: i32,
    pub a_tilde: Complex64,
    pub rows: Vec<SweepRow>,
    /// Not fitted for n = 0, where the rates are logarithmic.
    pub fitted_orders: FittedOrders,
    /// residual·|ln(ωρ/2)|, reported for n = 0 only.
    pub n0_log_product: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kappa: f64,
    pub omega: f64,
    pub k_range: [u32; 2],
    pub truncations: Vec<f64>,
    pub per_mode: Vec<ModeSweep>,
}

impl SweepReport {
    pub fn mode(&self, n: i32) -> Option<&ModeSweep> {
        self.per_mode.iter().find(|m| m.n == n)
    }
}

/// OLS slope of (ln x, ln y) over the pairs with y ≥ [`FIT_FLOOR`].
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && y.is_finite() && **y >= FIT_FLOOR)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn sweep_row(n: i32, kappa: f64, omega: f64, k: u32, a_tilde: Complex64) -> Result<SweepRow> {
    let params = CloakParams::new(kappa, omega, dyadic_truncation(k), n.unsigned_abs())?;
    let residual = boundary_residual(n, &params)?;
    let source = solve_mode_closed(&ModeInput::source(n, Complex64::new(1.0, 0.0)), &params)?;
    let gap = (source.a - a_tilde).norm();
    Ok(SweepRow {
        k,
        truncation: params.truncation(),
        rho: params.rho(),
        residual: residual.abs_n,
        residual_n_squared: residual.n_squared,
        abs_b: source.b.norm(),
        abs_c: source.c.norm(),
        gap_a: gap,
        rel_gap_a: gap / a_tilde.norm(),
        dn_dev: dn_deviation(n, &params)?,
    })
}

/// Sweep of every mode in `modes` over k_min..=k_max with f = 0, pₙ = 1 for
/// the source quantities and fₙ = 1, p = 0 for the DN deviation.
pub fn run_sweep(kappa: f64, omega: f64, k_range: [u32; 2], modes: &[i32]) -> Result<SweepReport> {
    let [k_min, k_max] = k_range;
    if k_min > k_max || k_min == 0 {
        return Err(Error::InvalidParameter(format!("sweep range k = {k_min}..={k_max} is empty or includes R = 2")));
    }
    let max_order = modes.iter().map(|n| n.unsigned_abs()).max().unwrap_or(0);
    let check = check_nonresonant_with(kappa, omega, max_order, MARGIN_FLOOR)?;
    if let Some(v) = check.violation {
        let n = check.worst_mode;
        return Err(match v {
            Violation::Resonance => Error::ResonantFrequency { n, margin: check.min_margin },
            Violation::OuterDirichlet => Error::VacuumDirichletEigenvalue { n },
        });
    }
    let ks: Vec<u32> = (k_min..=k_max).collect();
    let mut per_mode = Vec::with_capacity(modes.len());
    for &n in modes {
        let a_tilde = limit_coefficient(n, kappa, omega, Complex64::new(1.0, 0.0))?;
        let rows = ks
            .par_iter()
            .map(|&k| {
                sweep_row(n, kappa, omega, k, a_tilde)
                    .map_err(|e| Error::AtSweepStep { k, source: Box::new(e) })
            })
            .collect::<Result<Vec<_>>>()?;
        let rho: Vec<f64> = rows.iter().map(|r| r.rho).collect();
        let fit = |f: fn(&SweepRow) -> f64| fit_loglog(&rho, &rows.iter().map(f).collect::<Vec<_>>());
        let (fitted_orders, n0_log_product) = if n == 0 {
            let product = rows.iter().map(|r| r.residual * (omega * r.rho / 2.0).ln().abs()).collect();
            (FittedOrders::default(), Some(product))
        } else {
            let orders = FittedOrders {
                residual: fit(|r| r.residual),
                abs_b: fit(|r| r.abs_b),
                abs_c: fit(|r| r.abs_c),
                gap_a: fit(|r| r.gap_a),
                dn_dev: fit(|r| r.dn_dev),
            };
            (orders, None)
        };
        per_mode.push(ModeSweep { n, a_tilde, rows, fitted_orders, n0_log_product });
    }
    Ok(SweepReport {
        kappa,
        omega,
        k_range,
        truncations: ks.iter().map(|&k| dyadic_truncation(k)).collect(),
        per_mode,
    })
}

/// max/min of a positive sequence.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_fit_recovers_power() {
        let xs = [0.1, 0.01, 0.001, 1e-4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        assert!((fit_loglog(&xs, &ys).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(fit_loglog(&[1.0], &[1.0]), None);
        // noise-floor points are dropped
        let ys2 = [1e-2, 1e-4, 1e-14, 1e-15];
        assert!((fit_loglog(&xs[..2], &ys2[..2]).unwrap() - fit_loglog(&xs, &ys2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn vacuum_control_has_no_dn_deviation() {
        for n in 0..=3 {
            for radius in [0.3, 1.0, 2.2] {
                let d = dn_deviation_vacuum(n, 1.0, radius).unwrap();
                assert!(d <= 1e-10, "n={n} r={radius}: {d:e}");
            }
        }
    }

    #[test]
    fn outer_dirichlet_eigenvalue_rejected() {
        let omega = 2.404_825_557_695_773 / 3.0;
        let p = CloakParams::new(1.0, omega, 1.1, 0).unwrap();
        assert!(matches!(dn_deviation(0, &p), Err(Error::VacuumDirichletEigenvalue { n: 0 })));
    }

    #[test]
    fn sweep_rejects_resonant_frequency() {
        let err = run_sweep(1.0, 3.831_705_970_207_512, [4, 6], &[0]).unwrap_err();
        assert!(matches!(err, Error::ResonantFrequency { n: 0, .. }));
        assert!(run_sweep(1.0, 1.0, [6, 4], &[0]).is_err());
    }

    #[test]
    fn spread_of_constant_is_one() {
        assert_eq!(spread(&[2.0, 2.0]), 1.0);
    }
}
