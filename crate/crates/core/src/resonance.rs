//! Interior resonances of the ideal cloak: frequencies where J(κωr)e^{inθ}
//! satisfies the non-local condition κ∂ᵣV + |n|V = 0 on r = 1.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dyadic_truncation, CLOAK_INNER, DOMAIN_RADIUS};
use crate::mode_solver::{interior_gain, CloakParams};
use crate::specfun::{bessel_j, cylinder};

pub const DEFAULT_SCAN_STEP: f64 = 0.01;
/// Bracket width at which bisection stops.
pub const ROOT_TOL: f64 = 1e-12;
pub const MARGIN_FLOOR: f64 = 1e-8;
/// Lower bound on |hₙ| at a root below which it is flagged as degenerate.
pub const NONDEGENERACY_FLOOR: f64 = 1e-6;

/// gₙ(ω) = κ²ωJ′(κω) + |n|J(κω).
pub fn resonance_function(n: i32, kappa: f64, omega: f64) -> Result<f64> {
    let c = cylinder(n.unsigned_abs(), kappa * omega)?;
    Ok(kappa * kappa * omega * c.jp + n.unsigned_abs() as f64 * c.j)
}

/// hₙ(ω) = κ²ωH′(κω) + |n|H(κω).
pub fn companion_function(n: i32, kappa: f64, omega: f64) -> Result<Complex64> {
    let c = cylinder(n.unsigned_abs(), kappa * omega)?;
    Ok(kappa * kappa * omega * c.hp() + n.unsigned_abs() as f64 * c.h())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRoot {
    pub omega: f64,
    pub g_abs: f64,
    pub h_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub n: i32,
    pub kappa: f64,
    pub omega_range: [f64; 2],
    pub scan_step: f64,
    pub tolerance: f64,
    pub roots: Vec<ResonanceRoot>,
    /// Roots closer than two scan steps, where a pair of sign changes may
    /// have been missed.
    pub warnings: Vec<String>,
}

fn bisect(n: i32, kappa: f64, mut lo: f64, mut hi: f64, mut g_lo: f64) -> Result<f64> {
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = resonance_function(n, kappa, mid)?;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Roots of gₙ on `omega_range` by a uniform scan and bisection of every
/// sign change.
pub fn find_resonances(n: i32, kappa: f64, omega_range: [f64; 2], scan_step: f64) -> Result<ResonanceReport> {
    let [lo, hi] = omega_range;
    if !(lo > 0.0 && hi > lo && scan_step > 0.0 && kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "resonance scan needs 0 < omega_min < omega_max and positive step, got [{lo}, {hi}] step {scan_step}"
        )));
    }
    let cells = ((hi - lo) / scan_step).ceil() as usize;
    let node = |i: usize| if i == cells { hi } else { lo + scan_step * i as f64 };
    let values = (0..=cells)
        .into_par_iter()
        .map(|i| resonance_function(n, kappa, node(i)))
        .collect::<Result<Vec<f64>>>()?;

    let brackets: Vec<usize> = (0..cells)
        .filter(|&i| values[i] == 0.0 || (values[i] < 0.0) != (values[i + 1] < 0.0) && values[i + 1] != 0.0)
        .collect();
    let omegas = brackets
        .par_iter()
        .map(|&i| {
            if values[i] == 0.0 {
                Ok(node(i))
            } else {
                bisect(n, kappa, node(i), node(i + 1), values[i])
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    // a root exactly on the last node is not picked up by the cell rule
    let mut omegas = omegas;
    if values[cells] == 0.0 {
        omegas.push(hi);
    }

    let mut roots = Vec::with_capacity(omegas.len());
    for omega in omegas {
        roots.push(ResonanceRoot {
            omega,
            g_abs: resonance_function(n, kappa, omega)?.abs(),
            h_abs: companion_function(n, kappa, omega)?.norm(),
        });
    }
    let mut warnings = Vec::new();
    for w in roots.windows(2) {
        if w[1].omega - w[0].omega < 2.0 * scan_step {
            warnings.push(format!(
                "roots {} and {} closer than two scan steps; neighbouring roots may be missed",
                w[0].omega, w[1].omega
            ));
        }
    }
    for r in &roots {
        if r.h_abs < NONDEGENERACY_FLOOR {
            warnings.push(format!("companion function nearly vanishes at {}: {:e}", r.omega, r.h_abs));
        }
    }
    Ok(ResonanceReport {
        n,
        kappa,
        omega_range,
        scan_step,
        tolerance: ROOT_TOL,
        roots,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// gₙ(ω) is too small: interior resonance.
    Resonance,
    /// J(3ω) is too small: Dirichlet eigenvalue of the outer disc.
    OuterDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonresonanceCheck {
    pub ok: bool,
    pub min_margin: f64,
    pub worst_mode: i32,
    pub violation: Option<Violation>,
}

/// |gₙ(ω)| ≥ floor and |J(3ω)| ≥ floor for every |n| ≤ N.
pub fn check_nonresonant(params: &CloakParams) -> Result<NonresonanceCheck> {
    check_nonresonant_with(params.kappa, params.omega, params.max_mode, MARGIN_FLOOR)
}

pub fn check_nonresonant_with(kappa: f64, omega: f64, max_mode: u32, floor: f64) -> Result<NonresonanceCheck> {
    let mut worst = (f64::INFINITY, 0, Violation::Resonance);
    for n in 0..=max_mode as i32 {
        let margins = [
            (resonance_function(n, kappa, omega)?.abs(), Violation::Resonance),
            (bessel_j(n as u32, DOMAIN_RADIUS * omega)?.abs(), Violation::OuterDirichlet),
        ];
        for (m, kind) in margins {
            if m < worst.0 {
                worst = (m, n, kind);
            }
        }
    }
    let ok = worst.0 >= floor;
    Ok(NonresonanceCheck {
        ok,
        min_margin: worst.0,
        worst_mode: worst.1,
        violation: (!ok).then_some(worst.2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionResidual {
    /// Largest polar five-point Helmholtz residual over the samples, each
    /// divided by its largest term.
    pub interior: f64,
    /// |κ∂ᵣV + |n|V| on r = 1.
    pub boundary: f64,
}

impl EigenfunctionResidual {
    pub fn max(&self) -> f64 {
        self.interior.max(self.boundary)
    }
}

/// Residuals of V = J(κωr)e^{inθ} in the interior problem and its
/// non-local boundary condition. `step` is the finite-difference step of the
/// interior check; samples must satisfy step < r ≤ 1 − step.
pub fn eigenfunction_residual(
    n: i32,
    kappa: f64,
    omega: f64,
    r_samples: &[f64],
    step: f64,
) -> Result<EigenfunctionResidual> {
    let order = n.unsigned_abs();
    let k = kappa * omega;
    let radial = |r: f64| bessel_j(order, k * r);
    let mut interior = 0.0f64;
    for &r in r_samples {
        if !(r > step && r + step <= CLOAK_INNER) {
            return Err(Error::Domain { radius: r, what: "eigenfunction samples need step < r <= 1 - step" });
        }
        // three-point angular stencil applied to e^{inθ}
        let dt = step / r;
        let angular = 2.0 * ((n as f64 * dt).cos() - 1.0) / (dt * dt);
        let (c, up, down) = (radial(r)?, radial(r + step)?, radial(r - step)?);
        let u_rr = (up + down - 2.0 * c) / (step * step);
        let u_r = (up - down) / (2.0 * step);
        let terms = [u_rr, u_r / r, angular * c / (r * r), k * k * c];
        let big = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        if big > 0.0 {
            interior = interior.max(terms.iter().sum::<f64>().abs() / big);
        }
    }
    let c = cylinder(order, k)?;
    let boundary = (kappa * k * c.jp + order as f64 * c.j).abs();
    Ok(EigenfunctionResidual { interior, boundary })
}

/// |aₙ(R_k)| = |pₙ·A/B| along R_k = 1 + 2⁻ᵏ with f ≡ 0.
pub fn blowup_probe(n: i32, kappa: f64, omega: f64, ks: &[u32], p: Complex64) -> Result<Vec<f64>> {
    ks.iter()
        .map(|&k| {
            let at_k = |e: Error| Error::AtSweepStep { k, source: Box::new(e) };
            let params = CloakParams::new(kappa, omega, dyadic_truncation(k), n.unsigned_abs()).map_err(at_k)?;
            if p == Complex64::new(0.0, 0.0) {
                return Ok(0.0);
            }
            Ok((interior_gain(n, &params).map_err(at_k)? * p).norm())
        })
        .collect()
}

/// Number of trailing entries the blow-up contract inspects.
pub const BLOWUP_TAIL: usize = 6;

/// Strictly increasing over the last [`BLOWUP_TAIL`] entries.
pub fn blowup_contract_holds(magnitudes: &[f64]) -> bool {
    let tail = &magnitudes[magnitudes.len().saturating_sub(BLOWUP_TAIL)..];
    strictly_increasing(tail)
}

pub fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] > w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    const J1_ZERO: f64 = 3.831_705_970_207_512;
    const J0_ZERO: f64 = 2.404_825_557_695_773;

    #[test]
    fn mode_zero_function_is_minus_omega_j1() {
        for w in [0.3, 1.7, 5.2] {
            let g = resonance_function(0, 1.0, w).unwrap();
            assert!((g + w * bessel_j(1, w).unwrap()).abs() < 1e-15);
        }
        assert!(resonance_function(0, 1.0, J1_ZERO).unwrap().abs() < 1e-14);
        assert!(resonance_function(1, 1.0, J0_ZERO).unwrap().abs() < 1e-14);
        assert!(resonance_function(-1, 1.0, J0_ZERO).unwrap().abs() < 1e-14);
    }

    #[test]
    fn small_frequency_power_law() {
        assert!(resonance_function(2, 1.0, 1e-4).unwrap().abs() <= 1e-7);
    }

    #[test]
    fn scan_rejects_bad_ranges() {
        assert!(find_resonances(0, 1.0, [2.0, 1.0], 0.01).is_err());
        assert!(find_resonances(0, 1.0, [0.5, 1.0], 0.0).is_err());
    }

    #[test]
    fn nonresonance_examples() {
        let ok = check_nonresonant(&CloakParams::new(1.0, 1.0, 1.1, 3).unwrap()).unwrap();
        assert!(ok.ok, "{ok:?}");
        let res = check_nonresonant(&CloakParams::new(1.0, 3.831_705_970_2, 1.1, 0).unwrap()).unwrap();
        assert!(!res.ok);
        assert_eq!(res.violation, Some(Violation::Resonance));
        let dir = check_nonresonant(&CloakParams::new(1.0, J0_ZERO / 3.0, 1.1, 0).unwrap()).unwrap();
        assert!(!dir.ok);
        assert_eq!(dir.violation, Some(Violation::OuterDirichlet));
    }

    #[test]
    fn boundary_term_vanishes_only_at_roots() {
        let at_root = eigenfunction_residual(0, 1.0, J1_ZERO, &[0.5], 1e-3).unwrap();
        assert!(at_root.boundary <= 1e-9);
        assert!(at_root.interior <= 1e-5);
        let off = eigenfunction_residual(0, 1.0, 3.0, &[0.5], 1e-3).unwrap();
        assert!(off.boundary >= 1e-2);
        assert!(eigenfunction_residual(0, 1.0, 3.0, &[1.0], 1e-3).is_err());
    }

    #[test]
    fn probe_with_zero_source() {
        let v = blowup_probe(0, 1.0, J1_ZERO, &[4, 5, 6], Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn contract_helper() {
        assert!(blowup_contract_holds(&[9.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        assert!(!blowup_contract_holds(&[0.0, 1.0, 2.0, 3.0, 2.5, 4.0]));
    }
}
