//! Assembly of interior, virtual and physical fields from mode coefficients,
//! and the ideal-limit field.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    truncated_inverse, PolarGrid, PolarPoint, Region, CLOAK_INNER, CLOAK_OUTER, DOMAIN_RADIUS,
};
use crate::mode_solver::{CloakParams, ModeCoefficients, ModeSolution};
use crate::specfun::{bessel_j, cylinder};

/// Radius of the disc around the source excluded from evaluation.
pub const EPSILON_ORIGIN: f64 = 1e-6;
/// Size of the limit denominator, relative to the numerator, treated as a
/// resonance.
pub const LIMIT_RESONANCE_TOL: f64 = 1e-12;

/// Coefficients of one mode together with its source coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTerm {
    pub n: i32,
    pub coeffs: ModeCoefficients,
    pub p: Complex64,
}

impl From<&ModeSolution> for ModeTerm {
    fn from(sol: &ModeSolution) -> Self {
        ModeTerm { n: sol.input.n, coeffs: sol.coeffs, p: sol.input.p }
    }
}

fn phase(n: i32, theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, n as f64 * theta)
}

fn has_source(modes: &[ModeTerm]) -> bool {
    modes.iter().any(|m| m.p != Complex64::new(0.0, 0.0))
}

/// Value and r-derivative of aJ(κωr) + pH(κωr) for one mode.
pub fn interior_mode(term: &ModeTerm, kappa: f64, omega: f64, r: f64) -> Result<(Complex64, Complex64)> {
    let k = kappa * omega;
    let order = term.n.unsigned_abs();
    if r == 0.0 {
        if term.p != Complex64::new(0.0, 0.0) {
            return Err(Error::OriginSingular { radius: r });
        }
        let j = bessel_j(order, 0.0)?;
        return Ok((term.coeffs.a * j, Complex64::new(0.0, 0.0)));
    }
    let c = cylinder(order, k * r)?;
    let value = term.coeffs.a * c.j + term.p * c.h();
    let slope = k * (term.coeffs.a * c.jp + term.p * c.hp());
    Ok((value, slope))
}

/// Value and r-derivative of bJ(ωr) + cH(ωr) for one mode.
pub fn virtual_mode(term: &ModeTerm, omega: f64, r: f64) -> Result<(Complex64, Complex64)> {
    let c = cylinder(term.n.unsigned_abs(), omega * r)?;
    let value = term.coeffs.b * c.j + term.coeffs.c * c.h();
    let slope = omega * (term.coeffs.b * c.jp + term.coeffs.c * c.hp());
    Ok((value, slope))
}

/// Σₙ (aₙJ(κωr) + pₙH(κωr)) e^{inθ} for r ≤ R.
pub fn interior_field(modes: &[ModeTerm], params: &CloakParams, point: PolarPoint) -> Result<Complex64> {
    if point.r > params.truncation() {
        return Err(Error::Domain { radius: point.r, what: "interior field needs r <= R" });
    }
    if point.r < EPSILON_ORIGIN && has_source(modes) {
        return Err(Error::OriginSingular { radius: point.r });
    }
    modes.iter().try_fold(Complex64::new(0.0, 0.0), |acc, m| {
        let (v, _) = interior_mode(m, params.kappa, params.omega, point.r)?;
        Ok(acc + v * phase(m.n, point.theta))
    })
}

/// Σₙ (cₙH(ωr) + bₙJ(ωr)) e^{inθ} for ρ ≤ r ≤ 3.
pub fn virtual_field(modes: &[ModeTerm], params: &CloakParams, point: PolarPoint) -> Result<Complex64> {
    if point.r < params.rho() || point.r > DOMAIN_RADIUS {
        return Err(Error::Domain { radius: point.r, what: "virtual field needs rho <= r <= 3" });
    }
    modes.iter().try_fold(Complex64::new(0.0, 0.0), |acc, m| {
        let (v, _) = virtual_mode(m, params.omega, point.r)?;
        Ok(acc + v * phase(m.n, point.theta))
    })
}

/// The exterior physical field: the virtual field pulled back through F_R.
pub fn physical_field(modes: &[ModeTerm], params: &CloakParams, point: PolarPoint) -> Result<Complex64> {
    if point.r < params.truncation() || point.r > DOMAIN_RADIUS {
        return Err(Error::Domain { radius: point.r, what: "physical field needs R <= r <= 3" });
    }
    virtual_field(modes, params, truncated_inverse(point, &params.geometry)?)
}

/// The physical solution anywhere in B₃: interior expansion up to R, pulled
/// back virtual field beyond.
pub fn solution_field(modes: &[ModeTerm], params: &CloakParams, point: PolarPoint) -> Result<Complex64> {
    if point.r <= params.truncation() {
        interior_field(modes, params, point)
    } else {
        physical_field(modes, params, point)
    }
}

/// The radiating wave Σₙ pₙH(κωr) e^{inθ}.
pub fn source_field(
    sources: &[(i32, Complex64)],
    kappa: f64,
    omega: f64,
    point: PolarPoint,
) -> Result<Complex64> {
    if point.r <= 0.0 {
        return Err(Error::OriginSingular { radius: point.r });
    }
    sources.iter().try_fold(Complex64::new(0.0, 0.0), |acc, &(n, p)| {
        let h = cylinder(n.unsigned_abs(), kappa * omega * point.r)?.h();
        Ok(acc + p * h * phase(n, point.theta))
    })
}

/// ãₙ = −pₙ(κ²ωH′ + |n|H)/(κ²ωJ′ + |n|J), all at κω.
pub fn limit_coefficient(n: i32, kappa: f64, omega: f64, p: Complex64) -> Result<Complex64> {
    let order = n.unsigned_abs();
    let c = cylinder(order, kappa * omega)?;
    let scale = kappa * kappa * omega;
    let m = order as f64;
    let den = scale * c.jp + m * c.j;
    let num = scale * c.hp() + m * c.h();
    // the Hankel combination is the envelope of the Bessel one
    if den.abs() <= LIMIT_RESONANCE_TOL * num.norm() {
        return Err(Error::ResonantFrequency { n, margin: den.abs() });
    }
    Ok(-p * num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitMode {
    pub n: i32,
    pub a_tilde: Complex64,
    pub p: Complex64,
}

/// Mode data of the ideal-limit field u₁.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitField {
    pub kappa: f64,
    pub omega: f64,
    pub modes: Vec<LimitMode>,
}

impl LimitField {
    pub fn new(kappa: f64, omega: f64, sources: &[(i32, Complex64)]) -> Result<Self> {
        let modes = sources
            .iter()
            .map(|&(n, p)| Ok(LimitMode { n, a_tilde: limit_coefficient(n, kappa, omega, p)?, p }))
            .collect::<Result<_>>()?;
        Ok(LimitField { kappa, omega, modes })
    }
}

/// u₁: Σ ãₙJ(κωr)e^{inθ} + w inside B₁ and zero on 1 < r ≤ 3. On r = 1 the
/// interior trace is returned.
pub fn ideal_limit_field(limit: &LimitField, point: PolarPoint) -> Result<Complex64> {
    if point.r <= 0.0 {
        return Err(Error::OriginSingular { radius: point.r });
    }
    if point.r > DOMAIN_RADIUS {
        return Err(Error::Domain { radius: point.r, what: "ideal field needs r <= 3" });
    }
    if point.r > CLOAK_INNER {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let k = limit.kappa * limit.omega;
    limit.modes.iter().try_fold(Complex64::new(0.0, 0.0), |acc, m| {
        let c = cylinder(m.n.unsigned_abs(), k * point.r)?;
        Ok(acc + (m.a_tilde * c.j + m.p * c.h()) * phase(m.n, point.theta))
    })
}

/// Largest normalized mismatch over modes of the value and flux transmission
/// conditions between r = R (interior) and r = ρ (virtual).
pub fn transmission_residual(modes: &[ModeTerm], params: &CloakParams) -> Result<[f64; 2]> {
    let (kappa, omega) = (params.kappa, params.omega);
    let (big_r, rho) = (params.truncation(), params.rho());
    let mut worst = [0.0f64; 2];
    for m in modes {
        let c_in = cylinder(m.n.unsigned_abs(), kappa * omega * big_r)?;
        let c_out = cylinder(m.n.unsigned_abs(), omega * rho)?;
        let value_terms = [
            m.coeffs.a * c_in.j,
            m.p * c_in.h(),
            -m.coeffs.b * c_out.j,
            -m.coeffs.c * c_out.h(),
        ];
        let inner_flux = kappa * big_r * kappa * omega;
        let flux_terms = [
            inner_flux * m.coeffs.a * c_in.jp,
            inner_flux * m.p * c_in.hp(),
            -rho * omega * m.coeffs.b * c_out.jp,
            -rho * omega * m.coeffs.c * c_out.hp(),
        ];
        for (slot, terms) in worst.iter_mut().zip([value_terms, flux_terms]) {
            let big = terms.iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
            if big > 0.0 {
                let sum: Complex64 = terms.iter().sum();
                *slot = slot.max(sum.norm() / big);
            }
        }
    }
    Ok(worst)
}

/// Region of a physical point for a truncated cloak (or the ideal cloak when
/// `truncation` is `None`).
pub fn physical_region(r: f64, truncation: Option<f64>) -> Region {
    match truncation {
        Some(big_r) if r <= big_r && r >= CLOAK_INNER => Region::TruncatedCore,
        _ if r < CLOAK_INNER => Region::Interior,
        _ if r < CLOAK_OUTER => Region::Shell,
        _ => Region::Exterior,
    }
}

/// Sampled complex field on a polar grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldGrid {
    pub points: Vec<PolarPoint>,
    pub values: Vec<Complex64>,
    pub region_tags: Vec<Region>,
    pub params_snapshot: Option<CloakParams>,
}

fn checked_points(grid: &PolarGrid) -> Result<Vec<PolarPoint>> {
    if grid.r_min < EPSILON_ORIGIN {
        return Err(Error::InvalidParameter(format!(
            "grid r_min = {} is inside the excluded disc of radius {EPSILON_ORIGIN}",
            grid.r_min
        )));
    }
    if grid.r_max > DOMAIN_RADIUS {
        return Err(Error::InvalidParameter(format!("grid r_max = {} exceeds 3", grid.r_max)));
    }
    Ok(grid.points())
}

/// The truncated-cloak solution on a grid, evaluated in parallel and
/// returned in grid order.
pub fn sample_solution(modes: &[ModeTerm], params: &CloakParams, grid: &PolarGrid) -> Result<FieldGrid> {
    let points = checked_points(grid)?;
    let values = points
        .par_iter()
        .map(|&pt| solution_field(modes, params, pt))
        .collect::<Result<Vec<_>>>()?;
    let region_tags = points.iter().map(|p| physical_region(p.r, Some(params.truncation()))).collect();
    Ok(FieldGrid { points, values, region_tags, params_snapshot: Some(*params) })
}

/// The ideal-limit field u₁ on a grid.
pub fn sample_limit(limit: &LimitField, grid: &PolarGrid) -> Result<FieldGrid> {
    let points = checked_points(grid)?;
    let values = points
        .par_iter()
        .map(|&pt| ideal_limit_field(limit, pt))
        .collect::<Result<Vec<_>>>()?;
    let region_tags = points.iter().map(|p| physical_region(p.r, None)).collect();
    Ok(FieldGrid { points, values, region_tags, params_snapshot: None })
}
