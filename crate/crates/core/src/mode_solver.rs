//! Per-mode transmission problem of the truncated cloak.
//!
//! For mode n the interior field is aₙJ(κωr) + pₙH(κωr) on r < R and the
//! virtual exterior field is bₙJ(ωr) + cₙH(ωr) on ρ < r < 3, all of order |n|.
//! The three unknowns follow from the Dirichlet condition at r = 3 and the two
//! transmission conditions that couple r = R to r = ρ.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CloakGeometry, DOMAIN_RADIUS};
use crate::specfun::{cylinder, Cylinder, MAX_ORDER};

/// Relative size of |J(3ω) + sH(3ω)| below which the frequency is treated as
/// a transmission eigenvalue.
pub const TRANSMISSION_EIGENVALUE_TOL: f64 = 1e-12;
/// Condition estimate above which the direct solve reports `IllConditioned`.
pub const CONDITION_LIMIT: f64 = 1e14;
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloakParams {
    pub kappa: f64,
    pub omega: f64,
    pub geometry: CloakGeometry,
    /// Mode cutoff N; modes −N..=N are solved.
    pub max_mode: u32,
}

impl CloakParams {
    pub fn new(kappa: f64, omega: f64, truncation: f64, max_mode: u32) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be positive")));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
        }
        if max_mode > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "mode cutoff N = {max_mode} exceeds {MAX_ORDER}"
            )));
        }
        Ok(CloakParams { kappa, omega, geometry: CloakGeometry::new(truncation)?, max_mode })
    }

    pub fn truncation(&self) -> f64 {
        self.geometry.truncation()
    }

    pub fn rho(&self) -> f64 {
        self.geometry.rho()
    }

    /// Same material and frequency, different truncation radius.
    pub fn with_truncation(&self, truncation: f64) -> Result<Self> {
        Ok(CloakParams { geometry: CloakGeometry::new(truncation)?, ..*self })
    }

    pub fn check_mode(&self, n: i32) -> Result<u32> {
        let order = n.unsigned_abs();
        if order > self.max_mode {
            return Err(Error::InvalidParameter(format!(
                "mode {n} exceeds the cutoff N = {}",
                self.max_mode
            )));
        }
        Ok(order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeInput {
    pub n: i32,
    /// Boundary coefficient fₙ.
    pub f: Complex64,
    /// Source coefficient pₙ.
    pub p: Complex64,
}

impl ModeInput {
    pub fn new(n: i32, f: Complex64, p: Complex64) -> Self {
        ModeInput { n, f, p }
    }

    pub fn source(n: i32, p: Complex64) -> Self {
        ModeInput { n, f: Complex64::new(0.0, 0.0), p }
    }

    pub fn boundary(n: i32, f: Complex64) -> Self {
        ModeInput { n, f, p: Complex64::new(0.0, 0.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl ModeCoefficients {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        ModeCoefficients { a: z, b: z, c: z }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        ModeCoefficients { a: self.a * k, b: self.b * k, c: self.c * k }
    }

    pub fn as_array(&self) -> [Complex64; 3] {
        [self.a, self.b, self.c]
    }
}

/// The quantities l₁, l₂, s, t, s̃, t̃, D and the interior gain A/B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intermediates {
    pub l1: Complex64,
    pub l2: Complex64,
    pub s: Complex64,
    pub t: Complex64,
    pub s_tilde: Complex64,
    pub t_tilde: Complex64,
    pub d: Complex64,
    /// Numerator A of the interior gain.
    pub gain_num: Complex64,
    /// Denominator B of the interior gain.
    pub gain_den: Complex64,
}

/// Cylinder values entering one mode: at κωR (interior side of the
/// interface), ωρ (virtual side) and 3ω (outer boundary).
#[derive(Debug, Clone, Copy)]
pub struct ModeCylinders {
    pub interior: Cylinder,
    pub virtual_side: Cylinder,
    pub outer: Cylinder,
}

impl ModeCylinders {
    pub fn new(order: u32, params: &CloakParams) -> Result<Self> {
        let (k, w) = (params.kappa, params.omega);
        Ok(ModeCylinders {
            interior: cylinder(order, k * w * params.truncation())?,
            virtual_side: cylinder(order, w * params.rho())?,
            outer: cylinder(order, DOMAIN_RADIUS * w)?,
        })
    }
}

pub fn intermediates(n: i32, params: &CloakParams) -> Result<Intermediates> {
    let order = params.check_mode(n)?;
    let cyl = ModeCylinders::new(order, params)?;
    intermediates_from(n, params, &cyl)
}

fn intermediates_from(n: i32, params: &CloakParams, cyl: &ModeCylinders) -> Result<Intermediates> {
    let kr = params.kappa * params.kappa * params.truncation();
    let rho = params.rho();
    let (ik, iv, io) = (&cyl.interior, &cyl.virtual_side, &cyl.outer);
    let (jk, jpk, hk, hpk) = (ik.j, ik.jp, ik.h(), ik.hp());
    let (jv, jpv, hv, hpv) = (iv.j, iv.jp, iv.h(), iv.hp());
    let (jo, ho) = (io.j, io.h());

    let d = kr * jpk * hv - rho * jk * hpv;
    if !d.is_finite() || d.norm() < TINY {
        return Err(Error::DegenerateDenominator { n, value: d.norm() });
    }
    let s = Complex64::from(rho * jk * jpv - kr * jpk * jv) / d;
    let t = rho * (hv * jpv - hpv * jv) / d;
    let s_tilde = kr * (hpk * jk - jpk * hk) / d;
    let t_tilde = (kr * hv * hpk - rho * hpv * hk) / d;

    let l1 = jv * ho - hv * jo;
    let l2 = jpv * ho - hpv * jo;
    let gain_num = kr * hpk * l1 - rho * hk * l2;
    let gain_den = rho * jk * l2 - kr * jpk * l1;
    Ok(Intermediates { l1, l2, s, t, s_tilde, t_tilde, d, gain_num, gain_den })
}

/// Coefficients from the closed-form elimination.
pub fn solve_mode_closed(input: &ModeInput, params: &CloakParams) -> Result<ModeCoefficients> {
    let order = params.check_mode(input.n)?;
    let cyl = ModeCylinders::new(order, params)?;
    let im = intermediates_from(input.n, params, &cyl)?;
    closed_from(input, &im, &cyl.outer)
}

fn closed_from(input: &ModeInput, im: &Intermediates, outer: &Cylinder) -> Result<ModeCoefficients> {
    let (jo, ho) = (outer.j, outer.h());
    let sh = im.s * ho;
    let denom = jo + sh;
    let scale = jo.abs().max(sh.norm());
    if denom.norm() < TRANSMISSION_EIGENVALUE_TOL * scale || scale == 0.0 {
        return Err(Error::TransmissionEigenvalue { n: input.n, margin: denom.norm() });
    }
    let b = (input.f + im.s_tilde * ho * input.p) / denom;
    let c = im.s * b - im.s_tilde * input.p;
    let a = im.t * b - im.t_tilde * input.p;
    Ok(ModeCoefficients { a, b, c })
}

/// A two-sided interface between an interior medium of wave number κω at
/// physical radius `r_physical` and vacuum at virtual radius `r_virtual`.
/// The truncated cloak uses (κ, ρ, R); κ = 1 with equal radii is a
/// continuous vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface {
    pub kappa: f64,
    pub r_virtual: f64,
    pub r_physical: f64,
}

impl Interface {
    pub fn of_cloak(params: &CloakParams) -> Self {
        Interface { kappa: params.kappa, r_virtual: params.rho(), r_physical: params.truncation() }
    }

    pub fn vacuum(radius: f64) -> Self {
        Interface { kappa: 1.0, r_virtual: radius, r_physical: radius }
    }
}

type Matrix3 = [[Complex64; 3]; 3];

/// Rows of the 3×3 system with the right-hand side, for unknowns (a, b, c).
fn assemble(
    input: &ModeInput,
    omega: f64,
    iface: &Interface,
    cyl: &ModeCylinders,
) -> (Matrix3, [Complex64; 3]) {
    let z = Complex64::new(0.0, 0.0);
    let re = Complex64::from;
    let (ik, iv, io) = (&cyl.interior, &cyl.virtual_side, &cyl.outer);
    let flux_in = iface.kappa * iface.kappa * omega * iface.r_physical;
    let flux_out = omega * iface.r_virtual;
    let m = [
        [z, re(io.j), io.h()],
        [re(ik.j), re(-iv.j), -iv.h()],
        [re(flux_in * ik.jp), re(-flux_out * iv.jp), -flux_out * iv.hp()],
    ];
    let rhs = [input.f, -input.p * ik.h(), -input.p * flux_in * ik.hp()];
    (m, rhs)
}

fn interface_cylinders(order: u32, omega: f64, iface: &Interface) -> Result<ModeCylinders> {
    Ok(ModeCylinders {
        interior: cylinder(order, iface.kappa * omega * iface.r_physical)?,
        virtual_side: cylinder(order, omega * iface.r_virtual)?,
        outer: cylinder(order, DOMAIN_RADIUS * omega)?,
    })
}

/// Coefficients from Gaussian elimination with partial pivoting on the
/// row- and column-equilibrated 3×3 system.
pub fn solve_mode_direct(input: &ModeInput, params: &CloakParams) -> Result<ModeCoefficients> {
    params.check_mode(input.n)?;
    solve_interface_direct(input, params.omega, &Interface::of_cloak(params))
}

pub fn solve_interface_direct(
    input: &ModeInput,
    omega: f64,
    iface: &Interface,
) -> Result<ModeCoefficients> {
    let n = input.n;
    let cyl = interface_cylinders(n.unsigned_abs(), omega, iface)?;
    let (mut m, mut rhs) = assemble(input, omega, iface, &cyl);

    for (row, r) in m.iter_mut().zip(rhs.iter_mut()) {
        let big = row.iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
        if big == 0.0 || !big.is_finite() {
            return Err(Error::SingularSystem { n });
        }
        row.iter_mut().for_each(|v| *v /= big);
        *r /= big;
    }
    let mut col_scale = [1.0; 3];
    for (q, cs) in col_scale.iter_mut().enumerate() {
        let big = m.iter().fold(0.0f64, |acc, row| acc.max(row[q].norm()));
        if big == 0.0 {
            return Err(Error::SingularSystem { n });
        }
        *cs = big;
        m.iter_mut().for_each(|row| row[q] /= big);
    }

    let lu = Lu3::factor(m).ok_or(Error::SingularSystem { n })?;
    let y = lu.solve(rhs);
    let coeffs = ModeCoefficients {
        a: y[0] / col_scale[0],
        b: y[1] / col_scale[1],
        c: y[2] / col_scale[2],
    };

    let condition = norm1(&m) * lu.inverse_norm1();
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned { n, condition, coeffs });
    }
    Ok(coeffs)
}

fn norm1(m: &Matrix3) -> f64 {
    (0..3).map(|q| m.iter().map(|row| row[q].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// LU factors with row permutation.
struct Lu3 {
    lu: Matrix3,
    perm: [usize; 3],
}

impl Lu3 {
    fn factor(mut a: Matrix3) -> Option<Self> {
        let mut perm = [0, 1, 2];
        for k in 0..3 {
            let pivot = (k..3).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))?;
            if a[pivot][k].norm() == 0.0 {
                return None;
            }
            a.swap(k, pivot);
            perm.swap(k, pivot);
            for i in k + 1..3 {
                let factor = a[i][k] / a[k][k];
                a[i][k] = factor;
                for j in k + 1..3 {
                    let sub = factor * a[k][j];
                    a[i][j] -= sub;
                }
            }
        }
        Some(Lu3 { lu: a, perm })
    }

    fn solve(&self, b: [Complex64; 3]) -> [Complex64; 3] {
        let mut x = [b[self.perm[0]], b[self.perm[1]], b[self.perm[2]]];
        for i in 0..3 {
            for j in 0..i {
                let sub = self.lu[i][j] * x[j];
                x[i] -= sub;
            }
        }
        for i in (0..3).rev() {
            for j in i + 1..3 {
                let sub = self.lu[i][j] * x[j];
                x[i] -= sub;
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    fn inverse_norm1(&self) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        (0..3)
            .map(|q| {
                let mut e = [zero; 3];
                e[q] = one;
                self.solve(e).iter().map(|v| v.norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Residual of each of the three equations divided by the largest magnitude
/// among its terms (zero when every term vanishes).
pub fn residuals(coeffs: &ModeCoefficients, input: &ModeInput, params: &CloakParams) -> Result<[f64; 3]> {
    let order = params.check_mode(input.n)?;
    let cyl = ModeCylinders::new(order, params)?;
    let (m, rhs) = assemble(input, params.omega, &Interface::of_cloak(params), &cyl);
    let x = coeffs.as_array();
    let mut out = [0.0; 3];
    for (i, row) in m.iter().enumerate() {
        let terms = [row[0] * x[0], row[1] * x[1], row[2] * x[2], -rhs[i]];
        let big = terms.iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
        let sum: Complex64 = terms.iter().sum();
        out[i] = if big == 0.0 { 0.0 } else { sum.norm() / big };
    }
    Ok(out)
}

/// aₙ/pₙ when f ≡ 0, computed as A/B.
pub fn interior_gain(n: i32, params: &CloakParams) -> Result<Complex64> {
    let im = intermediates(n, params)?;
    if im.gain_den.norm() < TINY {
        return Err(Error::ResonanceSingular { n });
    }
    Ok(im.gain_num / im.gain_den)
}

/// Everything the solver knows about one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub input: ModeInput,
    pub coeffs: ModeCoefficients,
    pub intermediates: Intermediates,
    pub residuals: [f64; 3],
}

pub fn solve_mode(input: &ModeInput, params: &CloakParams) -> Result<ModeSolution> {
    let order = params.check_mode(input.n)?;
    let cyl = ModeCylinders::new(order, params)?;
    let im = intermediates_from(input.n, params, &cyl)?;
    let coeffs = closed_from(input, &im, &cyl.outer)?;
    let residuals = residuals(&coeffs, input, params)?;
    Ok(ModeSolution { input: *input, coeffs, intermediates: im, residuals })
}

/// Solves every input in parallel; the output order matches the input order.
pub fn solve_modes(inputs: &[ModeInput], params: &CloakParams) -> Vec<Result<ModeSolution>> {
    inputs.par_iter().map(|input| solve_mode(input, params)).collect()
}

/// Inputs for modes −N..=N looked up from sparse (n, value) lists; missing
/// modes get zero.
pub fn mode_inputs(
    max_mode: u32,
    boundary: &[(i32, Complex64)],
    source: &[(i32, Complex64)],
) -> Vec<ModeInput> {
    let lookup = |list: &[(i32, Complex64)], n: i32| {
        list.iter().filter(|(m, _)| *m == n).map(|(_, v)| *v).sum::<Complex64>()
    };
    let n = max_mode as i32;
    (-n..=n).map(|m| ModeInput::new(m, lookup(boundary, m), lookup(source, m))).collect()
}

/// −2i/(πω), the value of t·D.
pub fn expected_t_times_d(omega: f64) -> Complex64 {
    Complex64::new(0.0, -2.0 / (PI * omega))
}

/// 2iκ/(πω), the value of s̃·D.
pub fn expected_s_tilde_times_d(kappa: f64, omega: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * kappa / (PI * omega))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kappa: f64, omega: f64, r: f64) -> CloakParams {
        CloakParams::new(kappa, omega, r, 5).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CloakParams::new(0.0, 1.0, 1.1, 2).is_err());
        assert!(CloakParams::new(1.0, -1.0, 1.1, 2).is_err());
        assert!(CloakParams::new(1.0, 1.0, 2.0, 2).is_err());
        assert!(CloakParams::new(1.0, 1.0, 1.1, 61).is_err());
        let p = params(1.0, 1.0, 1.1);
        assert!(matches!(intermediates(6, &p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn wronskian_reductions() {
        let p = params(1.0, 1.0, 1.1);
        let im = intermediates(1, &p).unwrap();
        assert!(rel(im.t * im.d, expected_t_times_d(1.0)) < 1e-10);
        assert!(rel(im.s_tilde * im.d, expected_s_tilde_times_d(1.0, 1.0)) < 1e-10);
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let p = params(1.0, 1.0, 1.1);
        let input = ModeInput::new(2, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(solve_mode_closed(&input, &p).unwrap(), ModeCoefficients::zero());
        assert_eq!(solve_mode_direct(&input, &p).unwrap(), ModeCoefficients::zero());
    }

    #[test]
    fn closed_matches_direct_single_case() {
        let p = params(1.0, 1.0, 1.1);
        let input = ModeInput::source(1, one());
        let c = solve_mode_closed(&input, &p).unwrap();
        let d = solve_mode_direct(&input, &p).unwrap();
        for (x, y) in c.as_array().iter().zip(d.as_array()) {
            assert!(rel(*x, y) < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn boundary_driven_mode_zero_residuals() {
        let p = params(1.0, 2.0, 1.01);
        let input = ModeInput::boundary(0, one());
        let c = solve_mode_closed(&input, &p).unwrap();
        for r in residuals(&c, &input, &p).unwrap() {
            assert!(r <= 1e-9, "{r:e}");
        }
    }

    #[test]
    fn source_only_gain_matches_closed_form() {
        let p = params(1.3, 0.7, 1.2);
        for n in 0..=3 {
            let c = solve_mode_closed(&ModeInput::source(n, one()), &p).unwrap();
            let g = interior_gain(n, &p).unwrap();
            assert!(rel(c.a, g) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn perturbed_coefficients_leave_residual() {
        let p = params(1.0, 1.0, 1.1);
        let input = ModeInput::source(1, one());
        let c = solve_mode_closed(&input, &p).unwrap();
        let bumped = ModeCoefficients { a: c.a * 1.001, ..c };
        let r = residuals(&bumped, &input, &p).unwrap();
        assert!(r.iter().cloned().fold(0.0, f64::max) >= 1e-5, "{r:?}");
    }

    #[test]
    fn zero_coefficients_with_source_leave_second_equation_unbalanced() {
        let p = params(1.0, 1.0, 1.1);
        let input = ModeInput::source(1, one());
        let r = residuals(&ModeCoefficients::zero(), &input, &p).unwrap();
        // the only nonzero term of the second equation is p·H(κωR)
        assert_eq!(r[1], 1.0);
        assert_eq!(r[0], 0.0);
    }

    #[test]
    fn transmission_eigenvalue_is_detected() {
        let outer = cylinder(1, 2.0).unwrap();
        let mut im = intermediates(1, &params(1.0, 1.0, 1.1)).unwrap();
        im.s = -Complex64::from(outer.j) / outer.h();
        let err = closed_from(&ModeInput::boundary(1, one()), &im, &outer).unwrap_err();
        assert!(matches!(err, Error::TransmissionEigenvalue { n: 1, .. }));
    }

    #[test]
    fn linearity_and_symmetry() {
        let p = params(0.8, 1.7, 1.3);
        let f = Complex64::new(0.3, -0.2);
        let q = Complex64::new(-1.1, 0.4);
        let base = solve_mode_direct(&ModeInput::new(3, f, q), &p).unwrap();
        let double = solve_mode_direct(&ModeInput::new(3, f * 2.0, q * 2.0), &p).unwrap();
        for (x, y) in base.as_array().iter().zip(double.as_array()) {
            assert!((x * 2.0 - y).norm() <= 1e-12 * y.norm());
        }
        let mirrored = solve_mode_direct(&ModeInput::new(-3, f, q), &p).unwrap();
        assert_eq!(base, mirrored);
    }

    #[test]
    fn vacuum_interface_reduces_to_disc_solution() {
        let omega = 1.0;
        let input = ModeInput::boundary(0, one());
        let c = solve_interface_direct(&input, omega, &Interface::vacuum(1.3)).unwrap();
        let j3 = cylinder(0, 3.0 * omega).unwrap().j;
        assert!((c.b - 1.0 / j3).norm() < 1e-12);
        assert!((c.a - c.b).norm() < 1e-12);
        assert!(c.c.norm() < 1e-12);
    }

    #[test]
    fn solve_modes_keeps_order() {
        let p = params(1.0, 1.0, 1.1);
        let inputs = mode_inputs(3, &[(2, one())], &[(-1, one()), (1, one())]);
        assert_eq!(inputs.len(), 7);
        let out = solve_modes(&inputs, &p);
        for (input, sol) in inputs.iter().zip(&out) {
            assert_eq!(sol.as_ref().unwrap().input.n, input.n);
        }
    }
}
