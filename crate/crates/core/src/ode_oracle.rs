//! Finite-difference solution of the coupled radial problem, independent of
//! the closed-form coefficients.
//!
//! Both radial equations are discretized in s = ln r, where the Bessel
//! operator becomes u_ss + (k²r² − n²)u = 0 with a constant step. The
//! interior unknown is the regular remainder u = aJ(κωr) on [r_cut, R]; the
//! exterior unknown is v = bJ(ωr) + cH(ωr) on [ρ, 3]. Both grids are solved
//! as one banded system coupled by the interface conditions.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::geometry::DOMAIN_RADIUS;
use crate::mode_solver::{CloakParams, Interface, ModeCoefficients, ModeInput};
use crate::specfun::{bessel_j, cylinder, hankel1};

/// Inner end of the interior grid; the regular series fixes the boundary row there.
pub const INNER_CUT: f64 = 1e-3;
/// Field samples sit at these fractions j/20 of each log-interval.
pub const SAMPLE_FRACTIONS: usize = 20;
pub const MIN_GRID_POINTS: usize = 200;

/// Forward first-derivative weights, error O(h⁴); boundary rows stay below
/// the centered O(h²) error so one Richardson level removes it.
const ONE_SIDED: [f64; 5] = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub grid_points_interior: usize,
    pub grid_points_exterior: usize,
    pub richardson_levels: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { grid_points_interior: 800, grid_points_exterior: 800, richardson_levels: 1 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("interior", self.grid_points_interior), ("exterior", self.grid_points_exterior)] {
            if m < MIN_GRID_POINTS || m % SAMPLE_FRACTIONS != 0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} grid needs at least {MIN_GRID_POINTS} intervals in multiples of {SAMPLE_FRACTIONS}, got {m}"
                )));
            }
        }
        if !(1..=3).contains(&self.richardson_levels) {
            return Err(Error::InvalidParameter(format!(
                "richardson_levels = {} must lie in 1..=3",
                self.richardson_levels
            )));
        }
        Ok(())
    }

    /// Single grid, no extrapolation; used for convergence studies.
    fn raw(interior: usize, exterior: usize) -> Self {
        OracleConfig { grid_points_interior: interior, grid_points_exterior: exterior, richardson_levels: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub r: f64,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub n: i32,
    pub coeffs: ModeCoefficients,
    /// Interior field aJ + pH at fractions 1/20..=20/20 of [ln r_cut, ln R].
    pub interior: Vec<FieldSample>,
    /// Exterior field at fractions 1/20..=20/20 of [ln ρ, ln 3].
    pub exterior: Vec<FieldSample>,
}

impl OracleSolution {
    fn combine(&self, other: &OracleSolution, wa: f64, wb: f64) -> OracleSolution {
        let mix = |x: Complex64, y: Complex64| x * wa + y * wb;
        let samples = |a: &[FieldSample], b: &[FieldSample]| {
            a.iter().zip(b).map(|(x, y)| FieldSample { r: x.r, value: mix(x.value, y.value) }).collect()
        };
        OracleSolution {
            n: self.n,
            coeffs: ModeCoefficients {
                a: mix(self.coeffs.a, other.coeffs.a),
                b: mix(self.coeffs.b, other.coeffs.b),
                c: mix(self.coeffs.c, other.coeffs.c),
            },
            interior: samples(&self.interior, &other.interior),
            exterior: samples(&self.exterior, &other.exterior),
        }
    }
}

pub fn oracle_solve(input: &ModeInput, params: &CloakParams, config: &OracleConfig) -> Result<OracleSolution> {
    params.check_mode(input.n)?;
    oracle_solve_interface(input, params.omega, &Interface::of_cloak(params), config)
}

/// Richardson-extrapolated solve: levels L uses grids M, 2M, …, 2ᴸM.
pub fn oracle_solve_interface(
    input: &ModeInput,
    omega: f64,
    iface: &Interface,
    config: &OracleConfig,
) -> Result<OracleSolution> {
    config.validate()?;
    extrapolated(input, omega, iface, config)
}

fn extrapolated(input: &ModeInput, omega: f64, iface: &Interface, config: &OracleConfig) -> Result<OracleSolution> {
    let levels = config.richardson_levels as usize;
    let grids: Vec<usize> = (0..=levels).collect();
    let base: Vec<OracleSolution> = grids
        .par_iter()
        .map(|&l| {
            let m = config.grid_points_interior << l;
            let k = config.grid_points_exterior << l;
            solve_grid(input, omega, iface, m, k)
        })
        .collect::<Result<_>>()?;
    let mut table = base;
    for m in 1..=levels {
        let f = 4f64.powi(m as i32);
        table = table.windows(2).map(|w| w[1].combine(&w[0], f / (f - 1.0), -1.0 / (f - 1.0))).collect();
    }
    Ok(table.remove(0))
}

fn check_interface(omega: f64, iface: &Interface) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0 && iface.kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega}, kappa = {} must be positive", iface.kappa)));
    }
    if !(iface.r_physical > INNER_CUT && iface.r_virtual > 0.0 && iface.r_virtual < DOMAIN_RADIUS) {
        return Err(Error::InvalidParameter(format!(
            "interface radii ({}, {}) outside ({INNER_CUT}, {DOMAIN_RADIUS})",
            iface.r_virtual, iface.r_physical
        )));
    }
    Ok(())
}

/// One finite-difference solve with `m` interior and `k` exterior intervals.
fn solve_grid(input: &ModeInput, omega: f64, iface: &Interface, m: usize, k: usize) -> Result<OracleSolution> {
    check_interface(omega, iface)?;
    let n = input.n;
    let order = n.unsigned_abs();
    let nn = (order * order) as f64;
    let k_in = iface.kappa * omega;
    let (s0, s1) = (INNER_CUT.ln(), iface.r_physical.ln());
    let (t0, t1) = (iface.r_virtual.ln(), DOMAIN_RADIUS.ln());
    let (hu, hv) = ((s1 - s0) / m as f64, (t1 - t0) / k as f64);
    let q = |wave: f64, s: f64| wave * wave * (2.0 * s).exp() - nn;

    let size = m + k + 2;
    let mut a = BandMatrix::new(size, 4, 5);
    let mut rhs = vec![Complex64::new(0.0, 0.0); size];

    // regular behaviour at r_cut: s·d/ds ln J ≈ n − x²/(2(n+1))
    let x = k_in * INNER_CUT;
    let beta = order as f64 - x * x / (2.0 * (order as f64 + 1.0));
    for (i, w) in ONE_SIDED.iter().enumerate() {
        a.set(0, i, w / hu - if i == 0 { beta } else { 0.0 });
    }
    for i in 1..m {
        let s = s0 + i as f64 * hu;
        a.set(i, i - 1, 1.0 / (hu * hu));
        a.set(i, i, -2.0 / (hu * hu) + q(k_in, s));
        a.set(i, i + 1, 1.0 / (hu * hu));
    }

    let at_r = cylinder(order, k_in * iface.r_physical)?;
    let v0 = m + 1;
    // flux: v_s(ρ) − κ u_s(R) = κ p κωR H′(κωR)
    for (i, w) in ONE_SIDED.iter().enumerate() {
        // backward stencil at s = ln R is the forward one mirrored
        a.set(m, m - i, iface.kappa * w / hu);
        a.set(m, v0 + i, w / hv);
    }
    rhs[m] = input.p * iface.kappa * k_in * iface.r_physical * at_r.hp();
    // value: v(ρ) − u(R) = pH(κωR)
    a.set(m + 1, m, -1.0);
    a.set(m + 1, v0, 1.0);
    rhs[m + 1] = input.p * at_r.h();

    for j in 1..k {
        let t = t0 + j as f64 * hv;
        let row = v0 + j;
        a.set(row, row - 1, 1.0 / (hv * hv));
        a.set(row, row, -2.0 / (hv * hv) + q(omega, t));
        a.set(row, row + 1, 1.0 / (hv * hv));
    }
    a.set(v0 + k, v0 + k, 1.0);
    rhs[v0 + k] = input.f;

    let x = a.solve(rhs).ok_or(Error::OracleSingular { n })?;
    if x.iter().any(|z| !z.is_finite()) {
        return Err(Error::OracleSingular { n });
    }
    let (u, v) = x.split_at(m + 1);

    let step_u = m / SAMPLE_FRACTIONS;
    let step_v = k / SAMPLE_FRACTIONS;
    let mut interior = Vec::with_capacity(SAMPLE_FRACTIONS);
    let mut exterior = Vec::with_capacity(SAMPLE_FRACTIONS);
    let (mut jj, mut ju) = (0.0, Complex64::new(0.0, 0.0));
    let mut fit_rows = Vec::new();
    for j in 1..=SAMPLE_FRACTIONS {
        let r = if j == SAMPLE_FRACTIONS { iface.r_physical } else { (s0 + (j * step_u) as f64 * hu).exp() };
        let rem = u[j * step_u];
        interior.push(FieldSample { r, value: rem + input.p * hankel1(order, k_in * r)? });
        let rv = if j == SAMPLE_FRACTIONS { DOMAIN_RADIUS } else { (t0 + (j * step_v) as f64 * hv).exp() };
        let val = v[j * step_v];
        exterior.push(FieldSample { r: rv, value: val });
        if j % 2 == 0 {
            let jr = bessel_j(order, k_in * r)?;
            jj += jr * jr;
            ju += rem * jr;
            fit_rows.push((bessel_j(order, omega * rv)?, hankel1(order, omega * rv)?, val));
        }
    }
    if jj == 0.0 {
        return Err(Error::OracleSingular { n });
    }
    let (b, c) = fit_exterior(&fit_rows).ok_or(Error::OracleSingular { n })?;
    Ok(OracleSolution { n, coeffs: ModeCoefficients { a: ju / jj, b, c }, interior, exterior })
}

/// Least squares for v ≈ bJ + cH with the two columns scaled to unit size.
fn fit_exterior(rows: &[(f64, Complex64, Complex64)]) -> Option<(Complex64, Complex64)> {
    let sj = rows.iter().fold(0.0f64, |m, r| m.max(r.0.abs()));
    let sh = rows.iter().fold(0.0f64, |m, r| m.max(r.1.norm()));
    if sj == 0.0 || sh == 0.0 {
        return None;
    }
    let zero = Complex64::new(0.0, 0.0);
    let (mut g11, mut g12, mut g22, mut r1, mut r2) = (0.0, zero, 0.0, zero, zero);
    for &(j, h, v) in rows {
        let (j, h) = (j / sj, h / sh);
        g11 += j * j;
        g12 += h * j;
        g22 += h.norm_sqr();
        r1 += v * j;
        r2 += h.conj() * v;
    }
    // [g11, g12; conj(g12), g22] (b', c') = (r1, r2)
    let det = g11 * g22 - g12.norm_sqr();
    if det <= 1e-14 * g11 * g22 {
        return None;
    }
    let b = (r1 * g22 - g12 * r2) / det;
    let c = (r2 * g11 - g12.conj() * r1) / det;
    Some((b / sj, c / sh))
}

/// Largest per-component relative difference between two coefficient sets.
pub fn coefficient_gap(x: &ModeCoefficients, y: &ModeCoefficients) -> f64 {
    x.as_array()
        .iter()
        .zip(y.as_array())
        .map(|(p, q)| {
            let scale = p.norm().max(q.norm());
            if scale == 0.0 {
                0.0
            } else {
                (p - q).norm() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Observed order of the unextrapolated scheme: log₂ of the error ratio on
/// grids with `points` and 2·`points` intervals, against `reference`.
pub fn convergence_order(
    input: &ModeInput,
    params: &CloakParams,
    points: usize,
    reference: &ModeCoefficients,
) -> Result<f64> {
    params.check_mode(input.n)?;
    let iface = Interface::of_cloak(params);
    let coarse = extrapolated(input, params.omega, &iface, &OracleConfig::raw(points, points))?;
    let fine = extrapolated(input, params.omega, &iface, &OracleConfig::raw(2 * points, 2 * points))?;
    let (ec, ef) = (coefficient_gap(&coarse.coeffs, reference), coefficient_gap(&fine.coeffs, reference));
    Ok((ec / ef).log2())
}
