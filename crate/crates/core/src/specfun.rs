//! Cylinder functions of integer order: Bessel J and Y, the Hankel function
//! H⁽¹⁾ = J + iY, and their first derivatives.
//!
//! Regimes:
//! - ascending power series for J when the series has no cancellation
//!   (x ≤ 2, or x² ≤ n);
//! - Miller's backward recurrence normalized by the Neumann sum
//!   J₀ + 2ΣJ₂ₖ = 1 for the remaining J values with x ≤ 40 + n²/4;
//! - Y₀ and Y₁ from the Neumann series in J₂ₖ for x ≤ 40, then upward
//!   recurrence in the order (stable for Y);
//! - Hankel's asymptotic expansion for J when x > 40 + n²/4 and for the
//!   Y₀/Y₁ seeds when x > 40.
//!
//! Supported range: 0 ≤ n ≤ 60, 0 ≤ x ≤ 200 (x > 0 for Y and H⁽¹⁾).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 60;
pub const MAX_ARGUMENT: f64 = 200.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_ABOVE: f64 = 1e200;

/// Values of J, Y and their derivatives for one order at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub j: f64,
    pub y: f64,
    pub jp: f64,
    pub yp: f64,
}

impl Cylinder {
    pub fn h(&self) -> Complex64 {
        Complex64::new(self.j, self.y)
    }

    pub fn hp(&self) -> Complex64 {
        Complex64::new(self.jp, self.yp)
    }
}

fn check(n: u32, x: f64, allow_zero: bool) -> Result<()> {
    let x_ok = x.is_finite() && x <= MAX_ARGUMENT && (x > 0.0 || (allow_zero && x == 0.0));
    if n > MAX_ORDER || !x_ok {
        return Err(Error::Range { order: n, arg: x });
    }
    Ok(())
}

fn finite(v: f64, n: u32, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Range { order: n, arg: x })
    }
}

pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    check(n, x, true)?;
    Ok(j_sequence(n, x)[n as usize])
}

pub fn bessel_y(n: u32, x: f64) -> Result<f64> {
    check(n, x, false)?;
    finite(y_sequence(n, x)[n as usize], n, x)
}

pub fn bessel_j_prime(n: u32, x: f64) -> Result<f64> {
    check(n, x, true)?;
    let j = j_sequence(n + 1, x);
    Ok(derivative(&j, n as usize))
}

pub fn bessel_y_prime(n: u32, x: f64) -> Result<f64> {
    check(n, x, false)?;
    let y = y_sequence(n + 1, x);
    finite(derivative(&y, n as usize), n, x)
}

pub fn hankel1(n: u32, x: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_j(n, x)?, bessel_y(n, x)?))
}

pub fn hankel1_prime(n: u32, x: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_j_prime(n, x)?, bessel_y_prime(n, x)?))
}

/// J, Y, J′, Y′ of order `n` at `x > 0` from a single pair of sequences.
pub fn cylinder(n: u32, x: f64) -> Result<Cylinder> {
    check(n, x, false)?;
    let (j, y) = jy_sequences(n + 1, x);
    let k = n as usize;
    let c = Cylinder { j: j[k], y: y[k], jp: derivative(&j, k), yp: derivative(&y, k) };
    finite(c.y, n, x)?;
    finite(c.yp, n, x)?;
    Ok(c)
}

/// [`Cylinder`] values for every order `0..=nmax` at `x > 0`.
pub fn cylinder_sequence(nmax: u32, x: f64) -> Result<Vec<Cylinder>> {
    check(nmax, x, false)?;
    let (j, y) = jy_sequences(nmax + 1, x);
    (0..=nmax as usize)
        .map(|k| {
            let c = Cylinder { j: j[k], y: y[k], jp: derivative(&j, k), yp: derivative(&y, k) };
            finite(c.y, k as u32, x)?;
            finite(c.yp, k as u32, x)?;
            Ok(c)
        })
        .collect()
}

/// |Jₙ(x)Y′ₙ(x) − J′ₙ(x)Yₙ(x) − 2/(πx)|
pub fn wronskian_residual(n: u32, x: f64) -> Result<f64> {
    let c = cylinder(n, x)?;
    Ok((c.j * c.yp - c.jp * c.y - FRAC_2_PI / x).abs())
}

fn derivative(f: &[f64], n: usize) -> f64 {
    if n == 0 {
        -f[1]
    } else {
        0.5 * (f[n - 1] - f[n + 1])
    }
}

fn asymptotic_threshold(n: u32) -> f64 {
    40.0 + (n * n) as f64 / 4.0
}

fn use_series(n: u32, x: f64) -> bool {
    x <= 2.0 || x * x <= n as f64
}

/// J₀..J_nmax at x ≥ 0 (nmax may exceed `MAX_ORDER` by one for derivatives).
fn j_sequence(nmax: u32, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax as usize + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let mut miller: Option<Vec<f64>> = None;
    for k in 0..=nmax {
        out[k as usize] = if x > asymptotic_threshold(k) {
            hankel_asymptotic(k, x).0
        } else if use_series(k, x) {
            j_series(k, x)
        } else {
            miller.get_or_insert_with(|| miller_j(nmax, x))[k as usize]
        };
    }
    out
}

fn y_sequence(nmax: u32, x: f64) -> Vec<f64> {
    jy_sequences(nmax, x).1
}

fn jy_sequences(nmax: u32, x: f64) -> (Vec<f64>, Vec<f64>) {
    let j = j_sequence(nmax, x);
    let (y0, y1) = if x > 40.0 {
        (hankel_asymptotic(0, x).1, hankel_asymptotic(1, x).1)
    } else {
        neumann_y01(x)
    };
    let mut y = Vec::with_capacity(nmax as usize + 1);
    y.push(y0);
    if nmax >= 1 {
        y.push(y1);
    }
    for k in 1..nmax as usize {
        let next = (2.0 * k as f64 / x) * y[k] - y[k - 1];
        y.push(next);
    }
    (j, y)
}

/// Ascending series Σ (−x²/4)ᵏ (x/2)ⁿ / (k!(n+k)!).
fn j_series(n: u32, x: f64) -> f64 {
    let hx = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=n {
        term *= hx / i as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = -hx * hx;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (n as f64 + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Miller backward recurrence; returns J₀..J_M with M large enough that the
/// Neumann sums for Y converge as well.
fn miller_j(nmax: u32, x: f64) -> Vec<f64> {
    let base = (nmax as f64).max(x.ceil());
    let mut m = (base + 20.0 + 4.0 * base.sqrt()).ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let mut f = vec![0.0; m + 2];
    f[m] = 1e-30;
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        f[k - 1] = (2.0 * k as f64 / x) * f[k] - f[k + 1];
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * f[k - 1];
        }
        if f[k - 1].abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            for v in f[k - 1..].iter_mut() {
                *v *= s;
            }
            norm *= s;
        }
    }
    norm += f[0];
    f.truncate(m + 1);
    for v in f.iter_mut() {
        *v /= norm;
    }
    f
}

/// Y₀ and Y₁ from the Neumann expansions
/// Y₀ = (2/π)[(ln(x/2)+γ)J₀ − 2Σ(−1)ᵏJ₂ₖ/k],
/// Y₁ = (2/π)[(ln(x/2)+γ)J₁ − J₀/x + Σ(−1)ᵏ(J₂ₖ₋₁ − J₂ₖ₊₁)/k].
fn neumann_y01(x: f64) -> (f64, f64) {
    let j = if x < 1.0 {
        let m = 24;
        (0..=m).map(|k| j_series(k, x)).collect::<Vec<_>>()
    } else {
        miller_j(1, x)
    };
    let m = j.len() - 1;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k < m {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * (log_term * j[0] - 2.0 * s0);
    let y1 = FRAC_2_PI * (log_term * j[1] - j[0] / x + s1);
    (y0, y1)
}

/// Hankel's large-argument expansion; returns (Jₙ(x), Yₙ(x)).
fn hankel_asymptotic(n: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        // P collects even k with signs +,-,+..; Q collects odd k with +,-,..
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-18 * (p.abs() + q.abs()) {
            break;
        }
    }
    // χ = x − (2n+1)π/4
    let (cphi, sphi) = match (2 * n + 1) % 8 {
        1 => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        3 => (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        5 => (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        _ => (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    };
    let (sx, cx) = x.sin_cos();
    let cchi = cx * cphi + sx * sphi;
    let schi = sx * cphi - cx * sphi;
    let amp = (2.0 / (PI * x)).sqrt();
    (amp * (p * cchi - q * schi), amp * (p * schi + q * cchi))
}
