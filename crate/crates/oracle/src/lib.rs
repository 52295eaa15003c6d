//! Arbitrary-precision reference values for cylinder functions.
//!
//! Everything here is deliberately slow and simple: power series summed in a
//! binary floating-point format with a few hundred bits of mantissa, so the
//! cancellation that plagues the ascending series in `f64` is irrelevant for
//! arguments up to a few hundred. The results are used only to freeze
//! expected values in tests of the production code paths.

mod bigfloat;

use std::sync::OnceLock;

pub use bigfloat::{BigComplex, BigFloat};

/// Working precision in bits.
pub const PREC: u64 = 704;

/// Euler–Mascheroni constant, 120 digits.
const EULER_GAMMA: &str = "0.577215664901532860606512090082402431042159335939923598805767234884867726777664670936947063291746749514631447249807082480960";

fn half(x: &BigFloat) -> BigFloat {
    x.mul_pow2(-1)
}

/// π via Machin's formula.
pub fn pi() -> BigFloat {
    static PI: OnceLock<BigFloat> = OnceLock::new();
    PI.get_or_init(|| {
        let a = atan_inv(5);
        let b = atan_inv(239);
        a.mul_pow2(4).sub(&b.mul_pow2(2))
    })
    .clone()
}

/// atan(1/m) by its Taylor series.
fn atan_inv(m: i64) -> BigFloat {
    let x = BigFloat::one().div(&BigFloat::from_i64(m));
    let x2 = x.mul(&x);
    let mut power = x;
    let mut sum = BigFloat::zero();
    let mut k = 0i64;
    loop {
        let term = power.div(&BigFloat::from_i64(2 * k + 1));
        if term.is_negligible_against(&sum) {
            break;
        }
        sum = if k % 2 == 0 { sum.add(&term) } else { sum.sub(&term) };
        power = power.mul(&x2);
        k += 1;
    }
    sum
}

/// atanh(z) for |z| ≤ 1/3.
fn atanh_small(z: &BigFloat) -> BigFloat {
    let z2 = z.mul(z);
    let mut power = z.clone();
    let mut sum = BigFloat::zero();
    let mut k = 0i64;
    loop {
        let term = power.div(&BigFloat::from_i64(2 * k + 1));
        if term.is_negligible_against(&sum) {
            break;
        }
        sum = sum.add(&term);
        power = power.mul(&z2);
        k += 1;
    }
    sum
}

/// Natural logarithm of a positive value.
pub fn ln(y: &BigFloat) -> BigFloat {
    assert!(y.is_positive(), "ln of non-positive value");
    let (m, e) = y.split_mantissa();
    // m in [1, 2)
    let one = BigFloat::one();
    let z = m.sub(&one).div(&m.add(&one));
    let ln_m = atanh_small(&z).mul_pow2(1);
    static LN2: OnceLock<BigFloat> = OnceLock::new();
    let ln2 = LN2.get_or_init(|| atanh_small(&one.div(&BigFloat::from_i64(3))).mul_pow2(1));
    ln_m.add(&ln2.mul(&BigFloat::from_i64(e)))
}

pub fn euler_gamma() -> BigFloat {
    BigFloat::parse_decimal(EULER_GAMMA)
}

fn factorial(n: u32) -> BigFloat {
    let mut f = BigFloat::one();
    for k in 2..=n {
        f = f.mul(&BigFloat::from_i64(k as i64));
    }
    f
}

/// J_n(x) by the ascending series.
pub fn bessel_j(n: u32, x: &BigFloat) -> BigFloat {
    if x.is_zero() {
        return if n == 0 { BigFloat::one() } else { BigFloat::zero() };
    }
    let hx = half(x);
    let q = hx.mul(&hx).neg();
    let mut term = hx.powi(n).div(&factorial(n));
    let mut sum = BigFloat::zero();
    let mut k: i64 = 0;
    let turning = x.to_f64() * 0.5;
    loop {
        sum = sum.add(&term);
        k += 1;
        term = term.mul(&q).div(&BigFloat::from_i64(k * (n as i64 + k)));
        if (k as f64) > turning && term.is_negligible_against(&sum) {
            break;
        }
    }
    sum
}

/// Y_n(x) by the ascending series, x > 0.
pub fn bessel_y(n: u32, x: &BigFloat) -> BigFloat {
    assert!(x.is_positive());
    let pi = pi();
    let gamma = euler_gamma();
    let hx = half(x);
    let jn = bessel_j(n, x);
    let log_part = jn.mul(&ln(&hx)).mul_pow2(1);

    // finite sum: Σ_{k<n} (n-k-1)!/k! (x/2)^{2k-n}
    let mut finite = BigFloat::zero();
    for k in 0..n {
        let coef = factorial(n - k - 1).div(&factorial(k));
        let p = 2 * k as i64 - n as i64;
        let pw = if p >= 0 {
            hx.powi(p as u32)
        } else {
            BigFloat::one().div(&hx.powi((-p) as u32))
        };
        finite = finite.add(&coef.mul(&pw));
    }

    // digamma values: psi(m + 1) = -gamma + H_m
    let q = hx.mul(&hx).neg();
    let mut harmonic_k = BigFloat::zero();
    let mut harmonic_nk = BigFloat::zero();
    for m in 1..=n {
        harmonic_nk = harmonic_nk.add(&BigFloat::one().div(&BigFloat::from_i64(m as i64)));
    }
    let mut term = hx.powi(n).div(&factorial(n));
    let mut series = BigFloat::zero();
    let mut k: i64 = 0;
    let turning = x.to_f64() * 0.5;
    loop {
        let psi_sum = harmonic_k.add(&harmonic_nk).sub(&gamma.mul_pow2(1));
        let contrib = term.mul(&psi_sum);
        series = series.add(&contrib);
        k += 1;
        harmonic_k = harmonic_k.add(&BigFloat::one().div(&BigFloat::from_i64(k)));
        harmonic_nk =
            harmonic_nk.add(&BigFloat::one().div(&BigFloat::from_i64(n as i64 + k)));
        term = term.mul(&q).div(&BigFloat::from_i64(k * (n as i64 + k)));
        if (k as f64) > turning && term.is_negligible_against(&series) {
            break;
        }
    }
    log_part.sub(&finite).sub(&series).div(&pi)
}

/// J_n, Y_n, J_n', Y_n' at x via the exact derivative identities.
#[derive(Clone, Debug)]
pub struct CylinderRef {
    pub j: BigFloat,
    pub y: BigFloat,
    pub jp: BigFloat,
    pub yp: BigFloat,
}

impl CylinderRef {
    pub fn new(n: u32, x: &BigFloat) -> Self {
        let j = bessel_j(n, x);
        let y = bessel_y(n, x);
        let (jp, yp) = if n == 0 {
            (bessel_j(1, x).neg(), bessel_y(1, x).neg())
        } else {
            (
                half(&bessel_j(n - 1, x).sub(&bessel_j(n + 1, x))),
                half(&bessel_y(n - 1, x).sub(&bessel_y(n + 1, x))),
            )
        };
        CylinderRef { j, y, jp, yp }
    }

    pub fn h(&self) -> BigComplex {
        BigComplex::new(self.j.clone(), self.y.clone())
    }

    pub fn hp(&self) -> BigComplex {
        BigComplex::new(self.jp.clone(), self.yp.clone())
    }

    pub fn jc(&self) -> BigComplex {
        BigComplex::real(self.j.clone())
    }

    pub fn jpc(&self) -> BigComplex {
        BigComplex::real(self.jp.clone())
    }
}

pub fn j_f64(n: u32, x: f64) -> f64 {
    bessel_j(n, &BigFloat::from_f64(x)).to_f64()
}

pub fn y_f64(n: u32, x: f64) -> f64 {
    bessel_y(n, &BigFloat::from_f64(x)).to_f64()
}

/// Bisection for a sign change of `f` on `[lo, hi]`, down to adjacent doubles.
pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    assert!(flo * fhi <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zeros of J_n on `[lo, hi]` located by a coarse scan and bisection on the
/// high-precision series.
pub fn bessel_j_zeros(n: u32, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let f = |x: f64| j_f64(n, x);
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    while a < hi {
        let b = (a + step).min(hi);
        let fb = f(b);
        if fa * fb < 0.0 {
            roots.push(bisect(a, b, f));
        }
        a = b;
        fa = fb;
    }
    roots
}
