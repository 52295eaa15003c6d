use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::PREC;

/// `mant · 2^exp`, mantissa truncated to `PREC` bits.
#[derive(Clone, Debug)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        BigFloat { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_i64(v: i64) -> Self {
        BigFloat { mant: BigInt::from(v), exp: 0 }.normalized()
    }

    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite());
        if v == 0.0 {
            return Self::zero();
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & 0x000f_ffff_ffff_ffff;
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), raw_exp - 1075)
        };
        BigFloat { mant: BigInt::from(sign) * BigInt::from(m), exp: e }.normalized()
    }

    /// Parse a plain decimal literal such as `0.5772`.
    pub fn parse_decimal(s: &str) -> Self {
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        let digits = format!("{int_part}{frac_part}");
        let num: BigInt = digits.parse().expect("decimal digits");
        let den = BigInt::from(10).pow(frac_part.len() as u32);
        BigFloat { mant: num, exp: 0 }.div(&BigFloat { mant: den, exp: 0 })
    }

    fn normalized(mut self) -> Self {
        if self.mant.is_zero() {
            self.exp = 0;
            return self;
        }
        let bits = self.mant.bits();
        if bits > PREC {
            let shift = bits - PREC;
            self.mant = truncate_shr(&self.mant, shift);
            self.exp += shift as i64;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    /// Position of the leading bit: value magnitude is in [2^(top-1), 2^top).
    fn top(&self) -> i64 {
        self.exp + self.mant.bits() as i64
    }

    pub fn neg(&self) -> Self {
        BigFloat { mant: -&self.mant, exp: self.exp }
    }

    pub fn abs(&self) -> Self {
        BigFloat { mant: self.mant.abs(), exp: self.exp }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (hi, lo) = if self.top() >= other.top() { (self, other) } else { (other, self) };
        if hi.top() - lo.top() > PREC as i64 + 8 {
            return hi.clone();
        }
        let e = hi.exp.min(lo.exp);
        let a = &hi.mant << ((hi.exp - e) as usize);
        let b = &lo.mant << ((lo.exp - e) as usize);
        BigFloat { mant: a + b, exp: e }.normalized()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        BigFloat { mant: &self.mant * &other.mant, exp: self.exp + other.exp }.normalized()
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero");
        if self.is_zero() {
            return Self::zero();
        }
        let shift = PREC as i64 + other.mant.bits() as i64 - self.mant.bits() as i64 + 4;
        let shift = shift.max(0);
        let num = &self.mant << (shift as usize);
        BigFloat { mant: num / &other.mant, exp: self.exp - shift - other.exp }.normalized()
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        BigFloat { mant: self.mant.clone(), exp: self.exp + k }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Returns `(m, e)` with `self = m · 2^e`, `m ∈ [1, 2)`.
    pub fn split_mantissa(&self) -> (Self, i64) {
        let e = self.top() - 1;
        (BigFloat { mant: self.mant.clone(), exp: self.exp - e }, e)
    }

    pub fn is_negligible_against(&self, reference: &Self) -> bool {
        if self.is_zero() {
            return true;
        }
        if reference.is_zero() {
            return false;
        }
        reference.top() - self.top() > PREC as i64 + 4
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let (m, e) = if bits > 62 {
            let s = bits - 62;
            (truncate_shr(&self.mant, s), self.exp + s as i64)
        } else {
            (self.mant.clone(), self.exp)
        };
        let mf = m.to_i64().expect("fits in i64") as f64;
        ldexp(mf, e)
    }
}

fn truncate_shr(v: &BigInt, shift: u64) -> BigInt {
    // shift toward zero so the sign of tiny values is preserved symmetrically
    let (sign, mag) = (v.sign(), v.magnitude());
    let m = mag >> (shift as usize);
    BigInt::from_biguint(if sign == Sign::Minus { Sign::Minus } else { Sign::Plus }, m)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 900 {
        x *= 2f64.powi(900);
        e -= 900;
    }
    while e < -900 {
        x *= 2f64.powi(-900);
        e += 900;
    }
    x * 2f64.powi(e as i32)
}

#[derive(Clone, Debug)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl BigComplex {
    pub fn new(re: BigFloat, im: BigFloat) -> Self {
        BigComplex { re, im }
    }

    pub fn real(re: BigFloat) -> Self {
        BigComplex { re, im: BigFloat::zero() }
    }

    pub fn scale(&self, s: &BigFloat) -> Self {
        BigComplex::new(self.re.mul(s), self.im.mul(s))
    }

    pub fn add(&self, o: &Self) -> Self {
        BigComplex::new(self.re.add(&o.re), self.im.add(&o.im))
    }

    pub fn sub(&self, o: &Self) -> Self {
        BigComplex::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }

    pub fn mul(&self, o: &Self) -> Self {
        BigComplex::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }

    pub fn div(&self, o: &Self) -> Self {
        let den = o.re.mul(&o.re).add(&o.im.mul(&o.im));
        let num = self.mul(&BigComplex::new(o.re.clone(), o.im.neg()));
        BigComplex::new(num.re.div(&den), num.im.div(&den))
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_doubles() {
        for v in [1.0, -3.5, 1e-300, 123456.789, -2.2250738585072014e-308, 6.02e23] {
            assert_eq!(BigFloat::from_f64(v).to_f64(), v);
        }
    }

    #[test]
    fn arithmetic() {
        let a = BigFloat::from_f64(1.5);
        let b = BigFloat::from_f64(-0.25);
        assert_eq!(a.add(&b).to_f64(), 1.25);
        assert_eq!(a.mul(&b).to_f64(), -0.375);
        assert_eq!(a.div(&b).to_f64(), -6.0);
        let third = BigFloat::one().div(&BigFloat::from_i64(3));
        assert_eq!(third.to_f64(), 1.0 / 3.0);
    }
}
