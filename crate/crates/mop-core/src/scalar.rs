//! Scaled complex scalars and the small algebra traits shared by the
//! determinant, pattern and polynomial routines.

#[allow(unused_imports)]
use crate::prelude::*;
use core::ops::{Add, Div, Mul, Neg, Sub};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

/// `2^e` for `e` in the normal exponent range.
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Multiply by `2^e` without intermediate overflow.
pub fn ldexp(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= pow2(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= pow2(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * pow2(e)
}

/// `floor(log2 |v|)` for finite nonzero `v`.
pub fn exponent_of(v: f64) -> i64 {
    let bits = v.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i64;
    if e == 0 {
        exponent_of(v * pow2(64)) - 64
    } else {
        e - 1023
    }
}

/// A complex value `mantissa * 2^exp`, kept normalized so that the larger
/// component of the mantissa lies in `[1, 2)`. Zero has a zero mantissa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledScalar {
    mantissa: Complex64,
    exp: i64,
}

impl ScaledScalar {
    pub const ZERO: ScaledScalar = ScaledScalar { mantissa: Complex64::new(0.0, 0.0), exp: 0 };
    pub const ONE: ScaledScalar = ScaledScalar { mantissa: Complex64::new(1.0, 0.0), exp: 0 };

    pub fn new(value: Complex64) -> Self {
        Self::from_parts(value, 0)
    }

    pub fn from_real(value: f64) -> Self {
        Self::new(Complex64::new(value, 0.0))
    }

    /// `value * 2^exp`, normalized.
    pub fn from_parts(value: Complex64, exp: i64) -> Self {
        let m = value.re.abs().max(value.im.abs());
        if m == 0.0 || !m.is_finite() {
            return ScaledScalar { mantissa: value, exp: if m == 0.0 { 0 } else { exp } };
        }
        let e = exponent_of(m);
        ScaledScalar { mantissa: Complex64::new(ldexp(value.re, -e), ldexp(value.im, -e)), exp: exp + e }
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.re.is_finite() && self.mantissa.im.is_finite()
    }

    /// Plain complex value; overflows to infinity or underflows to zero.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(ldexp(self.mantissa.re, self.exp), ldexp(self.mantissa.im, self.exp))
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.exp as f64 * core::f64::consts::LN_2
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    /// Unit phase `value / |value|` (one for zero).
    pub fn phase(&self) -> Complex64 {
        let n = self.mantissa.norm();
        if n == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            self.mantissa / n
        }
    }

    pub fn conj(&self) -> Self {
        ScaledScalar { mantissa: self.mantissa.conj(), exp: self.exp }
    }

    pub fn mul_complex(&self, c: Complex64) -> Self {
        Self::from_parts(self.mantissa * c, self.exp)
    }

    pub fn powi(&self, mut n: i64) -> Self {
        let mut base = if n < 0 { ScaledScalar::ONE / *self } else { *self };
        if n < 0 {
            n = -n;
        }
        let mut acc = ScaledScalar::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    /// Relative distance `|a - b| / |b|` computed without leaving the scaled range.
    pub fn rel_diff(&self, reference: &ScaledScalar) -> f64 {
        if reference.is_zero() {
            return if self.is_zero() { 0.0 } else { f64::INFINITY };
        }
        ((*self - *reference) / *reference).to_complex().norm()
    }
}

impl Mul for ScaledScalar {
    type Output = ScaledScalar;
    fn mul(self, rhs: Self) -> Self {
        Self::from_parts(self.mantissa * rhs.mantissa, self.exp + rhs.exp)
    }
}

impl Div for ScaledScalar {
    type Output = ScaledScalar;
    fn div(self, rhs: Self) -> Self {
        Self::from_parts(self.mantissa / rhs.mantissa, self.exp - rhs.exp)
    }
}

impl Add for ScaledScalar {
    type Output = ScaledScalar;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let d = self.exp - rhs.exp;
        if d > 80 {
            self
        } else if d < -80 {
            rhs
        } else if d >= 0 {
            let s = rhs.mantissa * ldexp(1.0, -d);
            Self::from_parts(self.mantissa + s, self.exp)
        } else {
            let s = self.mantissa * ldexp(1.0, d);
            Self::from_parts(rhs.mantissa + s, rhs.exp)
        }
    }
}

impl Neg for ScaledScalar {
    type Output = ScaledScalar;
    fn neg(self) -> Self {
        ScaledScalar { mantissa: -self.mantissa, exp: self.exp }
    }
}

impl Sub for ScaledScalar {
    type Output = ScaledScalar;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

/// Commutative ring operations needed by cofactor expansions.
pub trait Ring: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    /// Embedding of a recurrence coefficient. Exact for the rational tier.
    fn from_real(v: f64) -> Self;
}

/// A ring with division and a pivot weight.
pub trait Field: Ring + Div<Output = Self> {
    fn magnitude(&self) -> f64;
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_real(v: f64) -> Self {
        v
    }
}

impl Field for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Ring for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_real(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
}

impl Field for Complex64 {
    fn magnitude(&self) -> f64 {
        self.re.abs() + self.im.abs()
    }
}

impl Ring for BigRational {
    fn zero() -> Self {
        <BigRational as num_traits::Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as num_traits::One>::one()
    }
    fn is_zero(&self) -> bool {
        <BigRational as num_traits::Zero>::is_zero(self)
    }
    fn from_real(v: f64) -> Self {
        BigRational::from_float(v).expect("finite coefficient")
    }
}

impl Field for BigRational {
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_keeps_value() {
        let v = Complex64::new(-3.5e200, 1.25e199);
        let s = ScaledScalar::new(v);
        let m = s.mantissa();
        assert!(m.re.abs().max(m.im.abs()) >= 1.0 && m.re.abs().max(m.im.abs()) < 2.0);
        assert!((s.to_complex() - v).norm() <= 1e-15 * v.norm());
    }

    #[test]
    fn products_beyond_double_range() {
        let big = ScaledScalar::from_real(1e300);
        let p = big * big * big;
        assert!((p.ln_abs() - 900.0 * 10f64.ln()).abs() < 1e-9);
        let back = p / big / big;
        assert!((back.to_complex().re - 1e300).abs() < 1e285);
    }

    #[test]
    fn addition_aligns_exponents() {
        let a = ScaledScalar::from_real(1.5);
        let b = ScaledScalar::from_real(-0.25);
        assert_eq!((a + b).to_complex().re, 1.25);
        let tiny = ScaledScalar::from_parts(Complex64::new(1.0, 0.0), -400);
        assert_eq!((a + tiny).to_complex().re, 1.5);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let z = ScaledScalar::new(Complex64::new(0.3, -1.7));
        let mut acc = ScaledScalar::ONE;
        for _ in 0..37 {
            acc = acc * z;
        }
        assert!(z.powi(37).rel_diff(&acc) < 1e-12);
        assert!((z.powi(-3) * z.powi(3)).rel_diff(&ScaledScalar::ONE) < 1e-14);
    }

    #[test]
    fn rational_embedding_is_exact() {
        let q = <BigRational as Ring>::from_real(0.1);
        assert_eq!(q.to_f64().unwrap(), 0.1);
        let three = <BigRational as Ring>::from_real(3.0);
        assert_eq!(three, BigRational::from_integer(3.into()));
    }
}
