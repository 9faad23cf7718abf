//! Arithmetic backends: 64-bit floats for bounds and Monte Carlo, exact
//! big rationals for identity verification.
//!
//! Every tensor operation in this crate is generic over [`Scalar`], so the
//! same code path is exercised in both modes. Exact mode exists because the
//! diagram identities are telescoping sums in which floating-point noise can
//! mask genuine sign errors.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Field operations shared by the float and exact-rational backends.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sum<Self>
{
    /// True when arithmetic is exact (no rounding), i.e. the rational backend.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(v: i64) -> Self;
    /// Exact ratio `num/den`. Panics if `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Embeds a finite float exactly (every finite f64 is rational).
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;

    /// Realizes an exact big-rational (e.g. parsed from a "p/q" string).
    fn from_big_ratio(r: &BigRational) -> Self;

    /// Exact "p/q" text when the backend is exact; `None` for floats.
    fn exact_string(&self) -> Option<String>;

    fn powi(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * self.clone();
        }
        acc
    }

    /// Greater element of two, by `PartialOrd` (non-NaN inputs assumed).
    fn max_of(a: Self, b: Self) -> Self {
        if a < b {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_big_ratio(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn exact_string(&self) -> Option<String> {
        None
    }
}

/// Exact rational scalar backing the `rational` arithmetic mode.
pub type Rational = BigRational;

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as num::traits::One>::one()
    }
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v)
            .expect("non-finite float cannot be embedded as a rational")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // Out-of-range ratios saturate; sign is preserved.
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_big_ratio(r: &BigRational) -> Self {
        r.clone()
    }
    fn exact_string(&self) -> Option<String> {
        Some(self.to_string())
    }
}
