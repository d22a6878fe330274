//! Numeric traits shared by the exact and floating code paths.
//!
//! Two layers are used throughout the crate:
//!
//! * [`Real`] is the field that q, squared weights, moments and q-numbers live
//!   in. It is implemented by [`BigRational`] (exact) and `f64` (floating).
//! * [`Scalar`] is the entry type of operator matrices. Exact matrices use
//!   [`Surd`](crate::surd::Surd) so that square roots of squared weights stay
//!   exact; floating matrices use [`Complex64`].

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered field used for q, weights and moments.
pub trait Real:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic in this type is exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_value(v: &Value) -> Result<Self>;
    fn to_value(&self) -> Value;
    fn to_f64(&self) -> f64;

    /// Integer power. Negative exponents require a nonzero base.
    fn powi(&self, e: i64) -> Self;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Real for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_value(v: &Value) -> Result<Self> {
        match v {
            Value::Rational(r) => Ok(r.clone()),
            Value::Float(x) => Err(Error::ModeMismatch(format!(
                "floating value {x} cannot enter exact arithmetic"
            ))),
        }
    }
    fn to_value(&self) -> Value {
        Value::Rational(self.clone())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn powi(&self, e: i64) -> Self {
        let e32 = i32::try_from(e).expect("exponent out of range");
        num_traits::Pow::pow(self, e32)
    }
}

impl Real for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_value(v: &Value) -> Result<Self> {
        Ok(v.to_f64())
    }
    fn to_value(&self) -> Value {
        Value::Float(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn powi(&self, e: i64) -> Self {
        match i32::try_from(e) {
            Ok(e) => f64::powi(*self, e),
            Err(_) => f64::powf(*self, e as f64),
        }
    }
}

/// A real scalar that is either an exact rational or a float.
#[derive(Clone, PartialEq)]
pub enum Value {
    Rational(BigRational),
    Float(f64),
}

impl Value {
    pub fn rational(num: i64, den: i64) -> Self {
        Value::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn integer(v: i64) -> Self {
        Value::Rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Rational(r) => Real::to_f64(r),
            Value::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Value::Rational(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Rational(_))
    }

    /// Sign as -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        match self {
            Value::Rational(r) => {
                if Zero::is_zero(r) {
                    0
                } else if r.is_negative() {
                    -1
                } else {
                    1
                }
            }
            Value::Float(x) => {
                if *x == 0.0 {
                    0
                } else if *x < 0.0 {
                    -1
                } else {
                    1
                }
            }
        }
    }
}

impl Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(self, f)
    }
}

impl Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Rational(r) => f.write_str(&format_rational(r)),
            Value::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for Value {
    type Err = Error;

    /// Accepts `p/q`, integers and decimal literals. Decimal literals are
    /// converted to the exact rational they denote.
    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s).map(Value::Rational)
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, an integer, or a decimal literal (with optional exponent)
/// into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("no digits in {s:?}")));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a number: {s:?}")));
    }
    let all: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut r = BigRational::from_integer(all) * num_traits::Pow::pow(&ten, scale);
    if negative {
        r = -r;
    }
    Ok(r)
}

/// Entry type of operator matrices.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// The real field the entries are built from.
    type Real: Real;

    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn conj(&self) -> Self;
    fn from_real(r: &Self::Real) -> Self;

    /// Square root of a nonnegative real.
    fn sqrt_of(r: &Self::Real) -> Result<Self>;

    /// `|x|^2` when it is representable in [`Self::Real`].
    fn norm_sqr_real(&self) -> Option<Self::Real>;

    fn to_c64(&self) -> Complex64;

    /// Lossy import from a complex float; `None` where the scalar type is exact.
    fn from_c64(z: Complex64) -> Option<Self>;

    fn scale(&self, r: &Self::Real) -> Self {
        self.clone() * Self::from_real(r)
    }
}

impl Scalar for Complex64 {
    type Real = f64;
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn from_real(r: &f64) -> Self {
        Complex64::new(*r, 0.0)
    }
    fn sqrt_of(r: &f64) -> Result<Self> {
        if *r < 0.0 {
            return Err(Error::InvalidParameter(format!("sqrt of negative {r}")));
        }
        Ok(Complex64::new(r.sqrt(), 0.0))
    }
    fn norm_sqr_real(&self) -> Option<f64> {
        Some(Complex64::norm_sqr(self))
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        Some(z)
    }
}
