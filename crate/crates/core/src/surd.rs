//! Exact real numbers of the form `c_1*sqrt(r_1) + ... + c_k*sqrt(r_k)`.
//!
//! Coefficients are rationals and radicands are positive integers. Terms are
//! kept in distinct square classes (no ratio `r_i / r_j` is a rational square),
//! so by linear independence of square roots of square-free integers a value is
//! zero exactly when it has no terms.
//!
//! Operator matrices built from squared weights have entries that are square
//! roots of rationals; products of such entries stay in this set, which keeps
//! every matrix identity in the crate checkable without rounding.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SMALL_PRIMES_LIMIT: u32 = 1000;

#[derive(Clone, Debug)]
struct Term {
    coeff: BigRational,
    radicand: BigInt,
}

#[derive(Clone, Default)]
pub struct Surd {
    terms: Vec<Term>,
}

fn small_primes() -> &'static [u32] {
    use std::sync::OnceLock;
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut sieve = vec![true; SMALL_PRIMES_LIMIT as usize];
        let mut out = Vec::new();
        for i in 2..SMALL_PRIMES_LIMIT as usize {
            if sieve[i] {
                out.push(i as u32);
                let mut j = i * i;
                while j < sieve.len() {
                    sieve[j] = false;
                    j += i;
                }
            }
        }
        out
    })
}

fn perfect_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

/// Splits a positive integer as `f^2 * rest`, stripping squares of small
/// primes and recognising a perfect-square remainder.
fn split_square(mut n: BigInt) -> (BigInt, BigInt) {
    let mut f = BigInt::one();
    for &p in small_primes() {
        let p = BigInt::from(p);
        let p2 = &p * &p;
        if p2 > n {
            break;
        }
        while (&n % &p2).is_zero() {
            n /= &p2;
            f *= &p;
        }
    }
    if let Some(r) = perfect_sqrt(&n) {
        return (f * r, BigInt::one());
    }
    (f, n)
}

impl Surd {
    pub fn zero() -> Self {
        Surd { terms: Vec::new() }
    }

    pub fn from_rational(r: BigRational) -> Self {
        let mut s = Surd::zero();
        s.push(r, BigInt::one());
        s
    }

    pub fn from_integer(v: i64) -> Self {
        Surd::from_rational(BigRational::from_integer(BigInt::from(v)))
    }

    /// `sqrt(r)` for a nonnegative rational.
    pub fn sqrt(r: &BigRational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::InvalidParameter(format!(
                "square root of negative rational {r}"
            )));
        }
        if r.is_zero() {
            return Ok(Surd::zero());
        }
        // sqrt(a/b) = sqrt(a*b)/b
        let (f, rest) = split_square(r.numer() * r.denom());
        let coeff = BigRational::new(f, r.denom().clone());
        let mut s = Surd::zero();
        s.push(coeff, rest);
        Ok(s)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value as a rational, when it has no irrational part.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [t] if t.radicand.is_one() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let c = t.coeff.to_f64().unwrap_or(f64::NAN);
                let r = t.radicand.to_f64().unwrap_or(f64::INFINITY);
                c * r.sqrt()
            })
            .sum()
    }

    /// Number of distinct square classes in the value.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    fn push(&mut self, coeff: BigRational, radicand: BigInt) {
        if coeff.is_zero() {
            return;
        }
        for i in 0..self.terms.len() {
            let existing = &self.terms[i].radicand;
            let delta = if *existing == radicand {
                Some(coeff.clone())
            } else {
                // sqrt(r/e) = sqrt(r*e)/e is rational iff r*e is a square
                perfect_sqrt(&(&radicand * existing))
                    .map(|s| &coeff * BigRational::new(s, existing.clone()))
            };
            if let Some(delta) = delta {
                let c = &self.terms[i].coeff + delta;
                if c.is_zero() {
                    self.terms.swap_remove(i);
                } else {
                    self.terms[i].coeff = c;
                }
                return;
            }
        }
        self.terms.push(Term { coeff, radicand });
    }
}

impl PartialEq for Surd {
    fn eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_zero()
    }
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| a.radicand.cmp(&b.radicand));
        for (i, t) in terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let c = crate::scalar::format_rational(&t.coeff);
            if t.radicand.is_one() {
                f.write_str(&c)?;
            } else {
                write!(f, "{c}*sqrt({})", t.radicand)?;
            }
        }
        Ok(())
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(mut self, rhs: Surd) -> Surd {
        if self.terms.is_empty() {
            return rhs;
        }
        for t in rhs.terms {
            self.push(t.coeff, t.radicand);
        }
        self
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(mut self) -> Surd {
        for t in &mut self.terms {
            t.coeff = -t.coeff.clone();
        }
        self
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, rhs: Surd) -> Surd {
        self + (-rhs)
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        let mut out = Surd::zero();
        if self.is_zero() || rhs.is_zero() {
            return out;
        }
        for a in &self.terms {
            for b in &rhs.terms {
                let coeff = &a.coeff * &b.coeff;
                if a.radicand.is_one() || b.radicand.is_one() {
                    out.push(coeff, &a.radicand * &b.radicand);
                    continue;
                }
                let g = a.radicand.gcd(&b.radicand);
                let (f, rest) = split_square((&a.radicand / &g) * (&b.radicand / &g));
                out.push(coeff * BigRational::from_integer(g * f), rest);
            }
        }
        out
    }
}

impl Scalar for Surd {
    type Real = BigRational;
    const EXACT: bool = true;

    fn zero() -> Self {
        Surd::zero()
    }
    fn one() -> Self {
        Surd::from_integer(1)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn from_real(r: &BigRational) -> Self {
        Surd::from_rational(r.clone())
    }
    fn sqrt_of(r: &BigRational) -> Result<Self> {
        Surd::sqrt(r)
    }
    fn norm_sqr_real(&self) -> Option<BigRational> {
        (self.clone() * self.clone()).as_rational()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64(), 0.0)
    }
    fn from_c64(_: Complex64) -> Option<Self> {
        None
    }
    fn scale(&self, r: &BigRational) -> Self {
        let mut out = self.clone();
        if r.is_zero() {
            return Surd::zero();
        }
        for t in &mut out.terms {
            t.coeff = &t.coeff * r;
        }
        out
    }
}

impl From<BigRational> for Surd {
    fn from(r: BigRational) -> Self {
        Surd::from_rational(r)
    }
}
