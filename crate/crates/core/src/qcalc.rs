//! q-numbers, q-factorials, q-binomials, q-Pochhammer symbols and the two
//! q-exponential series.
//!
//! The generic functions ([`basic`], [`factorial`], [`binomial`],
//! [`pochhammer`]) work in any [`Real`] field and are what the operator code
//! calls. The `q_*` functions take a [`QParam`] and pick exact or floating
//! arithmetic from its mode.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, Value};

/// Below this distance from 1, floating `[x]_q` uses the geometric sum.
pub const NEAR_ONE: f64 = 1e-8;

/// Default relative tolerance for floating mode.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Hard cap on q-exponential series length.
pub const MAX_SERIES_TERMS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowMinusOne,
    MinusOne,
    MinusOneToZero,
    Zero,
    ZeroToOne,
    One,
    AboveOne,
}

impl Regime {
    pub fn of(value: &Value) -> Regime {
        match value {
            Value::Rational(r) => {
                let one = <BigRational as Real>::one();
                let zero = <BigRational as Real>::zero();
                classify(r, &zero, &one)
            }
            Value::Float(x) => classify(x, &0.0, &1.0),
        }
    }
}

fn classify<R: PartialOrd + std::ops::Neg<Output = R> + Clone>(x: &R, zero: &R, one: &R) -> Regime {
    let minus_one = -one.clone();
    if *x < minus_one {
        Regime::BelowMinusOne
    } else if *x == minus_one {
        Regime::MinusOne
    } else if x < zero {
        Regime::MinusOneToZero
    } else if x == zero {
        Regime::Zero
    } else if x < one {
        Regime::ZeroToOne
    } else if x == one {
        Regime::One
    } else {
        Regime::AboveOne
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mode {
    Exact,
    Float { tolerance: f64 },
}

impl Mode {
    pub fn float() -> Mode {
        Mode::Float { tolerance: DEFAULT_TOLERANCE }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            Mode::Exact => 0.0,
            Mode::Float { tolerance } => *tolerance,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float { .. } => f.write_str("float"),
        }
    }
}

/// The deformation parameter together with its arithmetic mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QParam {
    value: Value,
    mode: Mode,
    regime: Regime,
}

impl QParam {
    pub fn new(value: Value, mode: Mode) -> Result<Self> {
        if mode.is_exact() && !value.is_exact() {
            return Err(Error::ModeMismatch(format!(
                "exact mode needs a rational q, got {value}"
            )));
        }
        if let (Mode::Float { tolerance }, _) = (mode, &value) {
            if !(tolerance > 0.0) {
                return Err(Error::InvalidParameter(format!("tolerance {tolerance} must be positive")));
            }
        }
        if let Value::Float(x) = value {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!("q = {x} is not finite")));
            }
        }
        let regime = Regime::of(&value);
        Ok(QParam { value, mode, regime })
    }

    /// Exact q = num/den.
    pub fn exact(num: i64, den: i64) -> Self {
        QParam::new(Value::rational(num, den), Mode::Exact).expect("rational q")
    }

    /// Floating q with the default tolerance.
    pub fn float(q: f64) -> Self {
        QParam::new(Value::Float(q), Mode::float()).expect("finite q")
    }

    /// Parses `p/q` or a decimal. Decimal input is kept as the exact rational
    /// it denotes, so it may be used in either mode.
    pub fn parse(s: &str, mode: Mode) -> Result<Self> {
        QParam::new(Value::from_str(s)?, mode)
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// q in the requested field.
    pub fn real<R: Real>(&self) -> Result<R> {
        R::from_value(&self.value)
    }

    /// The same q in floating mode.
    pub fn to_float(&self) -> QParam {
        let tolerance = match self.mode {
            Mode::Float { tolerance } => tolerance,
            Mode::Exact => DEFAULT_TOLERANCE,
        };
        QParam { value: self.value.clone(), mode: Mode::Float { tolerance }, regime: self.regime }
    }

    pub fn is_one(&self) -> bool {
        self.regime == Regime::One
    }
}

impl fmt::Display for QParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Result of a q-combinatorial evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum QNumber {
    Exact { exact: Value },
    Approx { value: f64, error_bound: f64 },
}

impl QNumber {
    fn from_parts(exact: Option<BigRational>, float: f64, tol: f64) -> QNumber {
        match exact {
            Some(r) => QNumber::Exact { exact: Value::Rational(r) },
            None => QNumber::Approx { value: float, error_bound: tol * float.abs().max(1.0) },
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            QNumber::Exact { exact } => exact.to_f64(),
            QNumber::Approx { value, .. } => *value,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            QNumber::Exact { exact } => exact.as_rational(),
            QNumber::Approx { .. } => None,
        }
    }

    pub fn error_bound(&self) -> f64 {
        match self {
            QNumber::Exact { .. } => 0.0,
            QNumber::Approx { error_bound, .. } => *error_bound,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, QNumber::Exact { .. })
    }
}

fn geometric_sum<R: Real>(n: u64, q: &R) -> R {
    // Horner form of 1 + q + ... + q^(n-1)
    let mut acc = R::zero();
    for _ in 0..n {
        acc = acc * q.clone() + R::one();
    }
    acc
}

/// `[n]_q` for a nonnegative integer n.
pub fn basic<R: Real>(n: u64, q: &R) -> R {
    if *q == R::one() {
        return R::from_i64(n as i64);
    }
    if !R::EXACT && (R::one() - q.clone()).abs().to_f64() < NEAR_ONE {
        return geometric_sum(n, q);
    }
    (R::one() - q.powi(n as i64)) / (R::one() - q.clone())
}

/// `[x]_q` for any integer x. Negative x needs q != 0.
pub fn basic_signed<R: Real>(x: i64, q: &R) -> Result<R> {
    if x >= 0 {
        return Ok(basic(x as u64, q));
    }
    if q.is_zero() {
        return Err(Error::InvalidParameter(format!("[{x}]_q is undefined at q = 0")));
    }
    if *q == R::one() {
        return Ok(R::from_i64(x));
    }
    if !R::EXACT && (R::one() - q.clone()).abs().to_f64() < NEAR_ONE {
        // [-m]_q = -q^(-m) [m]_q
        let m = x.unsigned_abs();
        return Ok(-(q.powi(x) * geometric_sum(m, q)));
    }
    Ok((R::one() - q.powi(x)) / (R::one() - q.clone()))
}

/// `[n]_q!`.
pub fn factorial<R: Real>(n: u64, q: &R) -> R {
    (1..=n).fold(R::one(), |acc, k| acc * basic(k, q))
}

/// Gaussian binomial; zero outside `0 <= n <= m`.
pub fn binomial<R: Real>(m: u64, n: i64, q: &R) -> R {
    if n < 0 || n as u64 > m {
        return R::zero();
    }
    let n = n as u64;
    // product form avoids dividing by zero q-numbers when [k]_q vanishes
    // (q a root of unity, e.g. q = -1)
    let mut num = R::one();
    let mut den = R::one();
    for i in 1..=n {
        num = num * basic(m - n + i, q);
        den = den * basic(i, q);
    }
    if den.is_zero() {
        return binomial_by_pascal(m, n, q);
    }
    num / den
}

fn binomial_by_pascal<R: Real>(m: u64, n: u64, q: &R) -> R {
    let mut row = vec![R::one()];
    for i in 1..=m {
        let mut next = vec![R::one(); (i + 1) as usize];
        for j in 1..i as usize {
            next[j] = row[j - 1].clone() + q.powi(j as i64) * row[j].clone();
        }
        row = next;
    }
    row[n as usize].clone()
}

/// `(a;q)_k = (1-a)(1-aq)...(1-aq^(k-1))`.
pub fn pochhammer<R: Real>(a: &R, q: &R, k: u64) -> R {
    let mut acc = R::one();
    let mut aq = a.clone();
    for _ in 0..k {
        acc = acc * (R::one() - aq.clone());
        aq = aq * q.clone();
    }
    acc
}

fn eval<F, G>(q: &QParam, exact: F, float: G) -> Result<QNumber>
where
    F: FnOnce(&BigRational) -> Result<BigRational>,
    G: FnOnce(f64) -> Result<f64>,
{
    match q.mode() {
        Mode::Exact => {
            let qr: BigRational = q.real()?;
            Ok(QNumber::from_parts(Some(exact(&qr)?), 0.0, 0.0))
        }
        Mode::Float { tolerance } => {
            let v = float(q.to_f64())?;
            Ok(QNumber::from_parts(None, v, tolerance))
        }
    }
}

/// `[x]_q = (1 - q^x)/(1 - q)`, with `[x]_1 = x`.
pub fn basic_number(x: i64, q: &QParam) -> Result<QNumber> {
    eval(q, |r| basic_signed(x, r), |f| basic_signed(x, &f))
}

pub fn q_factorial(n: u64, q: &QParam) -> QNumber {
    eval(q, |r| Ok(factorial(n, r)), |f| Ok(factorial(n, &f))).expect("infallible")
}

pub fn q_binomial(m: u64, n: i64, q: &QParam) -> QNumber {
    eval(q, |r| Ok(binomial(m, n, r)), |f| Ok(binomial(m, n, &f))).expect("infallible")
}

/// `(a;q)_k`. Exact only when both `a` and q are exact.
pub fn q_pochhammer(a: &Value, q: &QParam, k: u64) -> Result<QNumber> {
    match (q.mode(), a) {
        (Mode::Exact, Value::Rational(ar)) => {
            let qr: BigRational = q.real()?;
            Ok(QNumber::Exact { exact: Value::Rational(pochhammer(ar, &qr, k)) })
        }
        (mode, _) => {
            let tol = match mode {
                Mode::Exact => DEFAULT_TOLERANCE,
                Mode::Float { tolerance } => tolerance,
            };
            let v = pochhammer(&a.to_f64(), &q.to_f64(), k);
            Ok(QNumber::from_parts(None, v, tol))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpKind {
    /// `e_q(z) = sum z^k / (q;q)_k`
    #[serde(rename = "e")]
    Small,
    /// `E_q(z) = sum q^(k choose 2) z^k / (q;q)_k`
    #[serde(rename = "E")]
    Large,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub terms: usize,
}

/// Whether `z` lies in the disc-or-plane domain attached to `base`: the open
/// unit disc when `|base| < 1`, all of C otherwise.
fn in_omega(z: Complex64, base: f64) -> bool {
    base.abs() >= 1.0 || z.norm() < 1.0
}

/// Partial sum of `e_q` or `E_q`, stopping once the next term falls below
/// `tol * max(1, |partial sum|)`.
pub fn q_exponential(kind: ExpKind, z: Complex64, q: &QParam, tol: f64) -> Result<SeriesValue> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let qf = q.to_f64();
    match q.regime() {
        Regime::One => {
            return Err(Error::Unsupported(
                "q = 1 is a pole of (q;q)_k; use classical_exp".into(),
            ))
        }
        Regime::MinusOne => {
            return Err(Error::Unsupported("q = -1 makes (q;q)_k vanish for k >= 2".into()))
        }
        Regime::Zero if kind == ExpKind::Large => {
            return Err(Error::Unsupported("E_q is defined for q != 0".into()))
        }
        _ => {}
    }
    let (base, domain) = match kind {
        ExpKind::Small => (qf, "omega_q"),
        ExpKind::Large => (1.0 / qf, "omega_{1/q}"),
    };
    if !in_omega(z, base) {
        return Err(Error::DomainViolation { z: z.to_string(), domain: domain.into() });
    }

    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut q_pow = 1.0; // q^(k-1) for the E recurrence
    for k in 1..=MAX_SERIES_TERMS {
        let qk = q_pow * qf; // q^k
        let mut next = term * z / (1.0 - qk);
        if kind == ExpKind::Large {
            next *= q_pow;
        }
        if next.norm() < tol * sum.norm().max(1.0) {
            return Ok(SeriesValue { value: sum, terms: k });
        }
        if !next.norm().is_finite() {
            break;
        }
        sum += next;
        term = next;
        q_pow = qk;
    }
    Err(Error::NonConvergence { terms: MAX_SERIES_TERMS })
}

/// `|e_q(qz) - E_{1/q}(-z)|`, the duality between the two series.
pub fn duality_residual(z: Complex64, q: &QParam, tol: f64) -> Result<f64> {
    let qf = q.to_f64();
    if qf == 0.0 {
        return Err(Error::Unsupported("duality needs q != 0".into()));
    }
    let inverse = QParam::new(Value::Float(1.0 / qf), q.to_float().mode())?;
    let small = q_exponential(ExpKind::Small, z * qf, q, tol)?;
    let large = q_exponential(ExpKind::Large, -z, &inverse, tol)?;
    Ok((small.value - large.value).norm())
}

/// The q = 1 branch: the ordinary exponential.
pub fn classical_exp(z: Complex64) -> Complex64 {
    z.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn exact_value(n: &QNumber) -> BigRational {
        n.as_rational().cloned().expect("exact")
    }

    #[test]
    fn basic_number_examples() {
        assert_eq!(exact_value(&basic_number(5, &QParam::exact(1, 1)).unwrap()), rat(5, 1));
        assert_eq!(exact_value(&basic_number(3, &QParam::exact(0, 1)).unwrap()), rat(1, 1));
        assert_eq!(exact_value(&basic_number(3, &QParam::exact(2, 1)).unwrap()), rat(7, 1));
    }

    #[test]
    fn basic_number_negative_argument() {
        // [-2]_2 = (1 - 1/4)/(1 - 2) = -3/4
        assert_eq!(exact_value(&basic_number(-2, &QParam::exact(2, 1)).unwrap()), rat(-3, 4));
        assert!(basic_number(-1, &QParam::exact(0, 1)).is_err());
    }

    #[test]
    fn factorial_examples() {
        for q in [QParam::exact(-1, 2), QParam::exact(3, 1), QParam::exact(0, 1)] {
            assert_eq!(exact_value(&q_factorial(0, &q)), rat(1, 1));
        }
        assert_eq!(exact_value(&q_factorial(4, &QParam::exact(1, 1))), rat(24, 1));
        assert_eq!(exact_value(&q_factorial(4, &QParam::exact(2, 1))), rat(315, 1));
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(exact_value(&q_binomial(4, 2, &QParam::exact(1, 1))), rat(6, 1));
        assert_eq!(exact_value(&q_binomial(2, 3, &QParam::exact(1, 3))), rat(0, 1));
        assert_eq!(exact_value(&q_binomial(2, -1, &QParam::exact(1, 3))), rat(0, 1));
        assert_eq!(exact_value(&q_binomial(4, 2, &QParam::exact(2, 1))), rat(35, 1));
    }

    #[test]
    fn binomial_at_minus_one_uses_recurrence() {
        // [2]_{-1} = 0, but binom(3,2)_{-1} = 1 + q + q^2 = 1
        assert_eq!(exact_value(&q_binomial(3, 2, &QParam::exact(-1, 1))), rat(1, 1));
        assert_eq!(exact_value(&q_binomial(4, 2, &QParam::exact(-1, 1))), rat(2, 1));
    }

    #[test]
    fn pochhammer_examples() {
        let half = QParam::exact(1, 2);
        assert_eq!(exact_value(&q_pochhammer(&Value::integer(1), &half, 3).unwrap()), rat(0, 1));
        assert_eq!(
            exact_value(&q_pochhammer(&Value::integer(0), &QParam::exact(7, 3), 5).unwrap()),
            rat(1, 1)
        );
        assert_eq!(exact_value(&q_pochhammer(&Value::rational(1, 2), &half, 2).unwrap()), rat(3, 8));
    }

    #[test]
    fn float_mode_tracks_exact_mode() {
        let f = basic_number(7, &QParam::float(0.5)).unwrap();
        assert!(!f.is_exact());
        assert!((f.to_f64() - 127.0 / 64.0).abs() <= f.error_bound());
    }

    #[test]
    fn near_one_uses_summation() {
        let q = 1.0 + 1e-12;
        let v = basic(5, &q);
        assert!((v - 5.0).abs() < 1e-10, "{v}");
        let neg = basic_signed(-3, &q).unwrap();
        assert!((neg + 3.0).abs() < 1e-10, "{neg}");
    }

    #[test]
    fn exponential_at_zero_is_one() {
        let r = q_exponential(ExpKind::Small, Complex64::new(0.0, 0.0), &QParam::float(0.5), 1e-14).unwrap();
        assert_eq!(r.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn exponential_duality() {
        let tol = 1e-13;
        let q = QParam::float(0.5);
        let r = duality_residual(Complex64::new(0.3, 0.0), &q, tol).unwrap();
        assert!(r <= 2.0 * tol, "{r}");
        let r = duality_residual(Complex64::new(-0.4, 0.2), &QParam::float(-0.6), tol).unwrap();
        assert!(r <= 2.0 * tol, "{r}");
    }

    #[test]
    fn duality_needs_the_rescaled_argument() {
        // e_q(z) and E_{1/q}(-z) differ; the dual of E_{1/q}(-z) is e_q(qz)
        let tol = 1e-13;
        let e = q_exponential(ExpKind::Small, Complex64::new(0.3, 0.0), &QParam::float(0.5), tol).unwrap();
        let big = q_exponential(ExpKind::Large, Complex64::new(-0.3, 0.0), &QParam::float(2.0), tol).unwrap();
        assert!((e.value - big.value).norm() > 0.5);
        let scaled = q_exponential(ExpKind::Small, Complex64::new(0.15, 0.0), &QParam::float(0.5), tol).unwrap();
        assert!((scaled.value - big.value).norm() <= 2.0 * tol);
    }

    #[test]
    fn exponential_matches_direct_summation() {
        // 60-term direct summation oracle with independently computed (q;q)_k
        let z = 0.5f64;
        let q = 0.5f64;
        let mut oracle = 0.0;
        for k in 0..60 {
            let mut poch = 1.0;
            for j in 1..=k {
                poch *= 1.0 - q.powi(j);
            }
            oracle += z.powi(k) / poch;
        }
        let tol = 1e-14;
        let r = q_exponential(ExpKind::Small, Complex64::new(z, 0.0), &QParam::float(q), tol).unwrap();
        assert!((r.value.re - oracle).abs() < 2.0 * tol * oracle, "{} vs {oracle}", r.value.re);
        assert!(r.terms < 60);
    }

    #[test]
    fn exponential_rejects_bad_parameters() {
        let z = Complex64::new(0.1, 0.0);
        assert!(matches!(
            q_exponential(ExpKind::Small, z, &QParam::exact(1, 1), 1e-12),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            q_exponential(ExpKind::Large, z, &QParam::exact(0, 1), 1e-12),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            q_exponential(ExpKind::Small, Complex64::new(1.5, 0.0), &QParam::float(0.5), 1e-12),
            Err(Error::DomainViolation { .. })
        ));
        // E_2 lives on the unit disc since 1/2 < 1
        assert!(matches!(
            q_exponential(ExpKind::Large, Complex64::new(2.0, 0.0), &QParam::float(2.0), 1e-12),
            Err(Error::DomainViolation { .. })
        ));
        // e_2 is entire
        assert!(q_exponential(ExpKind::Small, Complex64::new(5.0, 0.0), &QParam::float(2.0), 1e-12).is_ok());
    }

    #[test]
    fn regimes() {
        let cases = [
            (QParam::exact(-2, 1), Regime::BelowMinusOne),
            (QParam::exact(-1, 1), Regime::MinusOne),
            (QParam::exact(-1, 2), Regime::MinusOneToZero),
            (QParam::exact(0, 1), Regime::Zero),
            (QParam::float(0.25), Regime::ZeroToOne),
            (QParam::exact(1, 1), Regime::One),
            (QParam::float(3.0), Regime::AboveOne),
        ];
        for (q, r) in cases {
            assert_eq!(q.regime(), r);
            assert_eq!(Regime::of(q.value()), q.regime());
        }
    }

    #[test]
    fn exact_mode_requires_rational() {
        assert!(QParam::new(Value::Float(0.5), Mode::Exact).is_err());
        assert!(QParam::parse("0.5", Mode::Exact).is_ok());
    }
}
