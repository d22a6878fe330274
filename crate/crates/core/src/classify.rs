//! The four solution types of `T*T - p^2 TT* = eps (1-p^2) I`, the change of
//! variables that turns a solution of the q-relation into one of them, and a
//! classifier for weight sequences.
//!
//! `p` enters every formula only through `p^2`, so it is stored that way;
//! `p = sqrt(q)` stays exact for rational `q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::qcalc::{QParam, Regime};
use crate::scalar::{Real, Scalar, Value};
use crate::shiftops::{
    build_shift, unitary, Direction, IndexWindow, Provenance, Residual, ShiftKind, TruncatedOperator, UnitarySpec,
    WeightSequence,
};

pub const DEFAULT_CLASSIFY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchmudgenType {
    I,
    II,
    III,
    IV,
}

impl SchmudgenType {
    pub fn epsilon(self) -> i8 {
        if self == SchmudgenType::IV {
            -1
        } else {
            1
        }
    }
}

impl std::fmt::Display for SchmudgenType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchmudgenType::I => "I",
            SchmudgenType::II => "II",
            SchmudgenType::III => "III",
            SchmudgenType::IV => "IV",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchmudgenSpec {
    pub kind: SchmudgenType,
    pub p_squared: Value,
    pub epsilon: i8,
    /// Scalar sample of `A`, type II only.
    pub a: Option<Value>,
    /// Type III only.
    pub unitary: Option<UnitarySpec>,
}

impl SchmudgenSpec {
    pub fn new(kind: SchmudgenType, p_squared: Value) -> Result<Self> {
        let spec = SchmudgenSpec {
            kind,
            p_squared,
            epsilon: kind.epsilon(),
            a: None,
            unitary: (kind == SchmudgenType::III).then_some(UnitarySpec::CyclicShift),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// From `p` itself (rather than `p^2`).
    pub fn with_p(kind: SchmudgenType, p: &Value) -> Result<Self> {
        let p_squared = match p {
            Value::Rational(r) => Value::Rational(r * r),
            Value::Float(x) => Value::Float(x * x),
        };
        if p.signum() <= 0 {
            return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
        }
        Self::new(kind, p_squared)
    }

    pub fn type_ii(p_squared: Value, a: Value) -> Result<Self> {
        let spec = SchmudgenSpec { kind: SchmudgenType::II, p_squared, epsilon: 1, a: Some(a), unitary: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let p2 = self.p_squared.to_f64();
        let in_range = match &self.p_squared {
            Value::Rational(r) => {
                let zero = <num_rational::BigRational as Real>::zero();
                let one = <num_rational::BigRational as Real>::one();
                *r > zero && *r < one
            }
            Value::Float(_) => p2 > 0.0 && p2 < 1.0,
        };
        if !in_range {
            return Err(Error::InvalidParameter(format!("need 0 < p < 1, got p^2 = {}", self.p_squared)));
        }
        if self.epsilon != self.kind.epsilon() {
            return Err(Error::InvalidParameter(format!(
                "type {} needs eps = {}, got {}",
                self.kind,
                self.kind.epsilon(),
                self.epsilon
            )));
        }
        match (self.kind, &self.a) {
            (SchmudgenType::II, None) => Err(Error::InvalidParameter("type II needs a".into())),
            (SchmudgenType::II, Some(a)) => {
                if a.signum() < 0 {
                    return Err(Error::InvalidParameter(format!("a must satisfy p <= a <= 1, got {a}")));
                }
                let ok = match (a, &self.p_squared) {
                    (Value::Rational(a), Value::Rational(p2)) => {
                        let a2 = a * a;
                        a2 >= *p2 && a2 <= <num_rational::BigRational as Real>::one()
                    }
                    _ => {
                        let a2 = a.to_f64().powi(2);
                        a2 >= p2 && a2 <= 1.0
                    }
                };
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("a must satisfy p <= a <= 1, got a = {a}, p^2 = {p2}")))
                }
            }
            (_, Some(_)) => Err(Error::InvalidParameter(format!("a only applies to type II, not {}", self.kind))),
            _ => Ok(()),
        }
    }

    fn description(&self) -> String {
        match &self.a {
            Some(a) => format!("schmudgen {}(p^2={}, a={a})", self.kind, self.p_squared),
            None => format!("schmudgen {}(p^2={})", self.kind, self.p_squared),
        }
    }
}

/// Squared weights of the given type over `window`.
///
/// I: forward, `1 - p^(2(n+1))`. II: forward bilateral, `1 + p^(2(n+1)) a^2`.
/// III: unit weights. IV: backward, from `w_(n+1) = (w_n + 1 - p^2) / p^2`,
/// `w_0 = 0` (closed form `p^(-2n) - 1`).
pub fn schmudgen_weights<R: Real>(spec: &SchmudgenSpec, window: IndexWindow) -> Result<WeightSequence<R>> {
    spec.validate()?;
    if window.is_empty() {
        return Err(Error::InvalidParameter("empty window".into()));
    }
    let p2 = R::from_value(&spec.p_squared)?;
    let one = R::one();
    let unilateral = |w: &IndexWindow| -> Result<()> {
        if w.lo != 0 {
            return Err(Error::InvalidParameter(format!("type {} lives on windows [0, n_max]", spec.kind)));
        }
        Ok(())
    };
    let (kind, direction, weights) = match spec.kind {
        SchmudgenType::I => {
            unilateral(&window)?;
            let w = window.iter().map(|n| one.clone() - p2.powi(n + 1)).collect();
            (ShiftKind::Unilateral, Direction::Forward, w)
        }
        SchmudgenType::II => {
            let a = R::from_value(spec.a.as_ref().expect("validated"))?;
            let a2 = a.clone() * a;
            let w = window.iter().map(|n| one.clone() + p2.powi(n + 1) * a2.clone()).collect();
            (ShiftKind::Bilateral, Direction::Forward, w)
        }
        SchmudgenType::III => (ShiftKind::Bilateral, Direction::Forward, vec![one.clone(); window.len()]),
        SchmudgenType::IV => {
            unilateral(&window)?;
            let mut w = Vec::with_capacity(window.len());
            let mut cur = R::zero();
            for _ in window.iter() {
                w.push(cur.clone());
                cur = (cur + one.clone() - p2.clone()) / p2.clone();
            }
            (ShiftKind::Unilateral, Direction::Backward, w)
        }
    };
    Ok(WeightSequence::new(kind, direction, window.lo, weights, Provenance::Custom)?
        .with_provenance(Provenance::Schmudgen { description: spec.description() }))
}

/// Matrix realisation of size `d`; type III uses `spec.unitary`.
pub fn schmudgen_operator<T: Scalar>(spec: &SchmudgenSpec, d: usize, index_low: i64) -> Result<TruncatedOperator<T>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if spec.kind == SchmudgenType::III {
        spec.validate()?;
        let u = unitary::<T>(d, spec.unitary.unwrap_or(UnitarySpec::CyclicShift))?;
        let full = IndexWindow::new(index_low, index_low + d as i64 - 1);
        return Ok(TruncatedOperator::new(u, index_low, full, "T_III")?.with_provenance(spec.description()));
    }
    let window = IndexWindow::new(index_low, index_low + d as i64 - 1);
    let w = schmudgen_weights::<T::Real>(spec, window)?;
    Ok(build_shift(&w, d)?.with_label(format!("T_{}", spec.kind)))
}

/// Column-norm maximum of `T*T - p^2 TT* - eps (1-p^2) I` over the interior.
pub fn schi_residual<T: Scalar>(t: &TruncatedOperator<T>, p_squared: &T::Real, epsilon: i8) -> Result<Residual> {
    if epsilon != 1 && epsilon != -1 {
        return Err(Error::InvalidParameter(format!("eps must be +1 or -1, got {epsilon}")));
    }
    let one = <T::Real as Real>::one();
    let tm = t.entries();
    let ta = tm.adjoint();
    let rhs = (one - p_squared.clone()) * <T::Real as Real>::from_i64(epsilon as i64);
    let defect = ta
        .matmul(tm)
        .sub(&tm.matmul(&ta).scale_real(p_squared))
        .sub(&Matrix::identity(t.dim()).scale_real(&rhs));
    Ok(Residual::of_columns(&defect, t.index_origin(), t.interior()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction<T: Scalar> {
    pub t: TruncatedOperator<T>,
    pub p_squared: T::Real,
    pub epsilon: i8,
}

/// `0 < q < 1`: `T = sqrt(1-q) S`, `p^2 = q`, `eps = 1`.
/// `q > 1`: `T = sqrt(q-1) S*`, `p^2 = 1/q`, `eps = -1`.
pub fn reduce_to_schmudgen<T: Scalar>(q: &QParam, s: &TruncatedOperator<T>) -> Result<Reduction<T>> {
    let qr: T::Real = q.real()?;
    let one = <T::Real as Real>::one();
    match q.regime() {
        Regime::ZeroToOne => {
            let c = T::sqrt_of(&(one - qr.clone()))?;
            let t = s.with_entries(s.entries().scale(&c), "T")?;
            Ok(Reduction { t, p_squared: qr, epsilon: 1 })
        }
        Regime::AboveOne => {
            let c = T::sqrt_of(&(qr.clone() - one.clone()))?;
            let t = s.with_entries(s.entries().adjoint().scale(&c), "T")?;
            Ok(Reduction { t, p_squared: one / qr, epsilon: -1 })
        }
        Regime::One => Err(Error::InvalidParameter("reduction undefined at q = 1".into())),
        _ => Err(Error::InvalidParameter(format!("reduction needs q > 0, got {q}"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Type(SchmudgenType),
    Ambiguous(Vec<SchmudgenType>),
    None,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Type(t) => write!(f, "{t}"),
            Verdict::None => f.write_str("none"),
            Verdict::Ambiguous(ts) => {
                let names: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "ambiguous({})", names.join(","))
            }
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// JSON record of a classification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    #[serde(rename = "type")]
    pub verdict: Verdict,
    pub p_squared: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_a: Option<f64>,
    /// Worst scaled deviation of the accepted family (or of the closest
    /// candidate when nothing fits).
    pub residual: f64,
    pub window: IndexWindow,
}

/// `|w - expected|` relative to `max(1, |expected|)`.
fn deviation<R: Real>(w: &R, expected: &R) -> f64 {
    (w.clone() - expected.clone()).abs().to_f64() / expected.abs().to_f64().max(1.0)
}

/// Matches squared weights against the four closed forms. Kind and direction
/// pick the candidates: unilateral forward is I, unilateral backward is IV,
/// bilateral is II or III.
pub fn classify_weights<R: Real>(w: &WeightSequence<R>, p_squared: &R, tol: f64) -> Result<Classification> {
    let one = R::one();
    if !(*p_squared > R::zero() && *p_squared < one) {
        return Err(Error::InvalidParameter(format!("need 0 < p < 1, got p^2 = {p_squared}")));
    }
    let ws = w.squared_weights();
    let idx = w.window();
    let max_dev = |expected: &dyn Fn(i64) -> R| -> f64 {
        idx.iter().zip(ws).map(|(n, x)| deviation(x, &expected(n))).fold(0.0, f64::max)
    };

    let mut fits: Vec<(SchmudgenType, f64, Option<f64>)> = Vec::new();
    let mut closest = f64::INFINITY;
    let mut consider = |t: SchmudgenType, r: f64, a: Option<f64>, ok: bool| {
        closest = closest.min(r);
        if ok && r <= tol {
            fits.push((t, r, a));
        }
    };
    match (w.kind(), w.direction()) {
        (ShiftKind::Unilateral, Direction::Forward) => {
            let r = max_dev(&|n| one.clone() - p_squared.powi(n + 1));
            consider(SchmudgenType::I, r, None, true);
        }
        (ShiftKind::Unilateral, Direction::Backward) => {
            let r = max_dev(&|n| p_squared.powi(-n) - one.clone());
            consider(SchmudgenType::IV, r, None, true);
        }
        (ShiftKind::Bilateral, direction) => {
            consider(SchmudgenType::III, max_dev(&|_| one.clone()), None, true);
            if direction == Direction::Forward {
                // least squares for a^2 in w_n - 1 = a^2 x_n, x_n = p^(2(n+1))
                let (mut num, mut den) = (R::zero(), R::zero());
                for (n, x) in idx.iter().zip(ws) {
                    let xn = p_squared.powi(n + 1);
                    num = num + xn.clone() * (x.clone() - one.clone());
                    den = den + xn.clone() * xn;
                }
                let a2 = num / den;
                let r = max_dev(&|n| one.clone() + p_squared.powi(n + 1) * a2.clone());
                let a2f = a2.to_f64();
                let a = a2f.max(0.0).sqrt();
                let p = p_squared.to_f64().sqrt();
                let admissible = a2f >= 0.0 && a >= p - tol && a <= 1.0 + tol;
                consider(SchmudgenType::II, r, Some(a), admissible);
            }
        }
    }
    let (verdict, residual, fitted_a) = match fits.len() {
        0 => (Verdict::None, closest, None),
        1 => (Verdict::Type(fits[0].0), fits[0].1, fits[0].2),
        _ => (
            Verdict::Ambiguous(fits.iter().map(|f| f.0).collect()),
            fits.iter().map(|f| f.1).fold(0.0, f64::max),
            fits.iter().find_map(|f| f.2),
        ),
    };
    Ok(Classification { verdict, p_squared: p_squared.to_value(), fitted_a, residual, window: idx })
}
