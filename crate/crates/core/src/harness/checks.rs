//! The check catalogue. Each check wraps one operation of one module and
//! turns its output into a residual or verdict compared against a tolerance.

use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::classify::{
    classify_weights, reduce_to_schmudgen, schi_residual, schmudgen_operator, schmudgen_weights, SchmudgenSpec,
    SchmudgenType, Verdict, DEFAULT_CLASSIFY_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::extension::{build_extension, extension_consistency, normality_residual};
use crate::identities::{halmos_bram_form, mixed_product_residual, norm_expansion, random_family};
use crate::moments::{
    adjointness_check, hankel_psd_check, moment_mismatch, poly_ccr_residual, quadrature_from_moments,
    radial_lift_verify, MomentSequence, Quadrature, RadialMeasure,
};
use crate::qcalc::{basic, duality_residual, QParam, Regime};
use crate::scalar::{Real, Scalar, Value};
use crate::shiftops::{
    bilateral_weights, build_shift, canonical_weights, hyponormality_witness, norm_estimate, normal_solution,
    residual_suite, selfcommutator, IndexWindow, ShiftKind, TruncatedOperator, UnitarySpec, WeightSequence, Witness,
    WitnessSearch,
};

use super::Scenario;

/// Largest `i` and `j` tried by `mixed_product` when no pair is given.
pub const MIXED_PRODUCT_MAX_POWER: u64 = 4;
/// Random families tried by `norm_expansion`.
pub const NORM_EXPANSION_FAMILIES: u64 = 20;
/// Basis vectors in the support of each random family member.
pub const FAMILY_SUPPORT: i64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    QExponentialDuality,
    OqResidual,
    QcommLeft,
    QcommRight,
    SelfcommutatorDiagonal,
    Hyponormality,
    NormEstimate,
    BilateralRegime,
    NormalSolutionRegime,
    MixedProduct,
    NormExpansion,
    HalmosBramPositivity,
    ExtensionNormality,
    ExtensionConsistency,
    SchmudgenRoundTrip,
    SchmudgenReduction,
    HankelPositivity,
    QuadratureMoments,
    RadialLift,
    PolyCommutation,
    Adjointness,
}

impl CheckId {
    pub const ALL: [CheckId; 21] = [
        CheckId::QExponentialDuality,
        CheckId::OqResidual,
        CheckId::QcommLeft,
        CheckId::QcommRight,
        CheckId::SelfcommutatorDiagonal,
        CheckId::Hyponormality,
        CheckId::NormEstimate,
        CheckId::BilateralRegime,
        CheckId::NormalSolutionRegime,
        CheckId::MixedProduct,
        CheckId::NormExpansion,
        CheckId::HalmosBramPositivity,
        CheckId::ExtensionNormality,
        CheckId::ExtensionConsistency,
        CheckId::SchmudgenRoundTrip,
        CheckId::SchmudgenReduction,
        CheckId::HankelPositivity,
        CheckId::QuadratureMoments,
        CheckId::RadialLift,
        CheckId::PolyCommutation,
        CheckId::Adjointness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::QExponentialDuality => "q_exponential_duality",
            CheckId::OqResidual => "oq_residual",
            CheckId::QcommLeft => "qcomm_left",
            CheckId::QcommRight => "qcomm_right",
            CheckId::SelfcommutatorDiagonal => "selfcommutator_diagonal",
            CheckId::Hyponormality => "hyponormality",
            CheckId::NormEstimate => "norm_estimate",
            CheckId::BilateralRegime => "bilateral_regime",
            CheckId::NormalSolutionRegime => "normal_solution_regime",
            CheckId::MixedProduct => "mixed_product",
            CheckId::NormExpansion => "norm_expansion",
            CheckId::HalmosBramPositivity => "halmos_bram_positivity",
            CheckId::ExtensionNormality => "extension_normality",
            CheckId::ExtensionConsistency => "extension_consistency",
            CheckId::SchmudgenRoundTrip => "schmudgen_round_trip",
            CheckId::SchmudgenReduction => "schmudgen_reduction",
            CheckId::HankelPositivity => "hankel_positivity",
            CheckId::QuadratureMoments => "quadrature_moments",
            CheckId::RadialLift => "radial_lift",
            CheckId::PolyCommutation => "poly_commutation",
            CheckId::Adjointness => "adjointness",
        }
    }

    pub fn parse(s: &str) -> Option<CheckId> {
        CheckId::ALL.into_iter().find(|c| c.name() == s)
    }

    /// The identity or property the check verifies, written out.
    pub fn anchor(self) -> &'static str {
        match self {
            CheckId::QExponentialDuality => "e_q(qz) = E_{1/q}(-z)",
            CheckId::OqResidual => "S*S - qSS* = I",
            CheckId::QcommLeft => "CS = qSC, C = I + (q-1)SS*",
            CheckId::QcommRight => "qCS* = S*C",
            CheckId::SelfcommutatorDiagonal => "<C e_n, e_n> = q^n",
            CheckId::Hyponormality => "||S* f|| <= ||S f|| iff q >= 0",
            CheckId::NormEstimate => "||S|| = (1-q)^(-1/2) for 0 < q < 1",
            CheckId::BilateralRegime => "bilateral weights a q^n + [n]_q exist iff q < 1, with a = (1-q)^(-1) when q <= 0",
            CheckId::NormalSolutionRegime => "(1-q)^(-1/2) U is a normal solution iff q < 1",
            CheckId::MixedProduct => {
                "S*^i S^j = sum_k [k]_q! binom(i,k)_q binom(j,k)_q S^(j-k) C^k S*^(i-k)"
            }
            CheckId::NormExpansion => {
                "sum_(i,j) <S^i f_j, S^j f_i> = sum_k [k]_q! ||sum_i binom(i,k)_q C^(k/2) S*^(i-k) f_i||^2"
            }
            CheckId::HalmosBramPositivity => "sum_(i,j) <S^i f_j, S^j f_i> >= 0",
            CheckId::ExtensionNormality => "N*N = NN*",
            CheckId::ExtensionConsistency => "N (f, 0, ..) = (S f, 0, ..)",
            CheckId::SchmudgenRoundTrip => "TT* - p^2 T*T = eps (1 - p^2) I",
            CheckId::SchmudgenReduction => {
                "T = (1-q)^(1/2) S (0 < q < 1), T = (q-1)^(1/2) S* (q > 1) satisfy TT* - p^2 T*T = eps (1 - p^2) I"
            }
            CheckId::HankelPositivity => "det[b_(i+j)] > 0 and det[b_(i+j+1)] > 0 for b_n = [n]_q!",
            CheckId::QuadratureMoments => "int t^n dmu(t) = [n]_q!",
            CheckId::RadialLift => "<Z^m, Z^n> = delta_mn [m]_q!",
            CheckId::PolyCommutation => "D_q M - q M D_q = I",
            CheckId::Adjointness => "<M f, g> = <f, D_q g>",
        }
    }

    /// Whether the check is defined for this `q` at all. The default suite
    /// skips checks that do not apply.
    pub fn applies(self, q: &QParam) -> bool {
        let r = q.regime();
        let positive = matches!(r, Regime::ZeroToOne | Regime::One | Regime::AboveOne);
        match self {
            CheckId::QExponentialDuality => !matches!(r, Regime::Zero | Regime::One | Regime::MinusOne),
            CheckId::NormEstimate => r == Regime::ZeroToOne,
            CheckId::NormExpansion | CheckId::HalmosBramPositivity => positive || r == Regime::Zero,
            CheckId::SchmudgenReduction | CheckId::SchmudgenRoundTrip => matches!(r, Regime::ZeroToOne | Regime::AboveOne),
            CheckId::ExtensionNormality
            | CheckId::ExtensionConsistency
            | CheckId::HankelPositivity
            | CheckId::QuadratureMoments
            | CheckId::RadialLift
            | CheckId::Adjointness => positive,
            _ => true,
        }
    }

    /// Checks that run in floating point whatever the scenario mode.
    pub fn float_only(self) -> bool {
        matches!(
            self,
            CheckId::QExponentialDuality
                | CheckId::NormEstimate
                | CheckId::NormExpansion
                | CheckId::HalmosBramPositivity
                | CheckId::QuadratureMoments
                | CheckId::RadialLift
        )
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A selected check with its optional parameters. Deserializes from either
/// a bare check name or `{"id": ..., "powers": [i, j]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "CheckRequestRepr")]
pub struct CheckRequest {
    pub id: CheckId,
    /// `(i, j)` for `mixed_product`; every pair up to the default power otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<(u64, u64)>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CheckRequestRepr {
    Name(CheckId),
    Full {
        id: CheckId,
        #[serde(default)]
        powers: Option<(u64, u64)>,
    },
}

impl From<CheckRequestRepr> for CheckRequest {
    fn from(repr: CheckRequestRepr) -> Self {
        match repr {
            CheckRequestRepr::Name(id) => id.into(),
            CheckRequestRepr::Full { id, powers } => CheckRequest { id, powers },
        }
    }
}

impl From<CheckId> for CheckRequest {
    fn from(id: CheckId) -> Self {
        CheckRequest { id, powers: None }
    }
}

/// What a check produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    /// Raw residual (absolute).
    pub residual: Option<f64>,
    /// Residual divided by the scale of the operators involved; compared
    /// against the tolerance in floating point.
    pub scaled: Option<f64>,
    pub verdict: Option<String>,
    pub passed: bool,
}

impl Outcome {
    fn residual(value: f64, scale: f64, exact: bool, tol: f64) -> Self {
        let scaled = value / scale.max(1.0);
        let passed = if exact { value == 0.0 } else { scaled <= tol };
        Outcome { residual: Some(value), scaled: Some(scaled), verdict: None, passed }
    }

    fn verdict(text: impl Into<String>, passed: bool) -> Self {
        Outcome { verdict: Some(text.into()), passed, ..Default::default() }
    }

    fn with_verdict(mut self, text: impl Into<String>) -> Self {
        self.verdict = Some(text.into());
        self
    }
}

fn canonical<T: Scalar>(q: &QParam, d: usize) -> Result<TruncatedOperator<T>> {
    build_shift(&canonical_weights::<T::Real>(q, d)?, d)
}

fn op_scale<T: Scalar>(op: &TruncatedOperator<T>) -> f64 {
    norm_estimate(op).max(1.0)
}

/// Runs one check in arithmetic `T`; `exact` says whether zero is demanded.
pub(crate) fn run_check<T: Scalar>(
    req: &CheckRequest,
    sc: &Scenario,
    q: &QParam,
    tol: f64,
) -> Result<Outcome> {
    let exact = T::EXACT && !req.id.float_only();
    let d = sc.d;
    match req.id {
        CheckId::QExponentialDuality => {
            let z = Complex64::new(0.3, 0.2);
            let r = duality_residual(z, q, tol.min(1e-14))?;
            Ok(Outcome::residual(r, 1.0, false, tol))
        }
        CheckId::OqResidual | CheckId::QcommLeft | CheckId::QcommRight => {
            let s = canonical::<T>(q, d)?;
            let suite = residual_suite(&s, q)?;
            let ns = op_scale(&s);
            let nc = op_scale(&selfcommutator(&s, q)?);
            let qa = q.to_f64().abs().max(1.0);
            let (res, scale) = match req.id {
                CheckId::OqResidual => (suite.oq_residual, ns * ns * qa),
                CheckId::QcommLeft => (suite.qcomm_left, nc * ns * qa),
                _ => (suite.qcomm_right, nc * ns * qa),
            };
            Ok(Outcome::residual(res.value, scale, exact, tol))
        }
        CheckId::SelfcommutatorDiagonal => {
            let s = canonical::<T>(q, d)?;
            let c = selfcommutator(&s, q)?;
            let qr: T::Real = q.real()?;
            let mut worst = 0.0f64;
            let mut scale = 1.0f64;
            for n in c.interior().iter() {
                let i = c.position(n).expect("interior index inside range");
                let expected = T::from_real(&qr.powi(n));
                let diff = c.entries().get(i, i).clone() - expected.clone();
                let mut v = diff.to_c64().norm();
                if v == 0.0 && !diff.is_zero() {
                    v = f64::MIN_POSITIVE;
                }
                worst = worst.max(v);
                scale = scale.max(expected.to_c64().norm());
            }
            Ok(Outcome::residual(worst, scale, exact, tol))
        }
        CheckId::Hyponormality => {
            let s = canonical::<T>(q, d)?;
            let witness = hyponormality_witness(&s, WitnessSearch { seed: sc.seed, ..Default::default() });
            let expect_witness = matches!(q.regime(), Regime::BelowMinusOne | Regime::MinusOne | Regime::MinusOneToZero);
            let (text, found) = match &witness {
                None => ("no witness: hyponormal on the interior".to_string(), false),
                Some(Witness::Basis { index, margin, .. }) => (format!("witness e_{index}, margin {margin}"), true),
                Some(w @ Witness::Vector { .. }) => (format!("witness vector, margin {}", w.margin()), true),
            };
            Ok(Outcome::verdict(text, found == expect_witness))
        }
        CheckId::NormEstimate => {
            let s = canonical::<Complex64>(q, d)?;
            let est = norm_estimate(&s);
            // the truncated norm is the largest weight
            let largest = basic(d as u64 - 1, &q.to_f64()).sqrt();
            let limit = (1.0 - q.to_f64()).powf(-0.5);
            Ok(Outcome::residual((est - largest).abs(), largest, false, tol)
                .with_verdict(format!("{est} (limit {limit}, gap {})", limit - est)))
        }
        CheckId::BilateralRegime => {
            let window = IndexWindow::new(-(d as i64) / 2, d as i64 / 2);
            let alpha = Value::integer(3);
            let got = bilateral_weights::<T::Real>(q, &alpha, 0, window);
            let (passed, text) = match q.regime() {
                Regime::ZeroToOne => (got.is_ok(), "alpha = 3 accepted"),
                Regime::One | Regime::AboveOne => {
                    (matches!(got, Err(Error::NoBilateralSolution(_))), "rejected: no bilateral solution")
                }
                _ => {
                    let one = <T::Real as Real>::one();
                    let admissible = (one.clone() / (one - q.real::<T::Real>()?)).to_value();
                    (
                        matches!(got, Err(Error::InadmissibleAlpha { .. }))
                            && bilateral_weights::<T::Real>(q, &admissible, 0, window).is_ok(),
                        "alpha = 3 rejected, alpha = (1-q)^(-1) accepted",
                    )
                }
            };
            Ok(Outcome::verdict(text, passed))
        }
        CheckId::NormalSolutionRegime => {
            let got = normal_solution::<T>(q, d, UnitarySpec::CyclicShift);
            let passed = match q.regime() {
                Regime::One | Regime::AboveOne => matches!(got, Err(Error::NoNormalSolution(_))),
                _ => got.is_ok(),
            };
            let text = if got.is_ok() { "normal solution built" } else { "rejected: no normal solution" };
            Ok(Outcome::verdict(text, passed))
        }
        CheckId::MixedProduct => {
            let s = canonical::<T>(q, d)?;
            let ns = op_scale(&s);
            let pairs: Vec<(u64, u64)> = match req.powers {
                Some(p) => vec![p],
                None => (0..=MIXED_PRODUCT_MAX_POWER)
                    .flat_map(|i| (0..=MIXED_PRODUCT_MAX_POWER).map(move |j| (i, j)))
                    .collect(),
            };
            let mut worst = Outcome::residual(0.0, 1.0, exact, tol);
            for (i, j) in pairs {
                let r = mixed_product_residual(&s, q, i, j)?;
                let o = Outcome::residual(r.value, ns.powi((i + j) as i32), exact, tol);
                if o.scaled > worst.scaled || !o.passed {
                    worst = o.with_verdict(format!("worst at i = {i}, j = {j}"));
                }
            }
            Ok(worst)
        }
        CheckId::NormExpansion => {
            let s = canonical::<T>(q, d)?;
            let allowed = s.admissible(sc.p);
            let support = IndexWindow::new(allowed.lo, (allowed.lo + FAMILY_SUPPORT - 1).min(allowed.hi));
            if allowed.is_empty() {
                return Err(Error::InteriorExhausted(format!("no room for depth {} at d = {d}", sc.p)));
            }
            let mut worst = 0.0f64;
            let mut raw = 0.0f64;
            for k in 0..NORM_EXPANSION_FAMILIES {
                let family = random_family(sc.p + 1, support, sc.seed.wrapping_add(k));
                let e = norm_expansion(&s, q, &family, sc.p)?;
                raw = raw.max(e.residual);
                worst = worst.max(e.residual / e.rhs.abs().max(1.0));
            }
            Ok(Outcome { residual: Some(raw), scaled: Some(worst), verdict: None, passed: worst <= tol })
        }
        CheckId::HalmosBramPositivity => {
            let s = canonical::<T>(q, d)?;
            let form = halmos_bram_form(&s, sc.p, sc.d_sub)?;
            let eig = form.eigenvalues();
            let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
            let passed = form.is_hermitian() && min >= -tol;
            Ok(Outcome {
                residual: Some((-min).max(0.0)),
                scaled: None,
                verdict: Some(format!("minimum eigenvalue {min}")),
                passed,
            })
        }
        CheckId::ExtensionNormality => {
            let n = build_extension::<T>(q, d, sc.blocks)?;
            let r = normality_residual(&n);
            let scale = n.flatten().to_c64().frobenius_norm().powi(2);
            Ok(Outcome::residual(r.value, scale, exact, tol))
        }
        CheckId::ExtensionConsistency => {
            let n = build_extension::<T>(q, d, sc.blocks)?;
            let s = canonical::<T>(q, d)?;
            let c = extension_consistency(&n, &s)?;
            let mut o = Outcome::residual(c.deviation, op_scale(&s), exact, tol);
            o.passed &= !exact || c.consistent;
            Ok(o.with_verdict(if c.consistent { "consistent" } else { "inconsistent" }))
        }
        CheckId::SchmudgenRoundTrip => {
            let p2 = reduction_p_squared::<T>(q)?;
            let a = Value::integer(1);
            let specs = [
                (SchmudgenSpec::new(SchmudgenType::I, p2.to_value())?, 0, IndexWindow::new(0, d as i64 - 2)),
                (SchmudgenSpec::type_ii(p2.to_value(), a)?, -(d as i64) / 2, IndexWindow::new(-(d as i64) / 2, d as i64 / 2 - 2)),
                (SchmudgenSpec::new(SchmudgenType::III, p2.to_value())?, -(d as i64) / 2, IndexWindow::new(-(d as i64) / 2, d as i64 / 2 - 2)),
                (SchmudgenSpec::new(SchmudgenType::IV, p2.to_value())?, 0, IndexWindow::new(0, d as i64 - 2)),
            ];
            let mut worst = 0.0f64;
            let mut scale = 1.0f64;
            let mut all = true;
            let mut found = Vec::new();
            for (spec, low, window) in specs {
                let t = schmudgen_operator::<T>(&spec, d, low)?;
                let r = schi_residual(&t, &p2, spec.epsilon)?;
                worst = worst.max(r.value);
                scale = scale.max(op_scale(&t).powi(2));
                let w: WeightSequence<T::Real> = schmudgen_weights(&spec, window)?;
                let c = classify_weights(&w, &p2, DEFAULT_CLASSIFY_TOLERANCE)?;
                all &= c.verdict == Verdict::Type(spec.kind);
                found.push(c.verdict.to_string());
            }
            let mut o = Outcome::residual(worst, scale, exact, tol);
            o.passed &= all;
            Ok(o.with_verdict(format!("recovered {}", found.join(", "))))
        }
        CheckId::SchmudgenReduction => {
            let s = canonical::<T>(q, d)?;
            let red = reduce_to_schmudgen(q, &s)?;
            let r = schi_residual(&red.t, &red.p_squared, red.epsilon)?;
            let w = WeightSequence::from_operator(&red.t, ShiftKind::Unilateral)?;
            let c = classify_weights(&w, &red.p_squared, DEFAULT_CLASSIFY_TOLERANCE)?;
            let expected = if red.epsilon > 0 { SchmudgenType::I } else { SchmudgenType::IV };
            let mut o = Outcome::residual(r.value, op_scale(&red.t).powi(2), exact, tol);
            o.passed &= c.verdict == Verdict::Type(expected);
            Ok(o.with_verdict(format!("type {}", c.verdict)))
        }
        CheckId::HankelPositivity => {
            let size = sc.n_max.div_ceil(2).max(1);
            let b = MomentSequence::<T::Real>::q_factorial(q, 2 * size - 1)?;
            let h = hankel_psd_check(&b, size)?;
            Ok(Outcome::verdict(
                format!(
                    "{} plain and {} shifted leading minors, zero minors {:?}",
                    if h.plain_positive { "positive" } else { "nonpositive" },
                    if h.shifted_positive { "positive" } else { "nonpositive" },
                    h.zero_minors
                ),
                h.passes(),
            ))
        }
        CheckId::QuadratureMoments => {
            let nodes = sc.n_max.div_ceil(2).max(1);
            let (quad, mismatch) = match q.value() {
                Value::Rational(_) => gauss_rule::<BigRational>(q, nodes)?,
                Value::Float(_) => gauss_rule::<f64>(q, nodes)?,
            };
            let mut o = Outcome::residual(mismatch, 1.0, false, tol);
            o.passed &= !quad.degenerate;
            Ok(o.with_verdict(format!("{} atoms", quad.measure.len())))
        }
        CheckId::RadialLift => {
            let n_max = sc.n_max;
            let (quad, _) = match q.value() {
                Value::Rational(_) => gauss_rule::<BigRational>(q, n_max + 1)?,
                Value::Float(_) => gauss_rule::<f64>(q, n_max + 1)?,
            };
            let radial = RadialMeasure::from_squared_radius(&quad.measure, 2 * n_max + 1)?;
            let r = radial_lift_verify(q, &radial, n_max)?;
            Ok(Outcome::residual(r.deviation, 1.0, false, tol))
        }
        CheckId::PolyCommutation => {
            let r = poly_ccr_residual::<T>(q, sc.n_max)?;
            Ok(Outcome::residual(r, basic(sc.n_max as u64 + 1, &q.to_f64()).abs(), exact, tol))
        }
        CheckId::Adjointness => {
            let r = adjointness_check::<T>(q, sc.n_max)?;
            let scale = crate::qcalc::factorial(sc.n_max as u64 + 1, &q.to_f64());
            Ok(Outcome::residual(r, scale, exact, tol))
        }
    }
}

/// Gauss rule with `nodes` atoms for `b_n = [n]_q!` and its worst relative
/// mismatch on the `2 nodes` moments it should reproduce. The Hankel
/// problem is ill-conditioned, so rational `q` keeps the moments exact.
fn gauss_rule<R: Real>(q: &QParam, nodes: usize) -> Result<(Quadrature, f64)> {
    let b = MomentSequence::<R>::q_factorial(q, 2 * nodes - 1)?;
    let quad = quadrature_from_moments(&b, nodes)?;
    let mismatch = moment_mismatch(&quad.measure, &b, 2 * nodes);
    Ok((quad, mismatch))
}

/// `p^2` of the reduction: `q` below one, `1/q` above.
fn reduction_p_squared<T: Scalar>(q: &QParam) -> Result<T::Real> {
    let qr: T::Real = q.real()?;
    match q.regime() {
        Regime::ZeroToOne => Ok(qr),
        Regime::AboveOne => Ok(<T::Real as Real>::one() / qr),
        _ => Err(Error::InvalidParameter(format!("no Schmudgen parameter for q = {q}"))),
    }
}
