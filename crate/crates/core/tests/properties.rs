//! Property tests for the invariants of each module.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use qosc_core::classify::{
    classify_weights, reduce_to_schmudgen, schi_residual, schmudgen_weights, SchmudgenSpec, SchmudgenType, Verdict,
    DEFAULT_CLASSIFY_TOLERANCE,
};
use qosc_core::export::{format_complex, matrix_from_csv, matrix_to_csv, parse_complex};
use qosc_core::extension::{build_extension, normality_residual};
use qosc_core::harness::{run_scenario, CheckId, CheckRequest, ModeName, Scenario};
use qosc_core::identities::{halmos_bram_form, mixed_product_residual, norm_expansion, random_family, FamilyVector};
use qosc_core::matrix::Matrix;
use qosc_core::moments::{
    adjointness_check, kernel_coefficients, moment_mismatch, poly_ccr_residual, quadrature_from_moments,
    radial_lift_verify, DiscreteMeasure, MomentSequence, Polynomial, RadialMeasure,
};
use qosc_core::qcalc::{basic, basic_signed, binomial, factorial, pochhammer, q_exponential, ExpKind};
use qosc_core::shiftops::{
    bilateral_weights, build_shift, canonical_weights, hyponormality_witness, norm_estimate, residual_suite,
    selfcommutator, IndexWindow, ShiftKind, TruncatedOperator, WeightSequence, WitnessSearch,
};
use qosc_core::{Error, QParam, Real, Scalar, Surd, Value};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Rational q = n/d in [-1, 27], as (n, d). Below -1 the canonical squared
/// weights turn negative.
fn any_q() -> impl Strategy<Value = (i64, i64)> {
    (1i64..=9).prop_flat_map(|d| (-d..=27, Just(d)))
}

fn positive_q() -> impl Strategy<Value = (i64, i64)> {
    (1i64..=27, 1i64..=9)
}

/// 0 < p^2 < 1 as (n, d).
fn unit_fraction() -> impl Strategy<Value = (i64, i64)> {
    (2i64..=12).prop_flat_map(|d| (1..d, Just(d)))
}

fn canonical<T: Scalar>(q: &QParam, d: usize) -> TruncatedOperator<T> {
    build_shift(&canonical_weights::<T::Real>(q, d).unwrap(), d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basic_number_closed_form((n, d) in (-27i64..=27, 1i64..=9), x in -10i64..=20) {
        prop_assume!(n != d && (x >= 0 || n != 0));
        let q = rat(n, d);
        let one = rat(1, 1);
        let b = basic_signed(x, &q).unwrap();
        prop_assert_eq!((one.clone() - q.clone()) * b + q.powi(x), one);
    }

    #[test]
    fn binomial_pascal_recurrence((n, d) in any_q(), m in 2u64..=12, k in 1i64..=11) {
        prop_assume!(k < m as i64);
        let q = rat(n, d);
        let lhs = binomial(m, k, &q);
        let rhs = binomial(m - 1, k - 1, &q) + q.powi(k) * binomial(m - 1, k, &q);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn factorial_is_pochhammer((n, d) in any_q(), k in 0u64..=12) {
        prop_assume!(n != d);
        let q = rat(n, d);
        let lhs = factorial(k, &q) * (rat(1, 1) - q.clone()).powi(k as i64);
        prop_assert_eq!(lhs, pochhammer(&q, &q, k));
    }

    #[test]
    fn basic_numbers_nonnegative_above_minus_one((n, d) in (-9i64..=27, 1i64..=9), x in 0u64..=30) {
        prop_assume!(n >= -d);
        prop_assert!(basic(x, &rat(n, d)) >= rat(0, 1));
    }

    #[test]
    fn exponential_duality(q in 0.05f64..0.95, re in -0.9f64..0.9, im in -0.9f64..0.9) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() < 0.95);
        let tol = 1e-13;
        let small = q_exponential(ExpKind::Small, z * q, &QParam::float(q), tol).unwrap();
        let large = q_exponential(ExpKind::Large, -z, &QParam::float(1.0 / q), tol).unwrap();
        // Cancellation in the alternating sums costs about eps times the sum of |terms|.
        let magnitude = q_exponential(ExpKind::Small, Complex64::new(z.norm() * q, 0.0), &QParam::float(q), tol).unwrap();
        let bound = 20.0 * tol * small.value.norm().max(1.0) + 64.0 * f64::EPSILON * magnitude.value.re;
        prop_assert!((small.value - large.value).norm() <= bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canonical_relation_is_exact((n, d) in any_q(), dim in 3usize..=14) {
        let q = QParam::exact(n, d);
        let s = canonical::<Surd>(&q, dim);
        let r = residual_suite(&s, &q).unwrap();
        prop_assert!(r.oq_residual.is_zero());
        prop_assert!(r.qcomm_left.is_zero());
        prop_assert!(r.qcomm_right.is_zero());
    }

    #[test]
    fn selfcommutator_is_q_power_diagonal((n, d) in any_q(), dim in 3usize..=14) {
        let q = QParam::exact(n, d);
        let s = canonical::<Surd>(&q, dim);
        let c = selfcommutator(&s, &q).unwrap();
        let qr = rat(n, d);
        for k in c.interior().iter() {
            let i = c.position(k).unwrap();
            prop_assert_eq!(c.entries().get(i, i).clone(), Surd::from_real(&qr.powi(k)));
        }
    }

    #[test]
    fn bilateral_solutions_commute((n, d) in (0i64..=8, 9i64..=9), alpha in 1i64..=20, dim in 5usize..=11) {
        // 0 <= q < 1 and alpha large enough for positive weights near the origin
        let q = QParam::exact(n, d);
        let half = dim as i64 / 2;
        let window = IndexWindow::new(-half, dim as i64 - 1 - half);
        let w = match bilateral_weights::<BigRational>(&q, &Value::integer(alpha), 0, window) {
            Ok(w) => w,
            Err(Error::InadmissibleAlpha { .. }) | Err(Error::NegativeWeight { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let s = build_shift::<Surd>(&w, dim).unwrap();
        let r = residual_suite(&s, &q).unwrap();
        prop_assert!(r.oq_residual.is_zero() && r.qcomm_left.is_zero() && r.qcomm_right.is_zero());
    }

    #[test]
    fn negative_q_bilateral_is_constant((n, d) in (-9i64..=-1, 1i64..=9), alpha in -5i64..=5) {
        let q = QParam::exact(n, d);
        let fixed = rat(d, d - n);
        let window = IndexWindow::new(-4, 4);
        prop_assert!(bilateral_weights::<BigRational>(&q, &Value::integer(alpha), 0, window).is_err());
        let w = bilateral_weights::<BigRational>(&q, &Value::Rational(fixed.clone()), 0, window).unwrap();
        prop_assert!(w.squared_weights().iter().all(|x| *x == fixed));
    }

    #[test]
    fn hyponormal_iff_commutator_nonnegative((n, d) in (-8i64..=27, 9i64..=9), dim in 4usize..=12) {
        let q = QParam::exact(n, d);
        let s = canonical::<Surd>(&q, dim);
        let c = selfcommutator(&s, &q).unwrap();
        let min_diag = c.interior().iter().map(|k| {
            let i = c.position(k).unwrap();
            c.entries().get(i, i).to_c64().re
        }).fold(f64::INFINITY, f64::min);
        let witness = hyponormality_witness(&s, WitnessSearch::default());
        prop_assert_eq!(min_diag >= 0.0, witness.is_none());
        if n >= d {
            prop_assert!(min_diag > 0.0);
        }
    }

    #[test]
    fn truncated_norm_below_limit(q in 0.0f64..0.99, dim in 2usize..=60) {
        let qp = QParam::float(q);
        let est = norm_estimate(&canonical::<Complex64>(&qp, dim));
        prop_assert!(est <= (1.0 - q).powf(-0.5) * (1.0 + 1e-12));
    }

    #[test]
    fn mixed_product_is_exact((n, d) in any_q(), i in 0u64..=3, j in 0u64..=3) {
        let q = QParam::exact(n, d);
        let s = canonical::<Surd>(&q, 12);
        prop_assert!(mixed_product_residual(&s, &q, i, j).unwrap().is_zero());
    }

    #[test]
    fn norm_expansion_matches_form((n, d) in positive_q(), p in 1usize..=2, seed in any::<u64>()) {
        let q = QParam::exact(n, d);
        let s = canonical::<Complex64>(&q, 14);
        let d_sub = 4;
        let form = halmos_bram_form(&s, p, d_sub).unwrap();
        let support = IndexWindow::new(form.basis_start, form.basis_start + d_sub as i64 - 1);
        let family = random_family(p + 1, support, seed);
        let e = norm_expansion(&s, &q, &family, p).unwrap();
        let coords: Vec<Complex64> = family
            .iter()
            .flat_map(|f: &FamilyVector| f.coefficients.clone())
            .collect();
        let value = form.evaluate(&coords);
        let tol = 1e-12 * e.rhs.abs().max(1.0);
        prop_assert!((value - e.lhs).norm() <= 2.0 * tol, "{} vs {}", value, e.lhs);
        prop_assert!((value.re - e.rhs).abs() <= 2.0 * tol);
    }

    #[test]
    fn positivity_spectrum_interlaces((n, d) in (-8i64..=27, 9i64..=9), p in 1usize..=2, d_sub in 1usize..=4) {
        let q = QParam::exact(n, d);
        let s = canonical::<Surd>(&q, 14);
        let small = halmos_bram_form(&s, p, d_sub).unwrap();
        prop_assert!(small.is_hermitian());
        let wider = halmos_bram_form(&s, p, d_sub + 1).unwrap().min_eigenvalue();
        let deeper = halmos_bram_form(&s, p + 1, d_sub).unwrap().min_eigenvalue();
        let m = small.min_eigenvalue();
        let tol = 1e-9 * m.abs().max(1.0);
        prop_assert!(wider <= m + tol);
        prop_assert!(deeper <= m + tol);
    }

    #[test]
    fn extension_is_normal((n, d) in positive_q(), dim in 3usize..=8, blocks in 2usize..=4) {
        let q = QParam::exact(n, d);
        let e = build_extension::<Surd>(&q, dim, blocks).unwrap();
        let r = normality_residual(&e);
        prop_assert!(r.exact && r.value == 0.0);
    }

    #[test]
    fn schmudgen_round_trip((n, d) in unit_fraction(), a_num in 0i64..=8) {
        let p2 = rat(n, d);
        let v = Value::Rational(p2.clone());
        let mut specs = vec![
            (SchmudgenSpec::new(SchmudgenType::I, v.clone()).unwrap(), IndexWindow::new(0, 8)),
            (SchmudgenSpec::new(SchmudgenType::III, v.clone()).unwrap(), IndexWindow::new(-4, 4)),
            (SchmudgenSpec::new(SchmudgenType::IV, v.clone()).unwrap(), IndexWindow::new(0, 8)),
        ];
        // a in [p, 1]: sample a^2 between p^2 and 1 through a = 1 or a = sqrt-free rationals above p
        let p = (n as f64 / d as f64).sqrt();
        let a = 1.0 - (1.0 - p) * a_num as f64 / 8.0;
        let a_rat = rat((a * 64.0).ceil() as i64, 64).min(rat(1, 1));
        specs.push((SchmudgenSpec::type_ii(v, Value::Rational(a_rat)).unwrap(), IndexWindow::new(-4, 4)));
        for (spec, window) in specs {
            let w = schmudgen_weights::<BigRational>(&spec, window).unwrap();
            let c = classify_weights(&w, &p2, DEFAULT_CLASSIFY_TOLERANCE).unwrap();
            prop_assert_eq!(c.verdict.clone(), Verdict::Type(spec.kind), "{:?}", spec);
        }
    }

    #[test]
    fn type_i_and_iv_weights_are_monotone((n, d) in unit_fraction()) {
        let v = Value::rational(n, d);
        let window = IndexWindow::new(0, 12);
        let one = rat(1, 1);
        let i = schmudgen_weights::<BigRational>(&SchmudgenSpec::new(SchmudgenType::I, v.clone()).unwrap(), window).unwrap();
        prop_assert!(i.squared_weights().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(i.squared_weights().iter().all(|w| *w < one));
        let iv = schmudgen_weights::<BigRational>(&SchmudgenSpec::new(SchmudgenType::IV, v).unwrap(), window).unwrap();
        prop_assert!(iv.squared_weights().windows(2).all(|w| w[0] < w[1]));
        let p2 = rat(n, d);
        for (k, w) in iv.squared_weights().iter().enumerate() {
            prop_assert_eq!(w.clone(), p2.powi(-(k as i64)) - one.clone());
        }
    }

    #[test]
    fn reduction_is_sound((n, d) in positive_q()) {
        prop_assume!(n != d);
        let q = QParam::exact(n, d);
        let s = canonical::<Surd>(&q, 10);
        let red = reduce_to_schmudgen(&q, &s).unwrap();
        prop_assert!(schi_residual(&red.t, &red.p_squared, red.epsilon).unwrap().is_zero());
        let w = WeightSequence::from_operator(&red.t, ShiftKind::Unilateral).unwrap();
        let c = classify_weights(&w, &red.p_squared, DEFAULT_CLASSIFY_TOLERANCE).unwrap();
        let expected = if n < d { SchmudgenType::I } else { SchmudgenType::IV };
        prop_assert_eq!(c.verdict, Verdict::Type(expected));
    }

    #[test]
    fn kernel_inverts_factorial((n, d) in positive_q(), n_max in 0usize..=15) {
        let q = QParam::exact(n, d);
        let k = kernel_coefficients::<BigRational>(&q, n_max).unwrap();
        let qr = rat(n, d);
        for (m, c) in k.coefficients.iter().enumerate() {
            prop_assert_eq!(c.clone() * factorial(m as u64, &qr), rat(1, 1));
        }
    }

    #[test]
    fn quadrature_recovers_atoms(atoms in prop::collection::btree_map(0i64..=40, 1i64..=20, 1..=5)) {
        let nodes: Vec<BigRational> = atoms.keys().map(|&x| rat(x, 4)).collect();
        let masses: Vec<BigRational> = atoms.values().map(|&w| rat(w, 8)).collect();
        let k = nodes.len();
        let values = (0..2 * k as i64)
            .map(|m| nodes.iter().zip(&masses).fold(rat(0, 1), |acc, (x, w)| acc + w.clone() * x.powi(m)))
            .collect();
        let b = MomentSequence::new(values).unwrap();
        let quad = quadrature_from_moments(&b, k).unwrap();
        prop_assert!(!quad.degenerate);
        prop_assert!(moment_mismatch(&quad.measure, &b, 2 * k) < 1e-10);
        for (got, want) in quad.measure.nodes().iter().zip(&nodes) {
            prop_assert!(*got >= 0.0);
            prop_assert!((got - want.to_f64()).abs() < 1e-8 * want.to_f64().max(1.0));
        }
    }

    #[test]
    fn radial_lift_is_orthogonal(
        nodes in prop::collection::btree_set(1u32..=50, 1..=6),
        n_max in 1usize..=6,
        extra in 0usize..=5,
    ) {
        let r: Vec<f64> = nodes.iter().map(|&x| x as f64 / 10.0).collect();
        let w = vec![1.0; r.len()];
        let radial = RadialMeasure::new(DiscreteMeasure::new(r, w).unwrap(), 2 * n_max + 1 + extra).unwrap();
        let report = radial_lift_verify(&QParam::exact(1, 2), &radial, n_max).unwrap();
        prop_assert_eq!(report.max_off_diagonal, 0.0);
    }

    #[test]
    fn polynomial_relations_are_exact((n, d) in positive_q(), n_max in 0usize..=10) {
        let q = QParam::exact(n, d);
        prop_assert_eq!(poly_ccr_residual::<Surd>(&q, n_max).unwrap(), 0.0);
        prop_assert_eq!(adjointness_check::<Surd>(&q, n_max).unwrap(), 0.0);
    }

    #[test]
    fn polynomials_are_trimmed(coeffs in prop::collection::vec(-3i64..=3, 0..8)) {
        let p = Polynomial::new(coeffs.iter().map(|&c| Surd::from_integer(c)).collect());
        prop_assert!(p.coefficients().last().is_none_or(|c| !c.is_zero()));
    }

    #[test]
    fn complex_strings_round_trip(re in any::<f64>(), im in any::<f64>()) {
        prop_assume!(re.is_finite() && im.is_finite());
        let z = Complex64::new(re, im);
        prop_assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
    }

    #[test]
    fn matrix_csv_round_trip(entries in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..=16)) {
        let n = (entries.len() as f64).sqrt() as usize;
        prop_assume!(n >= 1);
        let m = Matrix::from_fn(n, n, |i, j| Complex64::new(entries[i * n + j].0, entries[i * n + j].1));
        prop_assert_eq!(matrix_from_csv(&matrix_to_csv(&m)).unwrap(), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reports_depend_only_on_the_scenario(seed in any::<u64>(), (n, d) in any_q()) {
        let sc = Scenario { d: 8, n_max: 4, seed, ..Scenario::new(Value::rational(n, d), ModeName::Exact) }
            .with_checks([CheckId::Hyponormality, CheckId::NormExpansion, CheckId::OqResidual].map(CheckRequest::from));
        let a = run_scenario(&sc).unwrap();
        let b = run_scenario(&sc).unwrap();
        prop_assert_eq!(a.canonical().to_json(), b.canonical().to_json());
        prop_assert!(a.records.iter().all(|r| !r.anchor.is_empty()));
    }
}

#[test]
fn every_check_id_is_distinct_and_anchored() {
    let mut names: Vec<&str> = CheckId::ALL.iter().map(|c| c.name()).collect();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), CheckId::ALL.len());
    assert!(CheckId::ALL.iter().all(|c| !c.anchor().is_empty()));
}
