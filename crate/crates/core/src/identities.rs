//! Mixed products `S*^i S^j`, the norm expansion built from them, and the
//! Gram form behind positive definiteness of `sum <S^i f_j, S^j f_i>`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{inner, vec_norm, Matrix};
use crate::qcalc::{binomial, factorial, QParam};
use crate::scalar::{Real, Scalar};
use crate::shiftops::{selfcommutator, IndexWindow, Residual, TruncatedOperator};

/// `[k]_q! binom(i,k)_q binom(j,k)_q`.
pub fn mixed_product_coefficient<R: Real>(i: u64, j: u64, k: u64, q: &R) -> R {
    factorial(k, q) * binomial(i, k as i64, q) * binomial(j, k as i64, q)
}

/// Right-hand side `sum_k c_k S^(j-k) C^k S*^(i-k)` as a matrix.
pub fn mixed_product_expansion<T: Scalar>(s: &TruncatedOperator<T>, q: &QParam, i: u64, j: u64) -> Result<Matrix<T>> {
    let qr: T::Real = q.real()?;
    let sm = s.entries();
    let sa = sm.adjoint();
    let c = selfcommutator(s, q)?;
    let mut total = Matrix::zeros(s.dim(), s.dim());
    for k in 0..=i.min(j) {
        let coeff = mixed_product_coefficient(i, j, k, &qr);
        if coeff.is_zero() {
            continue;
        }
        let term = sm
            .pow((j - k) as usize)
            .matmul(&c.entries().pow(k as usize))
            .matmul(&sa.pow((i - k) as usize));
        total = total.add(&term.scale_real(&coeff));
    }
    Ok(total)
}

/// Column-norm residual of `S*^i S^j - sum_k ...` over the interior shrunk
/// by `i + j` on each truncated side.
pub fn mixed_product_residual<T: Scalar>(s: &TruncatedOperator<T>, q: &QParam, i: u64, j: u64) -> Result<Residual> {
    let columns = s.admissible((i + j) as usize);
    if columns.is_empty() {
        return Err(Error::InteriorExhausted(format!(
            "d = {} leaves no column for i = {i}, j = {j}",
            s.dim()
        )));
    }
    let sm = s.entries();
    let lhs = sm.adjoint().pow(i as usize).matmul(&sm.pow(j as usize));
    let rhs = mixed_product_expansion(s, q, i, j)?;
    Ok(Residual::of_columns(&lhs.sub(&rhs), s.index_origin(), columns))
}

/// A vector given by its coefficients on an explicit window of basis indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyVector {
    pub support: IndexWindow,
    pub coefficients: Vec<Complex64>,
}

impl FamilyVector {
    pub fn new(support: IndexWindow, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a support of {} indices",
                coefficients.len(),
                support.len()
            )));
        }
        Ok(FamilyVector { support, coefficients })
    }

    pub fn basis(n: i64) -> Self {
        FamilyVector { support: IndexWindow::new(n, n), coefficients: vec![Complex64::new(1.0, 0.0)] }
    }

    /// Coordinates in a matrix whose row 0 is basis index `origin`.
    fn embed(&self, origin: i64, dim: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        for (n, c) in self.support.iter().zip(&self.coefficients) {
            v[(n - origin) as usize] = *c;
        }
        v
    }
}

/// `count` unit vectors with complex Gaussian coefficients on `support`.
pub fn random_family(count: usize, support: IndexWindow, seed: u64) -> Vec<FamilyVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut c: Vec<Complex64> = support
                .iter()
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect();
            let norm = vec_norm(&c);
            if norm > 0.0 {
                c.iter_mut().for_each(|x| *x /= norm);
            }
            FamilyVector { support, coefficients: c }
        })
        .collect()
}

/// Square root of the selfcommutator restricted to the interior, zero
/// elsewhere. Eigenvalues in `[-1e-12 * scale, 0)` are taken as zero.
pub fn commutator_root(s: &TruncatedOperator<Complex64>, q: &QParam) -> Result<Matrix<Complex64>> {
    let c = selfcommutator(s, q)?;
    let interior = s.interior();
    let mut root = Matrix::zeros(s.dim(), s.dim());
    if interior.is_empty() {
        return Ok(root);
    }
    let start = (interior.lo - s.index_origin()) as usize;
    let end = start + interior.len();
    let block = c.entries().principal(start, end);
    let n = block.rows();
    let diagonal = (0..n).all(|r| (0..n).all(|k| r == k || block.get(r, k).is_zero()));
    let floor = |x: f64, scale: f64| -> Result<f64> {
        if x >= 0.0 {
            Ok(x)
        } else if x >= -1e-12 * scale.max(1.0) {
            Ok(0.0)
        } else {
            Err(Error::NegativeCommutator(x))
        }
    };
    if diagonal {
        let scale = (0..n).map(|r| block.get(r, r).re.abs()).fold(0.0, f64::max);
        for r in 0..n {
            root.set(start + r, start + r, Complex64::new(floor(block.get(r, r).re, scale)?.sqrt(), 0.0));
        }
        return Ok(root);
    }
    let eig = SymmetricEigen::new(block.to_nalgebra());
    let scale = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut roots = Vec::with_capacity(n);
    for &lambda in eig.eigenvalues.iter() {
        roots.push(Complex64::new(floor(lambda, scale)?.sqrt(), 0.0));
    }
    let v = &eig.eigenvectors;
    let r = v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots)) * v.adjoint();
    for a in 0..n {
        for b in 0..n {
            root.set(start + a, start + b, r[(a, b)]);
        }
    }
    Ok(root)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormExpansion {
    /// `sum_{i,j} <S^i f_j, S^j f_i>`
    pub lhs: Complex64,
    /// `sum_k [k]_q! || sum_i binom(i,k)_q C^(k/2) S*^(i-k) f_i ||^2`
    pub rhs: f64,
    pub residual: f64,
}

/// Evaluates both sides of the norm expansion for `family = (f_0, .., f_p)`.
/// Runs in floating point; each `f_i` must lie in the interior shrunk by `p`.
pub fn norm_expansion<T: Scalar>(
    s: &TruncatedOperator<T>,
    q: &QParam,
    family: &[FamilyVector],
    p: usize,
) -> Result<NormExpansion> {
    if family.len() != p + 1 {
        return Err(Error::DimensionMismatch(format!("need p + 1 = {} vectors, got {}", p + 1, family.len())));
    }
    let allowed = s.admissible(p);
    for (i, f) in family.iter().enumerate() {
        if !allowed.contains_window(&f.support) {
            return Err(Error::InteriorExhausted(format!(
                "f_{i} on [{}, {}] is not inside [{}, {}]",
                f.support.lo, f.support.hi, allowed.lo, allowed.hi
            )));
        }
    }
    let sc = s.to_complex();
    let sm = sc.entries();
    let sa = sm.adjoint();
    let qf = q.to_f64();
    let root = commutator_root(&sc, q)?;
    let dim = s.dim();
    let fs: Vec<Vec<Complex64>> = family.iter().map(|f| f.embed(s.index_origin(), dim)).collect();

    let powers: Vec<Vec<Vec<Complex64>>> = fs
        .iter()
        .map(|f| {
            let mut out = vec![f.clone()];
            for _ in 0..p {
                let next = sm.matvec(out.last().unwrap());
                out.push(next);
            }
            out
        })
        .collect();
    let mut lhs = Complex64::new(0.0, 0.0);
    for i in 0..=p {
        for j in 0..=p {
            lhs += inner(&powers[j][i], &powers[i][j]);
        }
    }

    let mut rhs = 0.0;
    for k in 0..=p {
        let mut acc = vec![Complex64::new(0.0, 0.0); dim];
        for (i, f) in fs.iter().enumerate().skip(k) {
            let coeff = binomial(i as u64, k as i64, &qf);
            if coeff == 0.0 {
                continue;
            }
            let mut v = f.clone();
            for _ in 0..i - k {
                v = sa.matvec(&v);
            }
            for _ in 0..k {
                v = root.matvec(&v);
            }
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x * coeff;
            }
        }
        rhs += factorial(k as u64, &qf) * vec_norm(&acc).powi(2);
    }
    Ok(NormExpansion { lhs, rhs, residual: (lhs - rhs).norm() })
}

/// Gram matrix of the positive-definiteness form over `f_j = sum_b c_(j,b) e_b`.
///
/// Rows and columns are indexed by `(power, basis)` pairs in power-major
/// order, and `entry[(i,a),(j,b)] = <S^i e_b, S^j e_a>`, so the form value
/// `sum_{i,j} <S^i f_j, S^j f_i>` equals `c^H H c`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianForm<T> {
    pub entries: Matrix<T>,
    pub p: usize,
    pub d_sub: usize,
    /// Basis index of `b = 0`.
    pub basis_start: i64,
    pub label: String,
}

impl<T: Scalar> HermitianForm<T> {
    pub fn index(&self, power: usize, basis: usize) -> usize {
        power * self.d_sub + basis
    }

    /// `(power, basis index)` of every row.
    pub fn index_map(&self) -> Vec<(usize, i64)> {
        (0..=self.p)
            .flat_map(|i| (0..self.d_sub).map(move |a| (i, a as i64)))
            .map(|(i, a)| (i, self.basis_start + a))
            .collect()
    }

    /// Form value `c^H H c`.
    pub fn evaluate(&self, c: &[T]) -> T {
        let hc = self.entries.matvec(c);
        inner(&hc, c)
    }

    pub fn is_hermitian(&self) -> bool {
        let adj = self.entries.adjoint();
        if T::EXACT {
            adj == self.entries
        } else {
            let scale = self.entries.frobenius_norm().max(1.0);
            adj.sub(&self.entries).frobenius_norm() <= 1e-14 * scale
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.to_nalgebra()).eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }
}

pub fn halmos_bram_form<T: Scalar>(s: &TruncatedOperator<T>, p: usize, d_sub: usize) -> Result<HermitianForm<T>> {
    if d_sub == 0 {
        return Err(Error::InvalidParameter("d_sub must be positive".into()));
    }
    let allowed = s.admissible(p);
    let start = allowed.lo;
    let last = start + d_sub as i64 - 1;
    if allowed.is_empty() || last > allowed.hi {
        return Err(Error::InteriorExhausted(format!(
            "{d_sub} basis vectors with p = {p} do not fit in the interior [{}, {}] of a d = {} matrix",
            s.interior().lo,
            s.interior().hi,
            s.dim()
        )));
    }
    let sm = s.entries();
    let powers: Vec<Matrix<T>> = (0..=p).map(|i| sm.pow(i)).collect();
    let col = |m: &Matrix<T>, b: usize| m.column((start - s.index_origin()) as usize + b);
    let size = (p + 1) * d_sub;
    let mut h = Matrix::zeros(size, size);
    for i in 0..=p {
        for a in 0..d_sub {
            for j in 0..=p {
                for b in 0..d_sub {
                    let v = inner(&col(&powers[i], b), &col(&powers[j], a));
                    h.set(i * d_sub + a, j * d_sub + b, v);
                }
            }
        }
    }
    Ok(HermitianForm { entries: h, p, d_sub, basis_start: start, label: format!("PD[{}]", s.label()) })
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;
    use num_rational::BigRational;

    use super::*;
    use crate::shiftops::{build_shift, canonical_weights, normal_solution, UnitarySpec, DEFAULT_SEED};
    use crate::surd::Surd;

    fn canonical_exact(q: &QParam, d: usize) -> TruncatedOperator<Surd> {
        build_shift(&canonical_weights::<BigRational>(q, d - 1).unwrap(), d).unwrap()
    }

    fn canonical_float(q: f64, d: usize) -> TruncatedOperator<Complex64> {
        build_shift(&canonical_weights::<f64>(&QParam::float(q), d - 1).unwrap(), d).unwrap()
    }

    #[test]
    fn coefficient_vanishes_beyond_min() {
        let q = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert!(mixed_product_coefficient(2, 5, 3, &q).is_zero());
        assert_eq!(mixed_product_coefficient(1, 1, 1, &q), BigRational::from_integer(1.into()));
    }

    #[test]
    fn i_zero_is_trivial() {
        let q = QParam::exact(2, 3);
        let s = canonical_exact(&q, 10);
        for j in 0..4 {
            assert!(mixed_product_residual(&s, &q, 0, j).unwrap().is_zero());
        }
    }

    #[test]
    fn one_one_is_the_commutator_identity() {
        let q = QParam::exact(1, 2);
        let s = canonical_exact(&q, 10);
        assert!(mixed_product_residual(&s, &q, 1, 1).unwrap().is_zero());
    }

    #[test]
    fn two_two_exact_and_float() {
        let q = QParam::exact(1, 2);
        assert!(mixed_product_residual(&canonical_exact(&q, 16), &q, 2, 2).unwrap().is_zero());
        let r = mixed_product_residual(&canonical_float(0.5, 16), &QParam::float(0.5), 2, 2).unwrap();
        assert!(r.value < 1e-12, "{}", r.value);
    }

    #[test]
    fn mixed_products_hold_for_normal_solutions() {
        let q = QParam::exact(-1, 3);
        let s: TruncatedOperator<Surd> = normal_solution(&q, 5, UnitarySpec::CyclicShift).unwrap();
        for (i, j) in [(1, 2), (2, 1), (3, 3)] {
            assert!(mixed_product_residual(&s, &q, i, j).unwrap().is_zero());
        }
    }

    #[test]
    fn exhausted_interior_is_reported() {
        let q = QParam::exact(1, 2);
        let s = canonical_exact(&q, 2);
        assert!(matches!(mixed_product_residual(&s, &q, 3, 3), Err(Error::InteriorExhausted(_))));
    }

    #[test]
    fn expansion_p_zero() {
        let q = QParam::exact(1, 2);
        let s = canonical_exact(&q, 8);
        let f = FamilyVector::new(IndexWindow::new(1, 3), vec![Complex64::new(1.0, 2.0); 3]).unwrap();
        let x = norm_expansion(&s, &q, &[f], 0).unwrap();
        assert!((x.lhs.re - 15.0).abs() < 1e-12 && (x.rhs - 15.0).abs() < 1e-12);
        assert!(x.residual < 1e-12);
    }

    #[test]
    fn expansion_p_one_basis_family() {
        let q = QParam::exact(1, 2);
        let s = canonical_exact(&q, 12);
        let x = norm_expansion(&s, &q, &[FamilyVector::basis(0), FamilyVector::basis(1)], 1).unwrap();
        assert!(x.residual < 1e-12, "{x:?}");
        // ||e_0||^2 + <e_1, S e_0> + <S e_0, e_1> + ||S e_1||^2 with ||S e_1||^2 = [2]_q
        assert!((x.lhs.re - 4.5).abs() < 1e-12, "{x:?}");
    }

    #[test]
    fn expansion_p_two_random_family() {
        let q = QParam::exact(2, 1);
        let s = canonical_float(2.0, 24);
        let family = random_family(3, IndexWindow::new(0, 5), DEFAULT_SEED);
        let x = norm_expansion(&s, &q, &family, 2).unwrap();
        assert!(x.residual < 1e-10, "{x:?}");
    }

    #[test]
    fn expansion_refuses_negative_commutator() {
        let q = QParam::exact(-1, 2);
        let s = canonical_exact(&q, 10);
        let family = random_family(2, IndexWindow::new(0, 3), 1);
        assert!(matches!(norm_expansion(&s, &q, &family, 1), Err(Error::NegativeCommutator(_))));
    }

    #[test]
    fn expansion_checks_support_margin() {
        let q = QParam::exact(1, 2);
        let s = canonical_exact(&q, 6);
        let family = vec![FamilyVector::basis(0), FamilyVector::basis(4)];
        assert!(matches!(norm_expansion(&s, &q, &family, 1), Err(Error::InteriorExhausted(_))));
    }

    #[test]
    fn commutator_root_by_eigendecomposition() {
        let q = QParam::float(0.25);
        let s: TruncatedOperator<Complex64> =
            normal_solution(&QParam::float(0.5), 4, UnitarySpec::SeededRandom { seed: 3 }).unwrap();
        // at q = 0.25 this S does not solve the relation; C = I - 0.75 * 2 I = -0.5 I
        assert!(matches!(commutator_root(&s, &q), Err(Error::NegativeCommutator(_))));
        let root = commutator_root(&s, &QParam::float(0.5)).unwrap();
        assert!(root.frobenius_norm() < 1e-6);
        let q = QParam::float(0.9);
        let w = conjugated_canonical(0.9, 6);
        let c = selfcommutator(&w, &q).unwrap();
        let r = commutator_root(&w, &q).unwrap();
        let interior = w.interior();
        let n = interior.len();
        let sq = r.matmul(&r).principal(0, n);
        assert!(sq.sub(&c.entries().principal(0, n)).frobenius_norm() < 1e-12);
    }

    // canonical shift conjugated by a random unitary, so C is no longer diagonal
    fn conjugated_canonical(q: f64, d: usize) -> TruncatedOperator<Complex64> {
        let s = canonical_float(q, d);
        let u = crate::shiftops::random_unitary(d, 7);
        let m = u.matmul(s.entries()).matmul(&u.adjoint());
        TruncatedOperator::new(m, 0, IndexWindow::new(0, d as i64 - 1), "USU*").unwrap()
    }

    #[test]
    fn form_p_zero_is_identity() {
        let q = QParam::exact(1, 2);
        let h = halmos_bram_form(&canonical_exact(&q, 10), 0, 5).unwrap();
        assert_eq!(h.entries, Matrix::identity(5));
        assert!((h.min_eigenvalue() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn form_is_positive_for_nonnegative_commutator() {
        for q in [0.5, 2.0] {
            let h = halmos_bram_form(&canonical_float(q, 24), 2, 6).unwrap();
            assert!(h.is_hermitian());
            assert!(h.min_eigenvalue() >= -1e-10, "q = {q}: {}", h.min_eigenvalue());
        }
        let q = QParam::exact(1, 2);
        let h = halmos_bram_form(&canonical_exact(&q, 24), 2, 6).unwrap();
        assert!(h.is_hermitian());
        assert!(h.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn form_value_matches_norm_expansion() {
        let q = QParam::exact(2, 1);
        let s = canonical_float(2.0, 24);
        let family = random_family(3, IndexWindow::new(0, 5), 11);
        let h = halmos_bram_form(&s, 2, 6).unwrap();
        let c: Vec<Complex64> = family.iter().flat_map(|f| f.coefficients.clone()).collect();
        let value = h.evaluate(&c);
        let x = norm_expansion(&s, &q, &family, 2).unwrap();
        assert!((value - x.lhs).norm() <= 2.0 * 1e-10 * x.rhs.max(1.0));
        assert!((value.re - x.rhs).abs() <= 2.0 * 1e-10 * x.rhs.max(1.0));
    }

    #[test]
    fn form_needs_room() {
        let q = QParam::exact(1, 2);
        assert!(matches!(
            halmos_bram_form(&canonical_exact(&q, 6), 2, 6),
            Err(Error::InteriorExhausted(_))
        ));
    }
}
