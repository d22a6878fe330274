//! Moment side of the model: kernel coefficients `1/[n]_q!`, the Hankel
//! test for Stieltjes sequences, Gauss quadrature from moments, the radial
//! lift of a measure on `[0, inf)` to the plane, and the operators
//! `M f = z f`, `D_q` on polynomials.
//!
//! Moments are taken in `t = r^2`: `b_n = [n]_q!` is the sequence whose
//! Stieltjes representation gives the radial measure.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::qcalc::{basic, factorial, QParam, Regime};
use crate::scalar::{Real, Scalar, Value};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelCoefficients<R> {
    /// `c_n = 1 / [n]_q!`
    pub coefficients: Vec<R>,
    /// `(1-q)^-1` for `0 < q < 1`, `None` (infinite radius) for `q >= 1`.
    pub radius_squared: Option<R>,
}

impl<R: Real> KernelCoefficients<R> {
    pub fn radius(&self) -> f64 {
        self.radius_squared.as_ref().map_or(f64::INFINITY, |r| r.to_f64().sqrt())
    }
}

pub fn kernel_coefficients<R: Real>(q: &QParam, n_max: usize) -> Result<KernelCoefficients<R>> {
    if !matches!(q.regime(), Regime::ZeroToOne | Regime::One | Regime::AboveOne) {
        return Err(Error::InvalidParameter(format!("kernel coefficients need q > 0, got {q}")));
    }
    let qr: R = q.real()?;
    let mut coefficients = Vec::with_capacity(n_max + 1);
    let mut fact = R::one();
    for n in 0..=n_max as u64 {
        if n > 0 {
            fact = fact * basic(n, &qr);
        }
        coefficients.push(R::one() / fact.clone());
    }
    let radius_squared = (q.regime() == Regime::ZeroToOne).then(|| R::one() / (R::one() - qr));
    Ok(KernelCoefficients { coefficients, radius_squared })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum MomentProvenance {
    QFactorial { q: Value },
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence<R> {
    values: Vec<R>,
    provenance: MomentProvenance,
}

impl<R: Real> MomentSequence<R> {
    pub fn new(values: Vec<R>) -> Result<Self> {
        match values.first() {
            Some(b0) if *b0 > R::zero() => {}
            _ => return Err(Error::InvalidParameter("b_0 must be positive".into())),
        }
        Ok(MomentSequence { values, provenance: MomentProvenance::Custom })
    }

    /// `b_n = [n]_q!` for `n = 0..=n_max`.
    pub fn q_factorial(q: &QParam, n_max: usize) -> Result<Self> {
        let qr: R = q.real()?;
        let values = (0..=n_max as u64).map(|n| factorial(n, &qr)).collect();
        Ok(MomentSequence { values, provenance: MomentProvenance::QFactorial { q: q.value().clone() } })
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn provenance(&self) -> &MomentProvenance {
        &self.provenance
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }
}

/// Determinant by Gaussian elimination, choosing the largest available pivot.
pub fn determinant<R: Real>(mut a: Vec<Vec<R>>) -> R {
    let n = a.len();
    let mut det = R::one();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap_or(std::cmp::Ordering::Equal));
        let Some(p) = pivot else { return R::zero() };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pv = a[col][col].clone();
        det = det * pv.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / pv.clone();
            for c in col..n {
                let v = a[col][c].clone() * factor.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
    }
    det
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HankelForm {
    /// `[b_(i+j)]`
    Plain,
    /// `[b_(i+j+1)]`
    Shifted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HankelReport<R> {
    /// Leading principal minors of sizes `1..=max_size`.
    pub plain_minors: Vec<R>,
    pub shifted_minors: Vec<R>,
    /// Every leading minor of `[b_(i+j)]` is positive.
    pub plain_positive: bool,
    pub shifted_positive: bool,
    /// `(form, size)` of each vanishing minor.
    pub zero_minors: Vec<(HankelForm, usize)>,
}

impl<R> HankelReport<R> {
    pub fn passes(&self) -> bool {
        self.plain_positive && self.shifted_positive
    }
}

pub fn hankel_psd_check<R: Real>(b: &MomentSequence<R>, max_size: usize) -> Result<HankelReport<R>> {
    if max_size == 0 {
        return Err(Error::InvalidParameter("max_size must be positive".into()));
    }
    if 2 * max_size - 1 > b.n_max() {
        return Err(Error::DimensionMismatch(format!(
            "Hankel size {max_size} needs b_0..b_{}, have b_0..b_{}",
            2 * max_size - 1,
            b.n_max()
        )));
    }
    let v = b.values();
    let minors = |shift: usize| -> Vec<R> {
        (1..=max_size)
            .map(|k| determinant((0..k).map(|i| (0..k).map(|j| v[i + j + shift].clone()).collect()).collect()))
            .collect()
    };
    let plain_minors = minors(0);
    let shifted_minors = minors(1);
    let mut zero_minors = Vec::new();
    for (form, ms) in [(HankelForm::Plain, &plain_minors), (HankelForm::Shifted, &shifted_minors)] {
        for (k, m) in ms.iter().enumerate() {
            if m.is_zero() {
                zero_minors.push((form, k + 1));
            }
        }
    }
    Ok(HankelReport {
        plain_positive: plain_minors.iter().all(|m| *m > R::zero()),
        shifted_positive: shifted_minors.iter().all(|m| *m > R::zero()),
        plain_minors,
        shifted_minors,
        zero_minors,
    })
}

/// Finitely supported measure on `[0, inf)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    nodes: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(nodes: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if nodes.len() != masses.len() || nodes.is_empty() {
            return Err(Error::DimensionMismatch(format!("{} nodes and {} masses", nodes.len(), masses.len())));
        }
        if nodes.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidParameter("nodes must be nonnegative".into()));
        }
        if masses.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("masses must be positive".into()));
        }
        if nodes.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidParameter("nodes must be strictly increasing".into()));
        }
        Ok(DiscreteMeasure { nodes, masses })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i x_i^k`
    pub fn moment(&self, k: u32) -> f64 {
        self.nodes.iter().zip(&self.masses).map(|(x, w)| w * f64::powi(*x, k as i32)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quadrature {
    pub measure: DiscreteMeasure,
    pub requested: usize,
    /// The Hankel matrix degenerated: fewer atoms than requested reproduce
    /// the moments.
    pub degenerate: bool,
}

/// Recurrence coefficients `(alpha_k, beta_k)` of the monic orthogonal
/// polynomials of `b` by the Chebyshev algorithm, in exact arithmetic for
/// rational input. Stops early when the Hankel matrix degenerates.
pub fn recurrence_coefficients<R: Real>(b: &[R], n: usize) -> Result<(Vec<R>, Vec<R>)> {
    if b.len() < 2 * n {
        return Err(Error::DimensionMismatch(format!("{n} nodes need {} moments, have {}", 2 * n, b.len())));
    }
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut prev: Vec<R> = vec![R::zero(); 2 * n];
    let mut cur: Vec<R> = b[..2 * n].to_vec();
    alpha.push(cur[1].clone() / cur[0].clone());
    beta.push(cur[0].clone());
    for k in 1..n {
        let mut next = vec![R::zero(); 2 * n];
        for l in k..2 * n - k {
            next[l] = cur[l + 1].clone() - alpha[k - 1].clone() * cur[l].clone() - beta[k - 1].clone() * prev[l].clone();
        }
        if next[k].is_zero() || (!R::EXACT && next[k].abs().to_f64() <= 1e-14 * cur[k - 1].abs().to_f64()) {
            break;
        }
        let b_k = next[k].clone() / cur[k - 1].clone();
        if b_k < R::zero() {
            return Err(Error::NotStieltjes(format!("recurrence coefficient beta_{k} = {:e} is negative", b_k.to_f64())));
        }
        alpha.push(next[k + 1].clone() / next[k].clone() - cur[k].clone() / cur[k - 1].clone());
        beta.push(b_k);
        prev = cur;
        cur = next;
    }
    Ok((alpha, beta))
}

/// `n_nodes`-point Gauss rule on `[0, inf)` matching `b_0..b_(2 n_nodes - 1)`:
/// nodes are the eigenvalues of the Jacobi matrix, masses `b_0 v_0^2`.
pub fn quadrature_from_moments<R: Real>(b: &MomentSequence<R>, n_nodes: usize) -> Result<Quadrature> {
    if n_nodes == 0 {
        return Err(Error::InvalidParameter("n_nodes must be positive".into()));
    }
    // floats are dyadic rationals, so the recurrence always runs exactly
    let exact: Vec<BigRational> = b
        .values()
        .iter()
        .map(|v| match v.to_value() {
            Value::Rational(r) => Ok(r),
            Value::Float(x) => {
                BigRational::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("moment {x} is not finite")))
            }
        })
        .collect::<Result<_>>()?;
    let (alpha, beta) = recurrence_coefficients(&exact, n_nodes)?;
    let n = alpha.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        j[(k, k)] = alpha[k].to_f64();
        if k + 1 < n {
            let off = beta[k + 1].to_f64().sqrt();
            j[(k, k + 1)] = off;
            j[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(j);
    let b0 = beta[0].to_f64();
    let scale = eig.eigenvalues.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(n);
    for (i, &x) in eig.eigenvalues.iter().enumerate() {
        if x < -1e-12 * scale {
            return Err(Error::NotStieltjes(format!("quadrature node {x} is negative")));
        }
        let v0 = eig.eigenvectors[(0, i)];
        atoms.push((x.max(0.0), b0 * v0 * v0));
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, masses) = atoms.into_iter().unzip();
    Ok(Quadrature { measure: DiscreteMeasure::new(nodes, masses)?, requested: n_nodes, degenerate: n < n_nodes })
}

/// Largest `|moment_k - b_k| / max(1, |b_k|)` over `k < count`.
pub fn moment_mismatch<R: Real>(measure: &DiscreteMeasure, b: &MomentSequence<R>, count: usize) -> f64 {
    b.values()
        .iter()
        .take(count)
        .enumerate()
        .map(|(k, bk)| {
            let target = bk.to_f64();
            (measure.moment(k as u32) - target).abs() / target.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Rotation-invariant planar measure: radial nodes `r_i` with masses spread
/// over `angular_points` equally spaced angles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialMeasure {
    pub radial: DiscreteMeasure,
    pub angular_points: usize,
}

impl RadialMeasure {
    pub fn new(radial: DiscreteMeasure, angular_points: usize) -> Result<Self> {
        if angular_points == 0 {
            return Err(Error::InvalidParameter("angular_points must be at least 1".into()));
        }
        Ok(RadialMeasure { radial, angular_points })
    }

    /// Lift of a measure in `t = r^2`.
    pub fn from_squared_radius(measure: &DiscreteMeasure, angular_points: usize) -> Result<Self> {
        let nodes = measure.nodes().iter().map(|t| t.sqrt()).collect();
        Self::new(DiscreteMeasure::new(nodes, measure.masses().to_vec())?, angular_points)
    }

    /// `(1/A) sum_a exp(i k 2 pi a / A)`: 1 when `A` divides `k`, else 0.
    pub fn angular_average(&self, k: i64) -> f64 {
        if k.rem_euclid(self.angular_points as i64) == 0 {
            1.0
        } else {
            0.0
        }
    }

    /// `<Z^m, Z^n>` in `L^2` of the planar measure.
    pub fn monomial_inner(&self, m: usize, n: usize) -> f64 {
        let avg = self.angular_average(m as i64 - n as i64);
        if avg == 0.0 {
            return 0.0;
        }
        avg * self.radial.moment((m + n) as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftReport {
    /// `max |<Z^m, Z^n> - delta_mn [m]_q!|`, relative to `max(1, [m]_q!)` on the diagonal.
    pub deviation: f64,
    pub max_off_diagonal: f64,
    pub gram: Vec<Vec<f64>>,
}

pub fn radial_lift_verify(q: &QParam, radial: &RadialMeasure, n_max: usize) -> Result<LiftReport> {
    let needed = 2 * n_max + 1;
    if radial.angular_points < needed {
        return Err(Error::InsufficientAngularPoints { needed, got: radial.angular_points });
    }
    let qf = q.to_f64();
    let mut gram = vec![vec![0.0; n_max + 1]; n_max + 1];
    let mut deviation = 0.0f64;
    let mut off = 0.0f64;
    for m in 0..=n_max {
        for n in 0..=n_max {
            let g = radial.monomial_inner(m, n);
            gram[m][n] = g;
            if m == n {
                let target = factorial(m as u64, &qf);
                deviation = deviation.max((g - target).abs() / target.abs().max(1.0));
            } else {
                off = off.max(g.abs());
                deviation = deviation.max(g.abs());
            }
        }
    }
    Ok(LiftReport { deviation, max_off_diagonal: off, gram })
}

/// Polynomial in the monomial basis, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    coefficients: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(mut coefficients: Vec<T>) -> Self {
        while coefficients.last().is_some_and(Scalar::is_zero) {
            coefficients.pop();
        }
        Polynomial { coefficients }
    }

    pub fn zero() -> Self {
        Polynomial { coefficients: Vec::new() }
    }

    pub fn monomial(n: usize) -> Self {
        let mut c = vec![T::zero(); n + 1];
        c[n] = T::one();
        Polynomial { coefficients: c }
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn coefficient(&self, n: usize) -> T {
        self.coefficients.get(n).cloned().unwrap_or_else(T::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `M f = z f`
    pub fn times_z(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut c = vec![T::zero()];
        c.extend(self.coefficients.iter().cloned());
        Polynomial { coefficients: c }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coefficients.len().max(other.coefficients.len());
        Self::new((0..n).map(|k| self.coefficient(k) - other.coefficient(k)).collect())
    }

    pub fn scale(&self, r: &T::Real) -> Self {
        Self::new(self.coefficients.iter().map(|c| c.scale(r)).collect())
    }

    /// Largest coefficient modulus; exact zero stays `0.0`, an exact nonzero
    /// is never reported as `0.0`.
    pub fn max_abs(&self) -> f64 {
        let m = self.coefficients.iter().map(|c| c.to_c64().norm()).fold(0.0, f64::max);
        if m == 0.0 && !self.is_zero() {
            f64::MIN_POSITIVE
        } else {
            m
        }
    }
}

/// `(f(z) - f(qz)) / (z - qz)`, i.e. `c_n z^n -> [n]_q c_n z^(n-1)`; the
/// derivative at `q = 1`.
pub fn dq_apply<T: Scalar>(f: &Polynomial<T>, q: &QParam) -> Result<Polynomial<T>> {
    let qr: T::Real = q.real()?;
    let c = f.coefficients();
    Ok(Polynomial::new((1..c.len()).map(|n| c[n].scale(&basic(n as u64, &qr))).collect()))
}

/// `max_n ||(D_q M - q M D_q) Z^n - Z^n||` over `n <= n_max`, coefficientwise.
pub fn poly_ccr_residual<T: Scalar>(q: &QParam, n_max: usize) -> Result<f64> {
    let qr: T::Real = q.real()?;
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        let f = Polynomial::<T>::monomial(n);
        let left = dq_apply(&f.times_z(), q)?;
        let right = dq_apply(&f, q)?.times_z().scale(&qr);
        worst = worst.max(left.sub(&right).sub(&f).max_abs());
    }
    Ok(worst)
}

/// `<f, g> = sum_n f_n conj(g_n) [n]_q!`
pub fn gram_inner<T: Scalar>(f: &Polynomial<T>, g: &Polynomial<T>, q: &T::Real) -> T {
    let n = f.coefficients().len().min(g.coefficients().len());
    (0..n).fold(T::zero(), |acc, k| {
        let (a, b) = (f.coefficient(k), g.coefficient(k));
        if a.is_zero() || b.is_zero() {
            acc
        } else {
            acc + (a * b.conj()).scale(&factorial(k as u64, q))
        }
    })
}

/// `max_(a,b <= n_max) |<M Z^a, Z^b> - <Z^a, D_q Z^b>|`.
pub fn adjointness_check<T: Scalar>(q: &QParam, n_max: usize) -> Result<f64> {
    if !matches!(q.regime(), Regime::ZeroToOne | Regime::One | Regime::AboveOne) {
        return Err(Error::InvalidParameter(format!("adjointness needs q > 0, got {q}")));
    }
    let qr: T::Real = q.real()?;
    let mut worst = 0.0f64;
    for a in 0..=n_max {
        let za = Polynomial::<T>::monomial(a);
        for b in 0..=n_max {
            let zb = Polynomial::<T>::monomial(b);
            let diff = gram_inner(&za.times_z(), &zb, &qr) - gram_inner(&za, &dq_apply(&zb, q)?, &qr);
            let mut v = diff.to_c64().norm();
            if v == 0.0 && !diff.is_zero() {
                v = f64::MIN_POSITIVE;
            }
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// Gram matrix `<Z^m, Z^n> = delta_mn [m]_q!` on monomials of degree `<= n_max`.
pub fn monomial_gram<T: Scalar>(q: &QParam, n_max: usize) -> Result<Matrix<T>> {
    let qr: T::Real = q.real()?;
    Ok(Matrix::from_diagonal((0..=n_max as u64).map(|m| T::from_real(&factorial(m, &qr))).collect()))
}

impl From<&LiftReport> for Matrix<Complex64> {
    fn from(r: &LiftReport) -> Self {
        let n = r.gram.len();
        Matrix::from_fn(n, n, |i, j| Complex64::new(r.gram[i][j], 0.0))
    }
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;

    use super::*;
    use crate::surd::Surd;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| rat(x, 1)).collect()
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_coefficients::<BigRational>(&QParam::exact(1, 1), 5).unwrap();
        let fact = [1, 1, 2, 6, 24, 120];
        for (c, f) in k.coefficients.iter().zip(fact) {
            assert_eq!(*c, rat(1, f));
        }
        assert!(k.radius().is_infinite());

        let k = kernel_coefficients::<BigRational>(&QParam::exact(1, 2), 2).unwrap();
        assert_eq!(k.coefficients, vec![rat(1, 1), rat(1, 1), rat(2, 3)]);
        assert_eq!(k.radius_squared, Some(rat(2, 1)));
        assert!((k.radius() - 2f64.sqrt()).abs() < 1e-15);

        assert!(kernel_coefficients::<BigRational>(&QParam::exact(0, 1), 2).is_err());
        assert!(kernel_coefficients::<BigRational>(&QParam::exact(-1, 2), 2).is_err());
    }

    #[test]
    fn hankel_examples() {
        let b = MomentSequence::<BigRational>::q_factorial(&QParam::exact(1, 1), 3).unwrap();
        let h = hankel_psd_check(&b, 2).unwrap();
        assert_eq!(h.plain_minors, vec![rat(1, 1), rat(1, 1)]);
        assert!(h.passes());

        let b = MomentSequence::<BigRational>::q_factorial(&QParam::exact(1, 2), 5).unwrap();
        let h = hankel_psd_check(&b, 3).unwrap();
        assert!(h.passes());
        assert!(h.zero_minors.is_empty());

        // H_0 = I here; the failure is in the shifted form
        let b = MomentSequence::new(ints(&[1, 0, 1, 0])).unwrap();
        let h = hankel_psd_check(&b, 2).unwrap();
        assert!(h.plain_positive);
        assert!(!h.shifted_positive);
        assert_eq!(h.shifted_minors, vec![rat(0, 1), rat(-1, 1)]);
        assert_eq!(h.zero_minors, vec![(HankelForm::Shifted, 1)]);

        assert!(hankel_psd_check(&b, 3).is_err());
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = vec![ints(&[2, -1, 3]), ints(&[0, 4, 1]), ints(&[5, 2, -2])];
        // 2(4*-2 - 1*2) + 1(0*-2 - 1*5) + 3(0*2 - 4*5)
        assert_eq!(determinant(m), rat(-20 - 5 - 60, 1));
        assert_eq!(determinant(vec![ints(&[0, 1]), ints(&[1, 0])]), rat(-1, 1));
    }

    #[test]
    fn single_atom_recovery() {
        let b = MomentSequence::new((0..4).map(|n| rat(3 * (1 << n), 1)).collect()).unwrap();
        let quad = quadrature_from_moments(&b, 1).unwrap();
        assert_eq!(quad.measure.nodes(), &[2.0]);
        assert_eq!(quad.measure.masses(), &[3.0]);

        // asking for two atoms degenerates back to one
        let quad = quadrature_from_moments(&b, 2).unwrap();
        assert!(quad.degenerate);
        assert_eq!(quad.measure.len(), 1);
    }

    #[test]
    fn factorial_moments() {
        let b = MomentSequence::<BigRational>::q_factorial(&QParam::exact(1, 1), 5).unwrap();
        let quad = quadrature_from_moments(&b, 3).unwrap();
        assert!(moment_mismatch(&quad.measure, &b, 6) < 1e-10);
        // Gauss-Laguerre nodes for n = 3
        let expected = [0.4157745567834791, 2.294280360279042, 6.2899450829374794];
        for (x, e) in quad.measure.nodes().iter().zip(expected) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn q_half_support_is_bounded() {
        let b = MomentSequence::<BigRational>::q_factorial(&QParam::exact(1, 2), 7).unwrap();
        let quad = quadrature_from_moments(&b, 4).unwrap();
        assert!(moment_mismatch(&quad.measure, &b, 8) < 1e-10);
        assert!(quad.measure.nodes().iter().all(|x| *x >= 0.0 && *x <= 2.0 + 1e-9));
    }

    #[test]
    fn non_stieltjes_input_is_rejected() {
        // moments of an atom at -1
        let b = MomentSequence::new(ints(&[1, -1, 1, -1])).unwrap();
        assert!(matches!(quadrature_from_moments(&b, 1), Err(Error::NotStieltjes(_))));
        let b = MomentSequence::new(ints(&[1, 0, 1, 0, 1, 0])).unwrap();
        assert!(quadrature_from_moments(&b, 2).is_err());
    }

    #[test]
    fn radial_lift() {
        for q in [QParam::exact(1, 1), QParam::exact(1, 2)] {
            let b = MomentSequence::<BigRational>::q_factorial(&q, 11).unwrap();
            let quad = quadrature_from_moments(&b, 6).unwrap();
            let radial = RadialMeasure::from_squared_radius(&quad.measure, 11).unwrap();
            let r = radial_lift_verify(&q, &radial, 5).unwrap();
            assert_eq!(r.max_off_diagonal, 0.0);
            assert!(r.deviation < 1e-9, "q = {q}: {}", r.deviation);
        }
        let b = MomentSequence::<BigRational>::q_factorial(&QParam::exact(1, 2), 11).unwrap();
        let quad = quadrature_from_moments(&b, 6).unwrap();
        let radial = RadialMeasure::from_squared_radius(&quad.measure, 10).unwrap();
        assert!(matches!(
            radial_lift_verify(&QParam::exact(1, 2), &radial, 5),
            Err(Error::InsufficientAngularPoints { needed: 11, got: 10 })
        ));
    }

    #[test]
    fn angular_average_is_a_sum_of_roots_of_unity() {
        let radial = RadialMeasure::new(DiscreteMeasure::new(vec![1.0], vec![1.0]).unwrap(), 7).unwrap();
        for k in -14i64..=14 {
            let direct: Complex64 = (0..7)
                .map(|a| Complex64::from_polar(1.0, k as f64 * 2.0 * std::f64::consts::PI * a as f64 / 7.0))
                .sum::<Complex64>()
                / 7.0;
            assert!((direct - radial.angular_average(k)).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn dq_examples() {
        let f = Polynomial::<Surd>::monomial(3);
        let g = dq_apply(&f, &QParam::exact(2, 1)).unwrap();
        assert_eq!(g.coefficients(), &[Surd::zero(), Surd::zero(), Surd::from_integer(7)]);
        let c = Polynomial::new(vec![Surd::from_integer(5)]);
        assert!(dq_apply(&c, &QParam::exact(3, 1)).unwrap().is_zero());
        let g = dq_apply(&Polynomial::<Surd>::monomial(2), &QParam::exact(1, 1)).unwrap();
        assert_eq!(g, Polynomial::new(vec![Surd::zero(), Surd::from_integer(2)]));
    }

    #[test]
    fn dq_is_the_difference_quotient() {
        let q = 0.3;
        let f = Polynomial::new(vec![
            Complex64::new(1.0, 0.5),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.0, 3.0),
            Complex64::new(0.25, 0.0),
        ]);
        let eval = |p: &Polynomial<Complex64>, z: Complex64| {
            p.coefficients().iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
        };
        let g = dq_apply(&f, &QParam::float(q)).unwrap();
        let z = Complex64::new(0.7, -0.4);
        let quotient = (eval(&f, z) - eval(&f, z * q)) / (z - z * q);
        assert!((quotient - eval(&g, z)).norm() < 1e-14);
    }

    #[test]
    fn commutation_and_adjointness_are_exact() {
        for q in [QParam::exact(1, 2), QParam::exact(1, 1), QParam::exact(3, 1)] {
            assert_eq!(poly_ccr_residual::<Surd>(&q, 12).unwrap(), 0.0);
            assert_eq!(adjointness_check::<Surd>(&q, 12).unwrap(), 0.0);
        }
        assert!(poly_ccr_residual::<Complex64>(&QParam::float(0.7), 12).unwrap() < 1e-12);
    }

    #[test]
    fn adjointness_examples() {
        let q = QParam::exact(1, 2);
        let qr = rat(1, 2);
        let z0 = Polynomial::<Surd>::monomial(0);
        let z1 = Polynomial::<Surd>::monomial(1);
        assert_eq!(gram_inner(&z0.times_z(), &z1, &qr), Surd::one());
        assert_eq!(gram_inner(&z0, &dq_apply(&z1, &q).unwrap(), &qr), Surd::one());

        let z2 = Polynomial::<Surd>::monomial(2);
        assert!(gram_inner(&z2.times_z(), &z2, &qr).is_zero());
        assert!(gram_inner(&z2, &dq_apply(&z2, &q).unwrap(), &qr).is_zero());

        let q = QParam::exact(2, 1);
        let qr = rat(2, 1);
        let z3 = Polynomial::<Surd>::monomial(3);
        let z4 = Polynomial::<Surd>::monomial(4);
        // [4]_2! = 1 * 3 * 7 * 15
        assert_eq!(gram_inner(&z3.times_z(), &z4, &qr), Surd::from_integer(315));
        assert_eq!(gram_inner(&z3, &dq_apply(&z4, &q).unwrap(), &qr), Surd::from_integer(315));
    }

    #[test]
    fn kernel_times_factorial_is_one() {
        for q in [QParam::exact(1, 3), QParam::exact(5, 2)] {
            let k = kernel_coefficients::<BigRational>(&q, 10).unwrap();
            let qr: BigRational = q.real().unwrap();
            for (n, c) in k.coefficients.iter().enumerate() {
                assert_eq!(c.clone() * factorial(n as u64, &qr), rat(1, 1));
            }
        }
    }
}
