//! Truncated solutions of `S*S - qSS* = I` and the measurements made on them.
//!
//! A truncated shift of size `d` satisfies the relation only away from the
//! truncation edge; every residual here is taken over the operator's interior
//! window and the excluded indices are reported alongside.

mod operator;
mod weights;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{vec_norm, Matrix};
use crate::qcalc::{QParam, Regime};
use crate::scalar::{Real, Scalar};

pub use operator::{IndexWindow, Residual, TruncatedOperator};
pub use weights::{
    bilateral_commutator_diagonal, bilateral_weights, canonical_weights, Direction, Provenance, ShiftKind,
    WeightSequence,
};

/// Seed used for random unitaries and random witness vectors unless overridden.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// Matrix of the weighted shift on the first `d` indices of `w`.
pub fn build_shift<T: Scalar>(w: &WeightSequence<T::Real>, d: usize) -> Result<TruncatedOperator<T>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if d > w.len() {
        return Err(Error::DimensionMismatch(format!("d = {d} exceeds the {} available weights", w.len())));
    }
    let mut m = Matrix::zeros(d, d);
    let ws = w.squared_weights();
    match w.direction() {
        Direction::Forward => {
            for i in 0..d - 1 {
                m.set(i + 1, i, T::sqrt_of(&ws[i])?);
            }
        }
        Direction::Backward => {
            for i in 1..d {
                m.set(i - 1, i, T::sqrt_of(&ws[i])?);
            }
        }
    }
    let low = w.index_low();
    let top = low + d as i64 - 2;
    let interior = match w.kind() {
        ShiftKind::Unilateral => IndexWindow::new(low, top),
        // the weight into the lowest index is cut off as well
        ShiftKind::Bilateral => IndexWindow::new(low + 1, top),
    };
    let label = match w.direction() {
        Direction::Forward => "S",
        Direction::Backward => "T",
    };
    Ok(TruncatedOperator::new(m, low, interior, label)?.with_provenance(provenance_label(w.provenance())))
}

fn provenance_label(p: &Provenance) -> String {
    match p {
        Provenance::Canonical { q } => format!("canonical(q={q})"),
        Provenance::Bilateral { q, alpha, shift } => format!("bilateral(q={q}, alpha={alpha}, N={shift})"),
        Provenance::Schmudgen { description } => description.clone(),
        Provenance::Extracted { from } => format!("extracted({from})"),
        Provenance::Custom => "custom".into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "unitary")]
pub enum UnitarySpec {
    Identity,
    CyclicShift,
    SeededRandom { seed: u64 },
}

/// Haar-like random unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn random_unitary(d: usize, seed: u64) -> Matrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Matrix::from_nalgebra(&q)
}

pub fn unitary<T: Scalar>(d: usize, spec: UnitarySpec) -> Result<Matrix<T>> {
    Ok(match spec {
        UnitarySpec::Identity => Matrix::identity(d),
        UnitarySpec::CyclicShift => {
            let mut m = Matrix::zeros(d, d);
            for i in 0..d {
                m.set((i + 1) % d, i, T::one());
            }
            m
        }
        UnitarySpec::SeededRandom { seed } => {
            let u = random_unitary(d, seed);
            let mut m = Matrix::zeros(d, d);
            for r in 0..d {
                for c in 0..d {
                    let v = T::from_c64(*u.get(r, c)).ok_or_else(|| {
                        Error::ExactUnavailable("a seeded random unitary needs float mode".into())
                    })?;
                    m.set(r, c, v);
                }
            }
            m
        }
    })
}

/// `(1-q)^(-1/2) U`, the normal solutions for `q < 1`.
pub fn normal_solution<T: Scalar>(q: &QParam, d: usize, spec: UnitarySpec) -> Result<TruncatedOperator<T>> {
    if matches!(q.regime(), Regime::One | Regime::AboveOne) {
        return Err(Error::NoNormalSolution(q.to_string()));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let qr: T::Real = q.real()?;
    let one = <T::Real as Real>::one();
    let scale = T::sqrt_of(&(one.clone() / (one - qr)))?;
    let u = unitary::<T>(d, spec)?;
    let m = u.scale(&scale);
    let provenance = match spec {
        UnitarySpec::SeededRandom { seed } => format!("normal(q={q}, unitary=random, seed={seed})"),
        UnitarySpec::Identity => format!("normal(q={q}, unitary=identity)"),
        UnitarySpec::CyclicShift => format!("normal(q={q}, unitary=cyclic)"),
    };
    Ok(TruncatedOperator::new(m, 0, IndexWindow::new(0, d as i64 - 1), "S")?.with_provenance(provenance))
}

/// `C = I + (q-1) S S*`.
pub fn selfcommutator<T: Scalar>(s: &TruncatedOperator<T>, q: &QParam) -> Result<TruncatedOperator<T>> {
    let qr: T::Real = q.real()?;
    let qm1 = qr - <T::Real as Real>::one();
    let sss = s.entries().matmul(&s.entries().adjoint());
    let c = Matrix::identity(s.dim()).add(&sss.scale_real(&qm1));
    s.with_entries(c, "C")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSuite {
    /// `max ||(S*S - qSS* - I) e_n||`. Equals the residual of
    /// `S*S - SS* = C`, which is the same matrix identity.
    pub oq_residual: Residual,
    /// `max ||(CS - qSC) e_n||`
    pub qcomm_left: Residual,
    /// `max ||(qCS* - S*C) e_n||`
    pub qcomm_right: Residual,
    /// Basis indices of the matrix left out of the interior.
    pub excluded: Vec<i64>,
}

impl ResidualSuite {
    pub fn max(&self) -> f64 {
        self.oq_residual.value.max(self.qcomm_left.value).max(self.qcomm_right.value)
    }
}

pub fn residual_suite<T: Scalar>(s: &TruncatedOperator<T>, q: &QParam) -> Result<ResidualSuite> {
    let qr: T::Real = q.real()?;
    let sm = s.entries();
    let sa = sm.adjoint();
    let c = selfcommutator(s, q)?;
    let cm = c.entries();
    let d = s.dim();

    let ss_star = sm.matmul(&sa);
    let oq = sa.matmul(sm).sub(&ss_star.scale_real(&qr)).sub(&Matrix::identity(d));
    let left = cm.matmul(sm).sub(&sm.matmul(cm).scale_real(&qr));
    let right = cm.matmul(&sa).scale_real(&qr).sub(&sa.matmul(cm));

    let interior = s.interior();
    let origin = s.index_origin();
    // qCS* e_n reads C e_{n-1}; below a truncated lower edge that column of C is lost
    let mut right_cols = interior;
    if interior.lo > s.range().lo {
        right_cols.lo += 1;
    }
    let excluded = s.range().iter().filter(|n| !interior.contains(*n)).collect();
    Ok(ResidualSuite {
        oq_residual: Residual::of_columns(&oq, origin, interior),
        qcomm_left: Residual::of_columns(&left, origin, interior),
        qcomm_right: Residual::of_columns(&right, origin, right_cols),
        excluded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "witness")]
pub enum Witness {
    /// `||S* e_n||^2 - ||S e_n||^2 = margin > 0`
    Basis { index: i64, margin: f64, exact: bool },
    /// A random interior vector with `||S* f||^2 - ||S f||^2 = margin > 0`.
    Vector { coefficients: Vec<Complex64>, support: IndexWindow, margin: f64 },
}

impl Witness {
    pub fn margin(&self) -> f64 {
        match self {
            Witness::Basis { margin, .. } | Witness::Vector { margin, .. } => *margin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessSearch {
    pub seed: u64,
    pub samples: usize,
}

impl Default for WitnessSearch {
    fn default() -> Self {
        WitnessSearch { seed: DEFAULT_SEED, samples: 64 }
    }
}

fn squared_norm<T: Scalar>(v: &[T]) -> Option<T::Real> {
    v.iter().try_fold(<T::Real as Real>::zero(), |acc, x| Some(acc + x.norm_sqr_real()?))
}

/// Looks for `f` in the interior with `||S* f|| > ||S f||`, i.e. a violation of
/// hyponormality. Basis vectors are tried first (compared exactly when the
/// entries allow), then `search.samples` seeded random interior vectors.
pub fn hyponormality_witness<T: Scalar>(s: &TruncatedOperator<T>, search: WitnessSearch) -> Option<Witness> {
    let sa = s.adjoint();
    for n in s.interior().iter() {
        let fwd = s.apply_basis(n);
        let back = sa.apply_basis(n);
        match (squared_norm(&back), squared_norm(&fwd)) {
            (Some(b), Some(f)) => {
                let margin = b - f;
                if margin > <T::Real as Real>::zero() {
                    return Some(Witness::Basis { index: n, margin: margin.to_f64(), exact: T::EXACT });
                }
            }
            _ => {
                let margin = vec_norm(&back).powi(2) - vec_norm(&fwd).powi(2);
                if margin > 1e-12 * vec_norm(&fwd).powi(2).max(1.0) {
                    return Some(Witness::Basis { index: n, margin, exact: false });
                }
            }
        }
    }

    let interior = s.interior();
    if interior.is_empty() || search.samples == 0 {
        return None;
    }
    let sc = s.to_complex();
    let sm = sc.entries();
    let sa = sm.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for _ in 0..search.samples {
        let mut f = vec![Complex64::new(0.0, 0.0); s.dim()];
        let coefficients: Vec<Complex64> = interior
            .iter()
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        for (k, n) in interior.iter().enumerate() {
            f[(n - s.index_origin()) as usize] = coefficients[k];
        }
        let fwd = vec_norm(&sm.matvec(&f)).powi(2);
        let back = vec_norm(&sa.matvec(&f)).powi(2);
        let margin = back - fwd;
        if margin > 1e-12 * fwd.max(1.0) {
            return Some(Witness::Vector { coefficients, support: interior, margin });
        }
    }
    None
}

/// Largest singular value of the matrix.
pub fn norm_estimate<T: Scalar>(s: &TruncatedOperator<T>) -> f64 {
    let m = s.entries().to_nalgebra();
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}
