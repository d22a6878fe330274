use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{vec_norm, Matrix};
use crate::scalar::Scalar;

/// Inclusive window `[lo, hi]` of basis indices; empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub lo: i64,
    pub hi: i64,
}

impl IndexWindow {
    pub fn new(lo: i64, hi: i64) -> Self {
        IndexWindow { lo, hi }
    }

    pub fn empty() -> Self {
        IndexWindow { lo: 0, hi: -1 }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn contains(&self, n: i64) -> bool {
        self.lo <= n && n <= self.hi
    }

    pub fn contains_window(&self, other: &IndexWindow) -> bool {
        other.is_empty() || (self.contains(other.lo) && self.contains(other.hi))
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

/// A finite matrix standing for an operator on `span{e_k}`.
///
/// Row/column `i` is basis index `index_origin + i`. `interior` is where the
/// represented operator (and its adjoint) act on basis vectors exactly as the
/// untruncated operator would.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOperator<T> {
    entries: Matrix<T>,
    index_origin: i64,
    interior: IndexWindow,
    label: String,
    provenance: String,
}

impl<T: Scalar> TruncatedOperator<T> {
    pub fn new(entries: Matrix<T>, index_origin: i64, interior: IndexWindow, label: impl Into<String>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "operator matrix must be square, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        let full = IndexWindow::new(index_origin, index_origin + entries.rows() as i64 - 1);
        if !full.contains_window(&interior) {
            return Err(Error::DimensionMismatch(format!(
                "interior [{}, {}] outside index range [{}, {}]",
                interior.lo, interior.hi, full.lo, full.hi
            )));
        }
        Ok(TruncatedOperator { entries, index_origin, interior, label: label.into(), provenance: String::new() })
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn index_origin(&self) -> i64 {
        self.index_origin
    }

    pub fn interior(&self) -> IndexWindow {
        self.interior
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// All basis indices carried by the matrix.
    pub fn range(&self) -> IndexWindow {
        IndexWindow::new(self.index_origin, self.index_origin + self.dim() as i64 - 1)
    }

    /// Matrix position of basis index `n`.
    pub fn position(&self, n: i64) -> Option<usize> {
        self.range().contains(n).then(|| (n - self.index_origin) as usize)
    }

    pub fn adjoint(&self) -> Self {
        TruncatedOperator {
            entries: self.entries.adjoint(),
            index_origin: self.index_origin,
            interior: self.interior,
            label: format!("{}*", self.label),
            provenance: self.provenance.clone(),
        }
    }

    pub fn basis_vector(&self, n: i64) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim()];
        if let Some(i) = self.position(n) {
            v[i] = T::one();
        }
        v
    }

    /// Image of `e_n`.
    pub fn apply_basis(&self, n: i64) -> Vec<T> {
        match self.position(n) {
            Some(i) => self.entries.column(i),
            None => vec![T::zero(); self.dim()],
        }
    }

    /// Interior shrunk by `steps` on each side that is a truncation edge.
    /// A side of the interior that reaches the end of the matrix is a genuine
    /// boundary of the operator (e.g. `e_0` of a unilateral shift) and is kept.
    pub fn admissible(&self, steps: usize) -> IndexWindow {
        let full = self.range();
        let IndexWindow { mut lo, mut hi } = self.interior;
        if self.interior.is_empty() {
            return IndexWindow::empty();
        }
        if lo > full.lo {
            lo += steps as i64;
        }
        if hi < full.hi {
            hi -= steps as i64;
        }
        IndexWindow::new(lo, hi)
    }

    /// Replaces the entries keeping origin and interior.
    pub fn with_entries(&self, entries: Matrix<T>, label: impl Into<String>) -> Result<Self> {
        Ok(TruncatedOperator::new(entries, self.index_origin, self.interior, label)?
            .with_provenance(self.provenance.clone()))
    }

    pub fn to_complex(&self) -> TruncatedOperator<Complex64> {
        TruncatedOperator {
            entries: self.entries.to_c64(),
            index_origin: self.index_origin,
            interior: self.interior,
            label: self.label.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Largest column norm of a matrix over a window of basis columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    /// Maximum column norm; exactly `0.0` iff every column vanishes when
    /// `exact` is set.
    pub value: f64,
    pub exact: bool,
    /// Basis index attaining the maximum.
    pub worst_index: Option<i64>,
    pub columns: IndexWindow,
}

impl Residual {
    /// Column-norm maximum of `m` over `columns` (basis indices relative to
    /// `origin`).
    pub fn of_columns<T: Scalar>(m: &Matrix<T>, origin: i64, columns: IndexWindow) -> Residual {
        let mut value = 0.0f64;
        let mut worst = None;
        for n in columns.iter() {
            let col = m.column((n - origin) as usize);
            let mut norm = vec_norm(&col);
            if T::EXACT && norm == 0.0 && col.iter().any(|x| !x.is_zero()) {
                norm = f64::MIN_POSITIVE;
            }
            if worst.is_none() || norm > value {
                value = norm;
                worst = Some(n);
            }
        }
        Residual { value, exact: T::EXACT, worst_index: worst, columns }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }

    pub fn within(&self, tol: f64) -> bool {
        self.value <= tol
    }
}
