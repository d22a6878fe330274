//! Upper-bidiagonal block matrix extending the canonical shift to a normal
//! operator: diagonal blocks `q^(n/2) S`, superdiagonal blocks
//! `sqrt([n+1]_q) diag(q^(k/2))` at `(n, n+1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{vec_norm, Matrix};
use crate::qcalc::{basic, QParam, Regime};
use crate::scalar::{Real, Scalar, Value};
use crate::shiftops::{build_shift, canonical_weights, TruncatedOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockStructure {
    UpperBidiagonal,
    /// Blocks were edited after construction.
    General,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator<T> {
    blocks: BTreeMap<(usize, usize), Matrix<T>>,
    m: usize,
    d: usize,
    q: Value,
    structure: BlockStructure,
}

impl<T: Scalar> BlockOperator<T> {
    pub fn blocks_per_side(&self) -> usize {
        self.m
    }

    pub fn inner_dim(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> &Value {
        &self.q
    }

    pub fn structure(&self) -> BlockStructure {
        self.structure
    }

    /// Stored nonzero blocks in row-major block order.
    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &Matrix<T>)> {
        self.blocks.iter()
    }

    /// Block `(row, col)`; blocks never stored are zero.
    pub fn block(&self, row: usize, col: usize) -> Matrix<T> {
        self.blocks.get(&(row, col)).cloned().unwrap_or_else(|| Matrix::zeros(self.d, self.d))
    }

    pub fn set_block(&mut self, row: usize, col: usize, block: Matrix<T>) -> Result<()> {
        if row >= self.m || col >= self.m {
            return Err(Error::DimensionMismatch(format!("block ({row}, {col}) outside {0}x{0}", self.m)));
        }
        if block.rows() != self.d || block.cols() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "block must be {0}x{0}, got {1}x{2}",
                self.d,
                block.rows(),
                block.cols()
            )));
        }
        self.blocks.insert((row, col), block);
        self.structure = BlockStructure::General;
        Ok(())
    }

    /// The `(M d) x (M d)` matrix; coordinate `(n, k)` sits at `n d + k`.
    pub fn flatten(&self) -> Matrix<T> {
        let size = self.m * self.d;
        let mut out = Matrix::zeros(size, size);
        for (&(br, bc), b) in &self.blocks {
            for r in 0..self.d {
                for c in 0..self.d {
                    let v = b.get(r, c);
                    if !v.is_zero() {
                        out.set(br * self.d + r, bc * self.d + c, v.clone());
                    }
                }
            }
        }
        out
    }
}

/// Superdiagonal block `sqrt([n]_q) diag(q^(k/2))`.
fn coupling_block<T: Scalar>(n: u64, q: &T::Real, d: usize) -> Result<Matrix<T>> {
    let scale = basic(n, q);
    let diag = (0..d).map(|k| T::sqrt_of(&(scale.clone() * q.powi(k as i64)))).collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_diagonal(diag))
}

/// Normal extension built on the canonical shift of size `d`, with `m` blocks per side.
pub fn build_extension<T: Scalar>(q: &QParam, d: usize, m: usize) -> Result<BlockOperator<T>> {
    if !matches!(q.regime(), Regime::ZeroToOne | Regime::One | Regime::AboveOne) {
        return Err(Error::InvalidParameter(format!("the block extension needs q > 0, got {q}")));
    }
    if d == 0 || m == 0 {
        return Err(Error::InvalidParameter("d and M must be positive".into()));
    }
    let qr: T::Real = q.real()?;
    let s: TruncatedOperator<T> = build_shift(&canonical_weights::<T::Real>(q, d - 1)?, d)?;
    let mut blocks = BTreeMap::new();
    for n in 0..m {
        let factor = T::sqrt_of(&qr.powi(n as i64))?;
        blocks.insert((n, n), s.entries().scale(&factor));
        if n + 1 < m {
            blocks.insert((n, n + 1), coupling_block(n as u64 + 1, &qr, d)?);
        }
    }
    Ok(BlockOperator { blocks, m, d, q: q.value().clone(), structure: BlockStructure::UpperBidiagonal })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockResidual {
    pub value: f64,
    pub exact: bool,
    /// `(block, inner)` coordinate attaining the maximum.
    pub worst: Option<(usize, usize)>,
    pub excluded_blocks: Vec<usize>,
    pub excluded_inner: Vec<usize>,
}

/// Largest `||(N*N - NN*) e_(n,k)||` over blocks `n < M-1` and inner `k < d-1`
/// (block 0 alone when `M = 1`).
pub fn normality_residual<T: Scalar>(n: &BlockOperator<T>) -> BlockResidual {
    let flat = n.flatten();
    let adj = flat.adjoint();
    let defect = adj.matmul(&flat).sub(&flat.matmul(&adj));
    let (m, d) = (n.m, n.d);
    let blocks = if m == 1 { 1 } else { m - 1 };
    let inner = d.saturating_sub(1);
    let mut value = 0.0;
    let mut worst = None;
    for b in 0..blocks {
        for k in 0..inner {
            let col = defect.column(b * d + k);
            let mut norm = vec_norm(&col);
            if T::EXACT && norm == 0.0 && col.iter().any(|x| !x.is_zero()) {
                norm = f64::MIN_POSITIVE;
            }
            if worst.is_none() || norm > value {
                value = norm;
                worst = Some((b, k));
            }
        }
    }
    BlockResidual {
        value,
        exact: T::EXACT,
        worst,
        excluded_blocks: (blocks..m).collect(),
        excluded_inner: (inner..d).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Consistency {
    pub consistent: bool,
    /// Frobenius norm of `column block 0 - (S, 0, .., 0)`.
    pub deviation: f64,
}

/// Checks that `N (f, 0, .., 0) = (S f, 0, .., 0)` for every `f`.
pub fn extension_consistency<T: Scalar>(n: &BlockOperator<T>, s: &TruncatedOperator<T>) -> Result<Consistency> {
    if s.dim() != n.d {
        return Err(Error::DimensionMismatch(format!("S is {0}x{0}, blocks are {1}x{1}", s.dim(), n.d)));
    }
    let mut sq = 0.0;
    let mut consistent = true;
    for row in 0..n.m {
        let b = n.block(row, 0);
        let diff = if row == 0 { b.sub(s.entries()) } else { b };
        consistent &= diff.is_zero();
        sq += diff.frobenius_norm().powi(2);
    }
    Ok(Consistency { consistent, deviation: sq.sqrt() })
}
