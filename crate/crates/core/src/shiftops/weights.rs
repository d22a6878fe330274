use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcalc::{basic, basic_signed, QParam, Regime};
use crate::scalar::{Real, Scalar, Value};

use super::operator::{IndexWindow, TruncatedOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    Unilateral,
    Bilateral,
}

/// `Forward`: `e_n -> w_n e_{n+1}`. `Backward`: `e_n -> w_n e_{n-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Provenance {
    Canonical { q: Value },
    Bilateral { q: Value, alpha: Value, shift: i64 },
    Schmudgen { description: String },
    Extracted { from: String },
    Custom,
}

/// Squared weights `|w_n|^2` of a weighted shift over an index window.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence<R> {
    kind: ShiftKind,
    direction: Direction,
    squared_weights: Vec<R>,
    index_low: i64,
    provenance: Provenance,
}

impl<R: Real> WeightSequence<R> {
    pub fn new(
        kind: ShiftKind,
        direction: Direction,
        index_low: i64,
        squared_weights: Vec<R>,
        provenance: Provenance,
    ) -> Result<Self> {
        if kind == ShiftKind::Unilateral && index_low != 0 {
            return Err(Error::InvalidParameter(format!(
                "unilateral weights start at index 0, got {index_low}"
            )));
        }
        for (i, w) in squared_weights.iter().enumerate() {
            if *w < R::zero() {
                return Err(Error::NegativeWeight { index: index_low + i as i64, value: w.to_string() });
            }
        }
        Ok(WeightSequence { kind, direction, squared_weights, index_low, provenance })
    }

    /// Forward unilateral weights with custom values.
    pub fn unilateral(squared_weights: Vec<R>) -> Result<Self> {
        Self::new(ShiftKind::Unilateral, Direction::Forward, 0, squared_weights, Provenance::Custom)
    }

    /// Forward bilateral weights starting at basis index `index_low`.
    pub fn bilateral(index_low: i64, squared_weights: Vec<R>) -> Result<Self> {
        Self::new(ShiftKind::Bilateral, Direction::Forward, index_low, squared_weights, Provenance::Custom)
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn squared_weights(&self) -> &[R] {
        &self.squared_weights
    }

    pub fn index_low(&self) -> i64 {
        self.index_low
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.squared_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squared_weights.is_empty()
    }

    pub fn window(&self) -> IndexWindow {
        IndexWindow::new(self.index_low, self.index_low + self.len() as i64 - 1)
    }

    /// Squared weight attached to basis index `n`.
    pub fn get(&self, n: i64) -> Option<&R> {
        let i = n - self.index_low;
        (i >= 0).then(|| self.squared_weights.get(i as usize)).flatten()
    }

    pub fn to_f64(&self) -> WeightSequence<f64> {
        WeightSequence {
            kind: self.kind,
            direction: self.direction,
            squared_weights: self.squared_weights.iter().map(Real::to_f64).collect(),
            index_low: self.index_low,
            provenance: self.provenance.clone(),
        }
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Reads the squared weights back from a shift matrix (forward: entries
    /// `(i+1, i)`, backward: entries `(i-1, i)`). Any other nonzero entry is
    /// rejected.
    pub fn from_operator<T>(op: &TruncatedOperator<T>, kind: ShiftKind) -> Result<Self>
    where
        T: Scalar<Real = R>,
    {
        let m = op.entries();
        let d = op.dim();
        let mut forward = false;
        let mut backward = false;
        for r in 0..d {
            for c in 0..d {
                if m.get(r, c).is_zero() {
                    continue;
                }
                if r == c + 1 {
                    forward = true;
                } else if r + 1 == c {
                    backward = true;
                } else {
                    return Err(Error::InvalidParameter(format!(
                        "{} is not a weighted shift: entry ({r}, {c}) is off the shift diagonals",
                        op.label()
                    )));
                }
            }
        }
        if forward && backward {
            return Err(Error::InvalidParameter(format!("{} mixes forward and backward weights", op.label())));
        }
        let sq = |r: usize, c: usize| -> Result<R> {
            m.get(r, c).norm_sqr_real().ok_or_else(|| {
                Error::ExactUnavailable(format!("|entry ({r}, {c})|^2 is not representable"))
            })
        };
        let (direction, weights) = if backward {
            let mut w = vec![R::zero()];
            for c in 1..d {
                w.push(sq(c - 1, c)?);
            }
            (Direction::Backward, w)
        } else {
            let mut w = Vec::with_capacity(d.saturating_sub(1));
            for c in 0..d.saturating_sub(1) {
                w.push(sq(c + 1, c)?);
            }
            (Direction::Forward, w)
        };
        let low = if kind == ShiftKind::Unilateral { 0 } else { op.index_origin() };
        Self::new(kind, direction, low, weights, Provenance::Extracted { from: op.label().to_string() })
    }
}

/// Weights `[n+1]_q`, n = 0..=n_max, of the canonical unilateral solution.
pub fn canonical_weights<R: Real>(q: &QParam, n_max: usize) -> Result<WeightSequence<R>> {
    let qr: R = q.real()?;
    let weights: Vec<R> = (0..=n_max as u64).map(|n| basic(n + 1, &qr)).collect();
    if let Some((n, w)) = weights.iter().enumerate().find(|(_, w)| **w < R::zero()) {
        return Err(Error::NegativeWeight { index: n as i64, value: w.to_string() });
    }
    WeightSequence::new(
        ShiftKind::Unilateral,
        Direction::Forward,
        0,
        weights,
        Provenance::Canonical { q: q.value().clone() },
    )
}

/// Squared weights `alpha q^(n+N) + [n+N]_q` over `window` of the bilateral
/// solutions. Only `0 <= q < 1` with `alpha >= (1-q)^-1` and `q < 0` with
/// `alpha = (1-q)^-1` admit one; at `q <= 0` the weights are the constant
/// `(1-q)^-1`.
pub fn bilateral_weights<R: Real>(q: &QParam, alpha: &Value, shift: i64, window: IndexWindow) -> Result<WeightSequence<R>> {
    if window.is_empty() {
        return Err(Error::InvalidParameter("empty window".into()));
    }
    if matches!(q.regime(), Regime::One | Regime::AboveOne) {
        return Err(Error::NoBilateralSolution(q.to_string()));
    }
    let qr: R = q.real()?;
    let ar: R = R::from_value(alpha)?;
    let threshold = R::one() / (R::one() - qr.clone());
    let tol = q.mode().tolerance();
    let nonpositive_q = qr <= R::zero();
    if nonpositive_q {
        let gap = (ar.clone() - threshold.clone()).abs().to_f64();
        let equal = if R::EXACT { ar == threshold } else { gap <= tol * threshold.to_f64().abs().max(1.0) };
        if !equal {
            return Err(Error::InadmissibleAlpha {
                alpha: alpha.to_string(),
                reason: format!("q = {q} <= 0 admits only alpha = (1-q)^-1 = {threshold}"),
            });
        }
    } else if ar < threshold {
        return Err(Error::InadmissibleAlpha {
            alpha: alpha.to_string(),
            reason: format!("0 < q < 1 needs alpha >= (1-q)^-1 = {threshold}"),
        });
    }
    let mut weights = Vec::with_capacity(window.len());
    for n in window.iter() {
        let w = if nonpositive_q {
            // alpha q^x + [x]_q collapses to (1-q)^-1; at q = 0 the power is undefined
            threshold.clone()
        } else {
            ar.clone() * qr.powi(n + shift) + basic_signed(n + shift, &qr)?
        };
        if w < R::zero() {
            return Err(Error::NegativeWeight { index: n, value: w.to_string() });
        }
        weights.push(w);
    }
    WeightSequence::new(
        ShiftKind::Bilateral,
        Direction::Forward,
        window.lo,
        weights,
        Provenance::Bilateral { q: q.value().clone(), alpha: alpha.clone(), shift },
    )
}

/// Diagonal `<C e_n, e_n> = q^(n-1+N) (1 + (q-1) alpha)` of the selfcommutator
/// of a bilateral solution. Its sign does not depend on `n`.
pub fn bilateral_commutator_diagonal<R: Real>(q: &QParam, alpha: &Value, shift: i64, n: i64) -> Result<R> {
    let qr: R = q.real()?;
    let ar = R::from_value(alpha)?;
    if qr.is_zero() && n - 1 + shift < 0 {
        return Err(Error::InvalidParameter("q^x undefined at q = 0 for x < 0".into()));
    }
    Ok(qr.powi(n - 1 + shift) * (R::one() + (qr - R::one()) * ar))
}
