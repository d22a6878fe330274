//! Finite-truncation laboratory for the q-deformed oscillator relation
//! `S*S - qSS* = I`.
//!
//! Every solution family is realised as a finite matrix acting on
//! `span{e_k}` together with the window of basis indices on which the
//! truncation leaves the relation intact. Checks run in exact arithmetic
//! (rationals and square roots of rationals) wherever the entries allow it,
//! and in `f64` otherwise.

pub mod classify;
pub mod error;
pub mod export;
pub mod extension;
pub mod harness;
pub mod identities;
pub mod matrix;
pub mod moments;
pub mod qcalc;
pub mod scalar;
pub mod shiftops;
pub mod surd;

pub use error::{Error, Result};
pub use qcalc::{Mode, QNumber, QParam, Regime};
pub use scalar::{Real, Scalar, Value};
pub use surd::Surd;
