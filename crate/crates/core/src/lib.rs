//! System pattern regions of linear-cost security-constrained economic dispatch.
//!
//! The crate covers the whole pipeline: DC network model and shift factors
//! ([`grid`]), the dispatch LP in parametric form ([`sced`]), analytical
//! region enumeration ([`mpr`]), Monte-Carlo datasets ([`datagen`]), SVM-based
//! region identification with calibrated posteriors ([`learn`]) and k-fold
//! evaluation ([`eval`]).

// Argument checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod grid;
pub mod learn;
pub mod mpr;
pub mod sced;
pub mod simplex;

pub use error::{Error, Result};
