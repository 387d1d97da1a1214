//! Sparse random-projection matrices for classification.
//!
//! The crate provides four random-matrix ensembles (dense Gaussian, two
//! iid-sparse families, and a fixed-column-weight family with exactly one
//! nonzero per column), closed-form evaluators for their distance-preservation
//! and feature-selection properties, independent Monte Carlo and enumeration
//! oracles for every closed form, a two-class synthetic data generator, and a
//! voted linear-SVM experiment harness that sweeps the projection dimension.
//!
//! Modules:
//! - [`ensembles`] — matrix construction, projection, import/export
//! - [`theory`] — closed-form bound and expectation evaluators
//! - [`oracle`] — Monte Carlo estimators and exhaustive enumeration
//! - [`synth`] — synthetic dataset generation and dataset file formats
//! - [`classify`] — linear SVM, projection voting, k-sweep experiments

// Validation guards are written `!(x > 0.0)` so that NaN fails them; frozen
// oracle constants keep every digit of their independent evaluation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod classify;
pub mod ensembles;
mod numeric;
pub mod oracle;
pub mod rng;
pub mod synth;
pub mod theory;

use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A vector or matrix does not have the required shape.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// A data or matrix file failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The file holds samples from a single class only.
    #[error("dataset contains a single class; classification needs two")]
    SingleClass,

    /// An exhaustive enumeration would exceed the feasibility guard.
    #[error("enumeration over C({d},{w}) = {size:e} support sets exceeds the 1e7 guard")]
    EnumerationTooLarge { d: usize, w: usize, size: f64 },

    /// The fixed-column-weight row weight s'·d/k is not an integer.
    #[error("row weight s'*d/k = {sprime}*{d}/{k} is not a positive integer")]
    NonIntegerRowWeight { sprime: usize, d: usize, k: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
