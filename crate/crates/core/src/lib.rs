//! Metric-learning based SVM and multiple kernel learning.
//!
//! This crate implements a family of large-margin classifiers that optimize
//! both the margin (a between-class distance) and a measure of the
//! within-class distance:
//!
//! - `SVM` — the standard soft-margin support vector machine,
//! - `SVM_m` — SVM with an additional band constraint that keeps instances
//!   within `epsilon` margins of their class margin hyperplane,
//! - `epsilon-SVM` — the `epsilon = 0` special case of `SVM_m`,
//! - `SVM-FDA` — SVM regularized by the Fisher within-class scatter,
//! - `FDA` — Fisher discriminant analysis,
//!
//! plus their multiple kernel learning counterparts (`MKL_m`, `epsilon-MKL`,
//! and the margin-only baseline `MKL_gamma`) which learn a convex kernel
//! combination by alternating an SMO dual solve with reduced-gradient steps
//! on the kernel-weight simplex.
//!
//! The [`bench`] module provides a cross-validation harness with nested
//! model selection, McNemar significance testing, and score tables.

pub mod bench;
pub mod data;
pub mod error;
pub mod kernel;
pub mod mkl;
pub mod models;
pub mod qp;

pub use error::{Error, Result};
