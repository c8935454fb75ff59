//! Riemannian optimization on the manifold of unitary symmetric matrices.
//!
//! The crate is layered bottom-up:
//!
//! - [`linalg`]: dense complex kernels (SVD, symmetric and Hermitian
//!   eigendecompositions, Takagi factorization, exponential of
//!   skew-Hermitian matrices).
//! - [`manifold`]: geometry of the unitary symmetric manifold (tangent
//!   projection, geodesics, retraction) and the small part of the plain
//!   unitary manifold needed by the baseline.
//! - [`optimizer`]: the step-size-free geodesic phase ascent, plus an
//!   Armijo gradient ascent on the unitary group.
//! - [`bdris`]: a BD-RIS assisted MIMO link, its achievable rate, gradient,
//!   closed-form per-phase update and two reference baselines.

// comparisons are written as `!(x > 0.0)` on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bdris;
pub mod error;
pub mod linalg;
pub mod manifold;
pub mod optimizer;
pub mod sample;

pub use error::{Error, Result};
pub use linalg::{CMat, RMat};
pub use manifold::{GeodesicFrame, TangentDirection, UPoint, UsPoint};
pub use optimizer::{IterationTrace, Objective, OptimizerConfig, Status};
