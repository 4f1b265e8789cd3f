//! Constrained model reference adaptive control for uncertain MIMO LTI
//! plants, with user-defined bounds on plant state, input magnitude, and
//! input rate.
//!
//! The controller treats the input and input rate as states of a
//! second-order input filter and protects three sets with log-barrier
//! Lyapunov functions: the weighted input ball, the weighted input-rate
//! ball, and a P-weighted ellipsoid around the difference error. Adaptive
//! gains update through barrier-scaled laws with sigma-modification and a
//! smooth norm-ball projection. A feasibility layer checks, before any
//! simulation, that a constraint-compliant policy can exist at all.
//!
//! The numeric core is generic over the scalar type ([`scalar::Real`],
//! implemented for `f32` and `f64`); the crate root exports `f64` aliases,
//! which everything file- and CLI-facing uses.

pub mod controller;
pub mod diagnostics;
pub mod error;
pub mod feasibility;
pub mod linalg;
pub mod model;
pub mod preset;
pub mod scalar;
pub mod scenario;
pub mod plot;
pub mod runner;
pub mod signal;
pub mod sim;
pub mod tol;
pub mod trace;

pub use error::{Barrier, Error, Result};

/// Dense matrix over `f64`.
pub type Matrix = linalg::Matrix<f64>;
/// Dense vector over `f64`.
pub type Vector = linalg::Vector<f64>;
/// Symmetric-eigenvalue extremes over `f64`.
pub type EigExtremes = linalg::EigExtremes<f64>;
