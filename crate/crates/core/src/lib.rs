//! Pseudo-spectral simulation of the two-dimensional Groma-Balogh
//! dislocation-density system with fractional dissipation, together with
//! diagnostics for its a priori bounds and a numerical checker for the
//! modulus-of-continuity inequalities behind its global regularity.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod kernels;
pub mod moc;
pub mod model;
pub mod quadrature;
pub mod runner;
pub mod snapshot;
pub mod special;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
