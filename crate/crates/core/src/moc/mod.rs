//! Modulus-of-continuity certificates.

mod certify;
mod modulus;
mod omega;
mod psi;

pub use certify::{
    certify, certify_pair, lambda_select, search_grid, search_parameters, CertificateReport, CertifyOptions,
    LambdaChoice, PairReport, SearchCandidate,
};
pub use modulus::{Modulus, ModulusKind, ScaledModulus};
pub use omega::{omega_eval, omega_eval_quadrature};
pub use psi::{psi_eval, psi_eval_direct};

/// Constants in the breakthrough inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MocConstants {
    pub a1: f64,
    pub a2: f64,
    pub b_alpha: f64,
}
