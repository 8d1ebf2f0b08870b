//! Special-function kernel: log-Gamma, the non-regularized incomplete beta
//! function, Gauss ₂F₁ on `[0, 1]`, and Jacobi elliptic functions.
//!
//! Everything here is real-valued and targets ~1e-13 relative accuracy in
//! `f64`, well inside what the profile and conserved-quantity code needs.

mod beta;
mod elliptic;
mod gamma;
mod hyp2f1;

use serde::Serialize;
use thiserror::Error;

pub use beta::{beta, inc_beta, ln_beta};
pub use elliptic::{complete_elliptic_k, jacobi_cn, jacobi_elliptic, JacobiTriple};
pub use gamma::{gamma, ln_gamma, recip_gamma};
pub use hyp2f1::{gauss_2f1, gauss_2f1_connection, gauss_2f1_series, gauss_2f1_with_error};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("argument {0} must be positive")]
    NonPositiveArgument(f64),
    #[error("Gamma function pole at {0}")]
    Pole(f64),
    #[error("argument outside the function's domain: {0}")]
    DomainError(String),
    #[error("series or continued fraction did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("elliptic modulus k = {0} must satisfy k^2 < 1")]
    ModulusOutOfRange(f64),
}

/// A value paired with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecFunResult<T> {
    pub value: T,
    pub est_abs_error: T,
}
