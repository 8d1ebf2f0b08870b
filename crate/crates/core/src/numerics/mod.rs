//! Quadrature, root inversion and derivative-free minimization shared by the
//! profile, conserved-quantity and variational code.

mod minimize;
mod quadrature;
mod roots;

use thiserror::Error;

pub use minimize::{
    minimize_1d, minimize_1d_scanned, minimize_nd, minimize_nd_with, MinimizeResult, NelderMeadOptions,
    DEFAULT_SCAN_POINTS,
};
pub use quadrature::{
    integrate, integrate_endpoints, integrate_endpoints_with, integrate_semi_infinite, QuadratureOptions, QuadratureResult,
};
pub use roots::invert_monotone;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("quadrature tolerance not reached: value {value} +- {est_abs_error} after {evaluations} evaluations")]
    ToleranceNotReached { value: f64, est_abs_error: f64, evaluations: usize },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFiniteIntegrand(f64),
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("target {target} outside [{g_lo}, {g_hi}]")]
    TargetOutOfBracket { target: f64, g_lo: f64, g_hi: f64 },
    #[error("pre-scan found {basins} separated basins")]
    NotUnimodal { basins: usize },
    #[error("Nelder-Mead stopped after {0} iterations without converging")]
    MaxIterations(usize),
    #[error("unsupported dimension {0} (1 to 3 parameters)")]
    Dimension(usize),
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
}
