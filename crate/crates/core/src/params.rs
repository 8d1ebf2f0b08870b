//! Model parameters `(l, p, m, α, c)`, the scaling exponents they imply, and
//! regime classification.
//!
//! The equation family is
//! `u_t + u^{l-2} u_x + u^{p-2} u_x^{m-3} [ ... ] = 0` with Hamiltonian
//! `H = ∫ [ -u^l / (l(l-1)) - α u^p (i u_x)^m ] dx`. For even `m` the choice
//! `-α (m-1) i^m = 1` makes the equation real and is the convention every
//! profile formula relies on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{cst, int, near, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("nonlinearity exponent l = {0} must exceed 2")]
    LTooSmall(f64),
    #[error("m = {0} must be an even integer >= 2 (odd m gives a complex equation)")]
    OddM(u32),
    #[error("wave speed c = {0} must be positive")]
    NonPositiveSpeed(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
    #[error("scaling exponent `{0}` is undefined: its denominator vanishes")]
    DegenerateScaling(&'static str),
}

/// One equation instance `(l, p, m, α)` together with a wave speed `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T> {
    pub l: T,
    pub p: T,
    pub m: u32,
    pub alpha: T,
    pub c: T,
}

impl<T: Real> ModelParams<T> {
    /// Validated parameters with `α` fixed by the reality convention.
    pub fn new(l: T, p: T, m: u32, c: T) -> Result<Self, ParamsError> {
        let alpha = alpha_real(m)?;
        Self::with_alpha(l, p, m, alpha, c)
    }

    /// Validated parameters with an explicit `α`. Profile construction
    /// rejects any `α` other than [`alpha_real`].
    pub fn with_alpha(l: T, p: T, m: u32, alpha: T, c: T) -> Result<Self, ParamsError> {
        for (name, v) in [("l", l), ("p", p), ("alpha", alpha), ("c", c)] {
            if !v.is_finite() {
                return Err(ParamsError::NonFinite(name));
            }
        }
        if l <= int(2) {
            return Err(ParamsError::LTooSmall(l.to_f64().unwrap_or(f64::NAN)));
        }
        if m < 2 || m % 2 != 0 {
            return Err(ParamsError::OddM(m));
        }
        if c <= T::zero() {
            return Err(ParamsError::NonPositiveSpeed(c.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(ModelParams { l, p, m, alpha, c })
    }

    /// Same equation, different speed.
    pub fn with_speed(&self, c: T) -> Result<Self, ParamsError> {
        Self::with_alpha(self.l, self.p, self.m, self.alpha, c)
    }

    pub fn m_real(&self) -> T {
        int(self.m as i64)
    }

    /// True when `α` satisfies `-α(m-1)i^m = 1`.
    pub fn has_real_alpha(&self) -> bool {
        alpha_real::<T>(self.m).map(|a| near(a, self.alpha)).unwrap_or(false)
    }
}

/// `α` solving `-α (m-1) i^m = 1`, with `i^m = (-1)^{m/2}` for even `m`.
pub fn alpha_real<T: Real>(m: u32) -> Result<T, ParamsError> {
    if m < 2 || m % 2 != 0 {
        return Err(ParamsError::OddM(m));
    }
    let i_pow_m: T = if (m / 2) % 2 == 0 { T::one() } else { -T::one() };
    Ok(-T::one() / (int::<T>(m as i64 - 1) * i_pow_m))
}

/// Exponents of the scaling symmetry `x → λx, t → λ^η t, u → λ^β u` and
/// the power laws it implies for traveling waves.
///
/// `beta_scale`, `eta` and `r` are `None` when their denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingExponents<T> {
    /// `β = m / (p + m - l)`.
    pub beta_scale: Option<T>,
    /// `η` with `1 - η = β (l - 2)`.
    pub eta: Option<T>,
    /// Width scales as `c^{i1}`.
    pub i1: T,
    /// Momentum scales as `c^{i2}`.
    pub i2: T,
    /// Energy scales as `P^{-r}`.
    pub r: Option<T>,
}

impl<T: Real> ScalingExponents<T> {
    pub fn beta_scale(&self) -> Result<T, ParamsError> {
        self.beta_scale.ok_or(ParamsError::DegenerateScaling("beta_scale"))
    }

    pub fn eta(&self) -> Result<T, ParamsError> {
        self.eta.ok_or(ParamsError::DegenerateScaling("eta"))
    }

    pub fn r(&self) -> Result<T, ParamsError> {
        self.r.ok_or(ParamsError::DegenerateScaling("r"))
    }

    pub fn is_degenerate(&self) -> bool {
        self.beta_scale.is_none() || self.r.is_none()
    }
}

/// Scaling exponents of `(l, p, m)`; independent of `c` and `α`.
pub fn scaling_exponents<T: Real>(params: &ModelParams<T>) -> ScalingExponents<T> {
    let (l, p, m) = (params.l, params.p, params.m_real());
    let two = int::<T>(2);
    let three = int::<T>(3);

    let beta_scale = if near(p + m, l) { None } else { Some(m / (p + m - l)) };
    let eta = beta_scale.map(|b| T::one() - b * (l - two));
    let i1 = (p + m - l) / (m * (l - two));
    let i2 = (three * m - l + p) / (m * (l - two));
    let r = if near(p + three * m, l) {
        None
    } else {
        Some(-(l * m + p + m - l) / (p + three * m - l))
    };
    ScalingExponents { beta_scale, eta, i1, i2, r }
}

/// Qualitative regime of an equation instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// `p <= 2` and `p <= l`: the edge derivative stays finite.
    pub compacton_admissible: bool,
    /// `l = p + m`: width does not depend on speed.
    pub width_independent: bool,
    /// `2 < l < p + 3m`.
    pub stable_window: bool,
    /// `l = p + 3m`.
    pub marginal: bool,
}

pub fn classify<T: Real>(params: &ModelParams<T>) -> RegimeReport {
    let (l, p, m) = (params.l, params.p, params.m_real());
    let two = int::<T>(2);
    let edge = p + cst::<T>(3.0) * m;
    let marginal = near(l, edge);
    RegimeReport {
        compacton_admissible: p <= two && p <= l,
        width_independent: near(l, p + m),
        stable_window: l > two && l < edge && !marginal,
        marginal,
    }
}
