//! Stability criteria for compactons: the `∂P/∂c` sign, Derrick and
//! momentum-preserving scaling second derivatives, the Lyapunov lower bound,
//! and residual checks of the linearization operator `L`.

use serde::Serialize;
use thiserror::Error;

use crate::conserved::{energy_from_integrals, integral_set, virial_denominator, ConservedError, IntegralSet};
use crate::params::{classify, scaling_exponents, ModelParams};
use crate::profile::{build_profile, CompactonProfile, ProfileError, ProfileFamily};
use crate::real::{cst, int, to_f64, Real};

/// Fraction of the support next to each edge left out of residual norms.
pub const EDGE_EXCLUSION: f64 = 0.02;
/// Samples with `f <= FLOOR * A` are not used for `L`.
pub const FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Conserved(#[from] ConservedError),
    #[error("coefficient of L is not finite at y = {y}")]
    SingularCoefficient { y: f64 },
    #[error("test function has {got} samples, operator has {want}")]
    LengthMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpdcCriterion<T> {
    /// `P ∝ c^{exponent}`.
    pub exponent: T,
    pub stable: bool,
}

/// `∂P/∂c > 0` with `P ∝ c^{(p+3m-l)/(m(l-2))}`.
pub fn dpdc_criterion<T: Real>(params: &ModelParams<T>) -> DpdcCriterion<T> {
    let exponent = scaling_exponents(params).i2;
    DpdcCriterion { exponent, stable: exponent > T::zero() }
}

/// Second derivative of `Φ = H + cP` along `f → λ^{1/2} f(λy)`, which keeps
/// `P` fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phi2RhoHalf<T> {
    /// `Pc(l-2)(3m+p-l)(3m+p-2) / (4l(m-1) + m + p)`, the denominator read
    /// literally.
    pub formula: T,
    /// Same numerator over `4(l(m-1) + m + p)`.
    pub closed_form: T,
    /// From the scaling powers of `J`, `I_l`, `I₂` differentiated twice.
    pub numeric: T,
}

pub fn phi2_rho_half<T: Real>(params: &ModelParams<T>, momentum: T, ints: &IntegralSet<T>) -> Phi2RhoHalf<T> {
    let (l, p, m, c) = (params.l, params.p, params.m_real(), params.c);
    let one = T::one();
    let two = int::<T>(2);
    let three = int::<T>(3);
    let numerator = momentum * c * (l - two) * (three * m + p - l) * (three * m + p - two);
    let e1 = m - one + (m + p) / two;
    let e2 = l / two - one;
    let numeric = e1 * (e1 - one) * ints.jmp / (m - one) - e2 * (e2 - one) * ints.il / (l * (l - one));
    Phi2RhoHalf {
        formula: numerator / (int::<T>(4) * l * (m - one) + m + p),
        closed_form: numerator / (int::<T>(4) * virial_denominator(params)),
        numeric,
    }
}

/// Second derivative of `Φ` along `f → f(λy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerrickD2<T> {
    /// `c I₂ (l-2) / (2l(l-1)D) · [m²l² - ml² - (m²-7m-2p+4)l + 6m + 2p - 4]`.
    pub formula: T,
    /// `c I₂ m(m-1)(l-2) / (2D)`, what the integral identities reduce the
    /// second derivative to.
    pub closed_form: T,
    /// `(m-2)J - 2I_l/(l(l-1)) + cI₂` from the scaling powers.
    pub oracle: T,
}

pub fn derrick_d2<T: Real>(params: &ModelParams<T>, ints: &IntegralSet<T>) -> DerrickD2<T> {
    let (l, p, m, c) = (params.l, params.p, params.m_real(), params.c);
    let one = T::one();
    let two = int::<T>(2);
    let d = virial_denominator(params);
    let ll = l * (l - one);
    let poly = m * m * l * l - m * l * l - (m * m - int::<T>(7) * m - two * p + int::<T>(4)) * l + int::<T>(6) * m + two * p
        - int::<T>(4);
    DerrickD2 {
        formula: c * ints.i2 * (l - two) / (two * ll * d) * poly,
        closed_form: c * ints.i2 * m * (m - one) * (l - two) / (two * d),
        oracle: (m - two) * ints.jmp - two * ints.il / ll + c * ints.i2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovBound<T> {
    /// `(l-p-3m) J / ((m-1)(l-2))`.
    pub h_min: T,
    /// `H - h_min` with `H` from the same integrals.
    pub gap: T,
}

pub fn lyapunov_bound<T: Real>(params: &ModelParams<T>, ints: &IntegralSet<T>) -> LyapunovBound<T> {
    let (l, p, m) = (params.l, params.p, params.m_real());
    let h_min = (l - p - int::<T>(3) * m) * ints.jmp / ((m - T::one()) * (l - int::<T>(2)));
    LyapunovBound { h_min, gap: energy_from_integrals(params, ints) - h_min }
}

/// Sampled coefficients of `L = c0 + c1 d/dy + c2 d²/dy²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LOperatorCoeffs<T> {
    pub y: Vec<T>,
    pub c0: Vec<T>,
    pub c1: Vec<T>,
    pub c2: Vec<T>,
    /// Samples inside the support, above the amplitude floor and away from
    /// the edges; residual norms use only these.
    pub active: Vec<bool>,
}

/// `(c0, c1, c2)` at one point from `f`, `f'`, `f''`. Terms whose integer
/// prefactor vanishes are skipped, so `0 · ∞` never arises from them.
pub fn l_coefficients<T: Real>(params: &ModelParams<T>, f: T, fp: T, fpp: T) -> (T, T, T) {
    let (l, p, c) = (params.l, params.p, params.c);
    let m = params.m as i32;
    let mr = params.m_real();
    let one = T::one();
    let mut c0 = c - f.powf(l - int::<T>(2)) - mr * p * f.powf(p - one) * fp.powi(m - 2) * fpp;
    let pp = p * (p - one);
    if pp != T::zero() {
        c0 = c0 - pp * f.powf(p - int::<T>(2)) * fp.powi(m);
    }
    let mut c1 = -mr * p * f.powf(p - one) * fp.powi(m - 1);
    if m != 2 {
        c1 = c1 - mr * (mr - int::<T>(2)) * f.powf(p) * fp.powi(m - 3) * fpp;
    }
    let c2 = -mr * f.powf(p) * fp.powi(m - 2);
    (c0, c1, c2)
}

fn is_active<T: Real>(profile: &CompactonProfile<T>, y: T, f: T) -> bool {
    y.abs() <= (T::one() - cst::<T>(EDGE_EXCLUSION)) * profile.y_half && f > cst::<T>(FLOOR) * profile.amplitude
}

pub fn build_l<T: Real>(profile: &CompactonProfile<T>) -> Result<LOperatorCoeffs<T>, StabilityError> {
    let n = profile.grid.len();
    let mut out =
        LOperatorCoeffs { y: Vec::with_capacity(n), c0: Vec::with_capacity(n), c1: Vec::with_capacity(n), c2: Vec::with_capacity(n), active: Vec::with_capacity(n) };
    for s in &profile.grid {
        let inside = s.y.abs() < profile.y_half && s.f > cst::<T>(FLOOR) * profile.amplitude;
        let (c0, c1, c2) = if inside {
            let k = l_coefficients(&profile.params, s.f, s.fprime, s.fsecond);
            if !(k.0.is_finite() && k.1.is_finite() && k.2.is_finite()) {
                return Err(StabilityError::SingularCoefficient { y: to_f64(s.y) });
            }
            k
        } else {
            (profile.params.c, T::zero(), T::zero())
        };
        out.y.push(s.y);
        out.c0.push(c0);
        out.c1.push(c1);
        out.c2.push(c2);
        out.active.push(inside && is_active(profile, s.y, s.f));
    }
    Ok(out)
}

impl<T: Real> LOperatorCoeffs<T> {
    /// `L v` with `v'`, `v''` supplied.
    pub fn apply_with(&self, v: &[T], dv: &[T], d2v: &[T]) -> Result<Vec<T>, StabilityError> {
        for len in [v.len(), dv.len(), d2v.len()] {
            if len != self.y.len() {
                return Err(StabilityError::LengthMismatch { got: len, want: self.y.len() });
            }
        }
        Ok((0..v.len()).map(|i| self.c0[i] * v[i] + self.c1[i] * dv[i] + self.c2[i] * d2v[i]).collect())
    }

    /// `L v` with `v'`, `v''` by second-order centered differences on the
    /// (uniform) grid; the first and last samples get zero.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>, StabilityError> {
        let (dv, d2v) = centered_derivatives(&self.y, v);
        let mut out = self.apply_with(v, &dv, &d2v)?;
        let n = out.len();
        if n > 0 {
            out[0] = T::zero();
            out[n - 1] = T::zero();
        }
        Ok(out)
    }

    /// `‖L v - rhs‖₂ / ‖scale‖₂` over active samples (zero if `scale` vanishes there).
    pub fn relative_residual(&self, lv: &[T], rhs: &[T], scale: &[T]) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for i in 0..lv.len() {
            if self.active[i] && i > 0 && i + 1 < lv.len() {
                let d = lv[i] - rhs[i];
                num = num + d * d;
                den = den + scale[i] * scale[i];
            }
        }
        if den == T::zero() {
            T::zero()
        } else {
            (num / den).sqrt()
        }
    }
}

fn centered_derivatives<T: Real>(y: &[T], v: &[T]) -> (Vec<T>, Vec<T>) {
    let n = v.len();
    let mut d1 = vec![T::zero(); n];
    let mut d2 = vec![T::zero(); n];
    for i in 1..n.saturating_sub(1) {
        let h = (y[i + 1] - y[i - 1]) / int::<T>(2);
        d1[i] = (v[i + 1] - v[i - 1]) / (int::<T>(2) * h);
        d2[i] = (v[i + 1] - int::<T>(2) * v[i] + v[i - 1]) / (h * h);
    }
    (d1, d2)
}

/// `‖L f'‖₂ / ‖c f'‖₂`: translation invariance makes `f'` a zero mode.
pub fn goldstone_residual<T: Real>(profile: &CompactonProfile<T>, l_op: &LOperatorCoeffs<T>) -> Result<T, StabilityError> {
    let v: Vec<T> = profile.grid.iter().map(|s| s.fprime).collect();
    let lv = l_op.apply(&v)?;
    let zero = vec![T::zero(); v.len()];
    let scale: Vec<T> = v.iter().map(|&x| profile.params.c * x).collect();
    Ok(l_op.relative_residual(&lv, &zero, &scale))
}

/// `‖L ∂_c f + f‖₂ / ‖f‖₂` with `∂_c f` the centered difference of exact
/// profiles at `c ± dc/2`, sampled on the grid of the profile at `c`.
pub fn lc_derivative_identity<T: Real>(
    params: &ModelParams<T>,
    family: ProfileFamily,
    dc: T,
    n_grid: usize,
) -> Result<T, StabilityError> {
    let two = int::<T>(2);
    let centre = build_profile(params, family, n_grid)?;
    let plus = build_profile(&params.with_speed(params.c + dc / two).map_err(ProfileError::from)?, family, n_grid)?;
    let minus = build_profile(&params.with_speed(params.c - dc / two).map_err(ProfileError::from)?, family, n_grid)?;
    let l_op = build_l(&centre)?;
    let (mut v, mut dv, mut d2v, mut rhs, mut f) = (vec![], vec![], vec![], vec![], vec![]);
    for s in &centre.grid {
        let a = plus.eval(s.y)?;
        let b = minus.eval(s.y)?;
        v.push((a.f - b.f) / dc);
        dv.push((a.fprime - b.fprime) / dc);
        d2v.push(if a.fsecond.is_finite() && b.fsecond.is_finite() { (a.fsecond - b.fsecond) / dc } else { T::zero() });
        rhs.push(-s.f);
        f.push(s.f);
    }
    let lv = l_op.apply_with(&v, &dv, &d2v)?;
    Ok(l_op.relative_residual(&lv, &rhs, &f))
}

/// Every criterion at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport<T> {
    pub params: ModelParams<T>,
    pub window_ok: bool,
    pub marginal: bool,
    pub dpdc_exponent: T,
    pub momentum: T,
    pub energy: T,
    pub phi2_formula: T,
    pub phi2_closed_form: T,
    pub phi2_numeric: T,
    pub derrick_d2: T,
    pub derrick_formula: T,
    pub derrick_closed_form: T,
    pub lyapunov_h_min: T,
    pub lyapunov_gap: T,
    /// Only for `m = 2`; for larger `m` the coefficients of `L` diverge at
    /// the peak.
    pub goldstone_residual: Option<T>,
    pub lc_residual: Option<T>,
}

/// Default speed step for the `L ∂_c f = -f` check.
pub const LC_DC: f64 = 1e-3;

pub fn stability_report<T: Real>(profile: &CompactonProfile<T>, tol: T) -> Result<StabilityReport<T>, StabilityError> {
    let params = profile.params;
    let ints = integral_set(profile, tol)?;
    let momentum = ints.i2 / int::<T>(2);
    let phi2 = phi2_rho_half(&params, momentum, &ints);
    let derrick = derrick_d2(&params, &ints);
    let lyap = lyapunov_bound(&params, &ints);
    let regime = classify(&params);
    let (goldstone, lc) = match (params.m, profile.family) {
        (2, Some(family)) => {
            let l_op = build_l(profile)?;
            let n_grid = profile.grid.len() / 2;
            (Some(goldstone_residual(profile, &l_op)?), Some(lc_derivative_identity(&params, family, cst(LC_DC), n_grid)?))
        }
        _ => (None, None),
    };
    Ok(StabilityReport {
        params,
        window_ok: regime.stable_window,
        marginal: regime.marginal,
        dpdc_exponent: dpdc_criterion(&params).exponent,
        momentum,
        energy: energy_from_integrals(&params, &ints),
        phi2_formula: phi2.formula,
        phi2_closed_form: phi2.closed_form,
        phi2_numeric: phi2.numeric,
        derrick_d2: derrick.oracle,
        derrick_formula: derrick.formula,
        derrick_closed_form: derrick.closed_form,
        lyapunov_h_min: lyap.h_min,
        lyapunov_gap: lyap.gap,
        goldstone_residual: goldstone,
        lc_residual: lc,
    })
}
