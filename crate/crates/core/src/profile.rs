//! Exact compacton profiles `f(y)`, `y = x - ct`, centered on their maximum
//! and patched to zero outside `|y| <= y_half`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{integrate_endpoints, invert_monotone, NumericsError, QuadratureResult};
use crate::params::{classify, ModelParams, ParamsError};
use crate::real::{cst, int, near, to_f64, Real};
use crate::specfun::{beta, complete_elliptic_k, gauss_2f1, inc_beta, jacobi_elliptic, SpecFunError};

/// Smallest accepted number of grid points per half-support.
pub const MIN_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("inadmissible parameters: {0}")]
    InadmissibleParams(String),
    #[error("family {family} does not apply to (l, p, m) = ({l}, {p}, {m})")]
    UnsupportedFamily { family: ProfileFamily, l: f64, p: f64, m: u32 },
    #[error("incomplete-beta parametrization needs (l, p) = (3, 1) or (4, 1), got ({l}, {p})")]
    FamilyMismatch { l: f64, p: f64 },
    #[error("y = {y} lies beyond the half-support {y_half}")]
    BeyondSupport { y: f64, y_half: f64 },
    #[error("f = {f} outside [0, {amplitude}]")]
    AmplitudeRange { f: f64, amplitude: f64 },
    #[error("need at least 64 grid points per half-support, got {0}")]
    GridTooSmall(usize),
}

/// Which construction produces the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    /// `3c cos²(y / 2√6)` for `(l, p, m) = (3, 1, 2)`.
    ClosedSin2,
    /// `√(6c) cn²(β y, 1/√2)` for `(4, 1, 2)`.
    ClosedCn2,
    /// `A Z^a(β s)` with `(Z')^m = 1 - Z^{2τ}`; any admissible `(l, p, m)`.
    Hyperelliptic,
    /// Incomplete-beta inversion for `l = 3, p = 1`, any even `m`.
    IncBetaL3P1,
    /// Incomplete-beta inversion for `l = 4, p = 1`, any even `m`.
    IncBetaL4P1,
}

impl ProfileFamily {
    pub const ALL: [ProfileFamily; 5] = [
        ProfileFamily::ClosedSin2,
        ProfileFamily::ClosedCn2,
        ProfileFamily::Hyperelliptic,
        ProfileFamily::IncBetaL3P1,
        ProfileFamily::IncBetaL4P1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileFamily::ClosedSin2 => "closed_sin2",
            ProfileFamily::ClosedCn2 => "closed_cn2",
            ProfileFamily::Hyperelliptic => "hyperelliptic",
            ProfileFamily::IncBetaL3P1 => "inc_beta_l3p1",
            ProfileFamily::IncBetaL4P1 => "inc_beta_l4p1",
        }
    }

    /// Whether the family's `(l, p, m)` pattern matches. Admissibility of the
    /// parameters themselves is checked separately by [`build_profile`].
    pub fn applies_to<T: Real>(self, params: &ModelParams<T>) -> bool {
        let is = |x: T, v: i64| near(x, int(v));
        let (l, p, m) = (params.l, params.p, params.m);
        match self {
            ProfileFamily::ClosedSin2 => is(l, 3) && is(p, 1) && m == 2,
            ProfileFamily::ClosedCn2 => is(l, 4) && is(p, 1) && m == 2,
            ProfileFamily::Hyperelliptic => true,
            ProfileFamily::IncBetaL3P1 => is(l, 3) && is(p, 1),
            ProfileFamily::IncBetaL4P1 => is(l, 4) && is(p, 1),
        }
    }

    /// Closed form when one exists, otherwise the hyperelliptic route.
    pub fn default_for<T: Real>(params: &ModelParams<T>) -> ProfileFamily {
        [ProfileFamily::ClosedSin2, ProfileFamily::ClosedCn2]
            .into_iter()
            .find(|f| f.applies_to(params))
            .unwrap_or(ProfileFamily::Hyperelliptic)
    }
}

impl fmt::Display for ProfileFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown profile family `{s}`"))
    }
}

/// Constants of the hyperelliptic ansatz `f = A Z^a(β_w s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperellipticParams<T> {
    pub a_exp: T,
    pub tau: T,
    pub amplitude: T,
    pub beta_w: T,
    /// Half-support in `z = β_w y` units, `y(Z = 1)`.
    pub z_half: T,
}

fn check_admissible<T: Real>(params: &ModelParams<T>) -> Result<(), ProfileError> {
    if !params.has_real_alpha() {
        return Err(ProfileError::InadmissibleParams(format!(
            "alpha = {} differs from the real-equation value for m = {}",
            params.alpha, params.m
        )));
    }
    if !classify(params).compacton_admissible {
        return Err(ProfileError::InadmissibleParams(format!(
            "p = {} must satisfy p <= 2 and p <= l for a finite edge derivative",
            params.p
        )));
    }
    if params.m_real() + params.p <= int(2) {
        return Err(ProfileError::InadmissibleParams(format!("m + p = {} must exceed 2", params.m_real() + params.p)));
    }
    Ok(())
}

pub fn hyperelliptic_params<T: Real>(params: &ModelParams<T>) -> Result<HyperellipticParams<T>, ProfileError> {
    check_admissible(params)?;
    let (l, p, m, c) = (params.l, params.p, params.m_real(), params.c);
    let two = int::<T>(2);
    let denom = m + p - two;
    let a_exp = m / denom;
    let tau = m * (l - two) / (two * denom);
    let ll = l * (l - T::one());
    let k = c * ll / two;
    let amplitude = k.powf(T::one() / (l - two));
    let beta_w = k.powf((l - p - m) / (m * (l - two))) / (a_exp * ll.powf(T::one() / m));
    let z_half = y_of_z(tau, params.m, T::one())?;
    Ok(HyperellipticParams { a_exp, tau, amplitude, beta_w, z_half })
}

/// `y(Z) = ∫₀^Z (1 - x^{2τ})^{-1/m} dx = Z ₂F₁(1/m, 1/(2τ); 1 + 1/(2τ); Z^{2τ})`.
pub fn y_of_z<T: Real>(tau: T, m: u32, z: T) -> Result<T, ProfileError> {
    if !(z >= T::zero() && z <= T::one()) || !(tau > T::zero()) {
        return Err(ProfileError::SpecFun(SpecFunError::DomainError(format!(
            "y_of_z(tau = {}, z = {})",
            to_f64(tau),
            to_f64(z)
        ))));
    }
    if z == T::zero() {
        return Ok(T::zero());
    }
    let inv_m = T::one() / int::<T>(m as i64);
    let b = T::one() / (int::<T>(2) * tau);
    Ok(z * gauss_2f1(inv_m, b, T::one() + b, z.powf(int::<T>(2) * tau))?)
}

/// Inverse of [`y_of_z`] on `[0, y(1)]`.
pub fn z_of_y<T: Real>(tau: T, m: u32, y: T) -> Result<T, ProfileError> {
    let y_half = y_of_z(tau, m, T::one())?;
    let slack = cst::<T>(64.0) * T::epsilon() * y_half;
    if y > y_half + slack || y < -slack || y.is_nan() {
        return Err(ProfileError::BeyondSupport { y: to_f64(y), y_half: to_f64(y_half) });
    }
    if y >= y_half {
        return Ok(T::one());
    }
    if y <= T::zero() {
        return Ok(T::zero());
    }
    invert_fallible(|z| y_of_z(tau, m, z), T::zero(), T::one(), y, cst::<T>(4.0) * T::epsilon() * y_half)
}

/// `(y, Z)` samples of the centered hyperelliptic curve in `z` units:
/// `Z = 1` at the origin, `Z = 0` at `±y(1)`.
pub fn z_curve<T: Real>(tau: T, m: u32, n_half: usize) -> Result<Vec<(T, T)>, ProfileError> {
    if n_half == 0 {
        return Err(ProfileError::GridTooSmall(0));
    }
    let y_half = y_of_z(tau, m, T::one())?;
    let n = int::<T>(n_half as i64);
    let mut half = Vec::with_capacity(n_half + 1);
    for i in 0..=n_half {
        let u = y_half * int::<T>(i as i64) / n;
        half.push((u, z_of_y(tau, m, y_half - u)?));
    }
    let mut out: Vec<(T, T)> = half.iter().rev().map(|&(u, z)| (-u, z)).collect();
    out.extend(half.into_iter().skip(1));
    Ok(out)
}

fn invert_fallible<T, G>(mut g: G, lo: T, hi: T, target: T, tol: T) -> Result<T, ProfileError>
where
    T: Real,
    G: FnMut(T) -> Result<T, ProfileError>,
{
    let mut failure = None;
    let x = invert_monotone(
        |x| match g(x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                T::nan()
            }
        },
        lo,
        hi,
        target,
        tol,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(x?),
    }
}

/// Incomplete-beta scale and exponents: `s = K B_t(ea, eb)` with `t = f/(3c)`
/// for `l = 3` and `t = f²/(6c)` for `l = 4`.
fn inc_beta_constants<T: Real>(params: &ModelParams<T>) -> Result<(T, T, T, bool), ProfileError> {
    let is = |x: T, v: i64| near(x, int(v));
    let m = params.m_real();
    let c = params.c;
    let one = T::one();
    if is(params.l, 3) && is(params.p, 1) {
        let e = (m - one) / m;
        let k = int::<T>(2).powf(one / m) * int::<T>(3).powf(e) * c.powf((m - int(2)) / m);
        Ok((k, e, e, true))
    } else if is(params.l, 4) && is(params.p, 1) {
        let k = cst::<T>(1.5).powf((m - one) / (int::<T>(2) * m)) * c.powf((m - int(3)) / (int::<T>(2) * m));
        Ok((k, (m - one) / (int::<T>(2) * m), (m - one) / m, false))
    } else {
        Err(ProfileError::FamilyMismatch { l: to_f64(params.l), p: to_f64(params.p) })
    }
}

/// Distance `x - ct` from the compacton edge at which the profile reaches
/// `f_val`, from the incomplete-beta parametrization of `(3, 1)` or `(4, 1)`.
pub fn inc_beta_forward<T: Real>(params: &ModelParams<T>, f_val: T) -> Result<T, ProfileError> {
    let (k, ea, eb, linear) = inc_beta_constants(params)?;
    let c = params.c;
    let amplitude = if linear { int::<T>(3) * c } else { (int::<T>(6) * c).sqrt() };
    if !(f_val >= T::zero() && f_val <= amplitude * (T::one() + cst::<T>(16.0) * T::epsilon())) {
        return Err(ProfileError::AmplitudeRange { f: to_f64(f_val), amplitude: to_f64(amplitude) });
    }
    let t = if linear { f_val / (int::<T>(3) * c) } else { f_val * f_val / (int::<T>(6) * c) };
    Ok(k * inc_beta(t.min(T::one()), ea, eb)?)
}

/// `G(f) = (c/2) f^{2-p} - f^{l-p} / (l(l-1))`, the right side of the first
/// integral `(f')^m = G(f)`.
fn first_integral_rhs<T: Real>(params: &ModelParams<T>, f: T) -> T {
    let (l, p, c) = (params.l, params.p, params.c);
    c / int::<T>(2) * f.powf(int::<T>(2) - p) - f.powf(l - p) / (l * (l - T::one()))
}

fn first_integral_rhs_deriv<T: Real>(params: &ModelParams<T>, f: T) -> T {
    let (l, p, c) = (params.l, params.p, params.c);
    let two = int::<T>(2);
    c / two * (two - p) * f.powf(T::one() - p) - (l - p) * f.powf(l - p - T::one()) / (l * (l - T::one()))
}

#[derive(Debug, Clone, PartialEq)]
enum Shape<T> {
    Sin2,
    Cn2 { k: T },
    Hyper { hp: HyperellipticParams<T> },
    IncBeta { k: T, ea: T, eb: T, linear: bool },
    Sampled,
}

/// One grid sample. `fsecond` may be infinite where the profile has an
/// integrable curvature singularity (centre for `m > 2`, edge for `a < 2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample<T> {
    pub y: T,
    pub f: T,
    pub fprime: T,
    pub fsecond: T,
}

/// Value and slope at one point of the half-profile parametrization used by
/// the quadratures: `t = 0` at the edge, `t = 1` at the peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPoint<T> {
    pub f: T,
    /// `|f'|`.
    pub slope: T,
    /// `|dy/dt|`.
    pub dy_dt: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactonProfile<T> {
    pub params: ModelParams<T>,
    /// `None` for profiles sampled from an arbitrary function.
    pub family: Option<ProfileFamily>,
    pub amplitude: T,
    pub beta_w: T,
    pub a_exp: T,
    pub tau: T,
    pub y_half: T,
    /// Symmetric samples on `[-y_half, y_half]`, endpoints included.
    pub grid: Vec<ProfileSample<T>>,
    shape: Shape<T>,
}

/// Header metadata of a profile, as written to CSV and JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary<T> {
    pub family: Option<ProfileFamily>,
    pub l: T,
    pub p: T,
    pub m: u32,
    pub c: T,
    pub amplitude: T,
    pub beta_w: T,
    pub a_exp: T,
    pub tau: T,
    pub y_half: T,
}

pub fn build_profile<T: Real>(
    params: &ModelParams<T>,
    family: ProfileFamily,
    n_grid: usize,
) -> Result<CompactonProfile<T>, ProfileError> {
    if n_grid < MIN_GRID {
        return Err(ProfileError::GridTooSmall(n_grid));
    }
    if !family.applies_to(params) {
        return Err(ProfileError::UnsupportedFamily {
            family,
            l: to_f64(params.l),
            p: to_f64(params.p),
            m: params.m,
        });
    }
    let hp = hyperelliptic_params(params)?;
    let c = params.c;
    let (shape, amplitude, y_half) = match family {
        ProfileFamily::ClosedSin2 => (Shape::Sin2, int::<T>(3) * c, T::PI() * int::<T>(6).sqrt()),
        ProfileFamily::ClosedCn2 => {
            let k = T::FRAC_1_SQRT_2();
            let b = (c / int::<T>(96)).powf(cst(0.25));
            (Shape::Cn2 { k }, (int::<T>(6) * c).sqrt(), complete_elliptic_k(k)? / b)
        }
        ProfileFamily::Hyperelliptic => (Shape::Hyper { hp }, hp.amplitude, hp.z_half / hp.beta_w),
        ProfileFamily::IncBetaL3P1 | ProfileFamily::IncBetaL4P1 => {
            let (k, ea, eb, linear) = inc_beta_constants(params)?;
            let amplitude = if linear { int::<T>(3) * c } else { (int::<T>(6) * c).sqrt() };
            (Shape::IncBeta { k, ea, eb, linear }, amplitude, k * beta(ea, eb)?)
        }
    };
    let mut profile = CompactonProfile {
        params: *params,
        family: Some(family),
        amplitude,
        beta_w: hp.beta_w,
        a_exp: hp.a_exp,
        tau: hp.tau,
        y_half,
        grid: Vec::new(),
        shape,
    };
    let n = int::<T>(n_grid as i64);
    let mut half = Vec::with_capacity(n_grid + 1);
    for i in 0..=n_grid {
        let u = if i == n_grid { y_half } else { y_half * int::<T>(i as i64) / n };
        let (f, fp, fpp) = profile.eval_abs(u)?;
        let f = if i == n_grid { T::zero() } else { f };
        half.push(ProfileSample { y: u, f, fprime: fp, fsecond: fpp });
    }
    profile.grid = mirror(half);
    Ok(profile)
}

fn mirror<T: Real>(half: Vec<ProfileSample<T>>) -> Vec<ProfileSample<T>> {
    let mut grid: Vec<ProfileSample<T>> = half
        .iter()
        .rev()
        .map(|s| ProfileSample { y: -s.y, f: s.f, fprime: -s.fprime, fsecond: s.fsecond })
        .collect();
    grid.pop();
    grid.extend(half);
    grid
}

impl<T: Real> CompactonProfile<T> {
    /// Profile sampled from an arbitrary even function `g(u) = (f, f')` on
    /// `u = |y| ∈ [0, y_half]`, with `f'` for `y > 0`. Second derivatives come
    /// from centered differences. Used for control functions.
    pub fn sampled<G>(params: &ModelParams<T>, y_half: T, n_grid: usize, mut g: G) -> Result<Self, ProfileError>
    where
        G: FnMut(T) -> (T, T),
    {
        if n_grid < MIN_GRID {
            return Err(ProfileError::GridTooSmall(n_grid));
        }
        if !(y_half > T::zero()) {
            return Err(ProfileError::InadmissibleParams(format!("y_half = {} must be positive", to_f64(y_half))));
        }
        let n = int::<T>(n_grid as i64);
        let h = y_half / n;
        let mut half: Vec<ProfileSample<T>> = (0..=n_grid)
            .map(|i| {
                let u = if i == n_grid { y_half } else { h * int::<T>(i as i64) };
                let (f, fprime) = g(u);
                ProfileSample { y: u, f, fprime, fsecond: T::zero() }
            })
            .collect();
        for i in 0..=n_grid {
            let (fm, fp) = match i {
                0 => (half[1].fprime * -T::one(), half[1].fprime),
                _ if i == n_grid => (half[i - 1].fprime, half[i].fprime),
                _ => (half[i - 1].fprime, half[i + 1].fprime),
            };
            let span = if i == n_grid { h } else { h * int::<T>(2) };
            half[i].fsecond = (fp - fm) / span;
        }
        let amplitude = half.iter().map(|s| s.f.abs()).fold(T::zero(), T::max);
        let hp = hyperelliptic_params(params).ok();
        Ok(CompactonProfile {
            params: *params,
            family: None,
            amplitude,
            beta_w: hp.map_or(T::nan(), |h| h.beta_w),
            a_exp: hp.map_or(T::nan(), |h| h.a_exp),
            tau: hp.map_or(T::nan(), |h| h.tau),
            y_half,
            grid: mirror(half),
            shape: Shape::Sampled,
        })
    }

    /// The identically zero profile on `[-y_half, y_half]`.
    pub fn zero(params: &ModelParams<T>, y_half: T, n_grid: usize) -> Result<Self, ProfileError> {
        Self::sampled(params, y_half, n_grid, |_| (T::zero(), T::zero()))
    }

    pub fn summary(&self) -> ProfileSummary<T> {
        ProfileSummary {
            family: self.family,
            l: self.params.l,
            p: self.params.p,
            m: self.params.m,
            c: self.params.c,
            amplitude: self.amplitude,
            beta_w: self.beta_w,
            a_exp: self.a_exp,
            tau: self.tau,
            y_half: self.y_half,
        }
    }

    /// `(f, f', f'')` at `|y| = u`, with `f'` the slope for `y > 0`.
    fn eval_abs(&self, u: T) -> Result<(T, T, T), ProfileError> {
        let c = self.params.c;
        let two = int::<T>(2);
        match &self.shape {
            Shape::Sin2 => {
                let k = T::one() / (two * int::<T>(6).sqrt());
                let three_c = int::<T>(3) * c;
                let cos = (k * u).cos();
                Ok((three_c * cos * cos, -three_c * k * (two * k * u).sin(), -two * three_c * k * k * (two * k * u).cos()))
            }
            Shape::Cn2 { k } => {
                let b = (c / int::<T>(96)).powf(cst(0.25));
                let j = jacobi_elliptic(b * u, *k)?;
                let a = self.amplitude;
                let (sn2, cn2, dn2) = (j.sn * j.sn, j.cn * j.cn, j.dn * j.dn);
                Ok((
                    a * cn2,
                    -two * a * b * j.cn * j.sn * j.dn,
                    -two * a * b * b * (cn2 * dn2 - sn2 * dn2 - *k * *k * sn2 * cn2),
                ))
            }
            Shape::Hyper { hp } => {
                let m = self.params.m;
                let mr = int::<T>(m as i64);
                let z = (hp.z_half - hp.beta_w * u).max(T::zero());
                let zz = z_of_y(hp.tau, m, z)?;
                let one_minus = one_minus_pow(zz, T::one() - zz, two * hp.tau);
                let w = one_minus.powf(T::one() / mr);
                let (a, b) = (hp.a_exp, hp.beta_w);
                let f = hp.amplitude * zz.powf(a);
                let fp = -hp.amplitude * a * b * zz.powf(a - T::one()) * w;
                let fpp = hp.amplitude
                    * a
                    * b
                    * b
                    * ((a - T::one()) * zz.powf(a - two) * w * w
                        - two * hp.tau / mr * zz.powf(a + two * hp.tau - two) * one_minus.powf(two / mr - T::one()));
                Ok((f, fp, fpp))
            }
            Shape::IncBeta { k, ea, eb, linear } => {
                let s = (self.y_half - u).max(T::zero());
                let t = if s >= self.y_half {
                    T::one()
                } else {
                    invert_fallible(
                        |t| Ok(*k * inc_beta(t, *ea, *eb)?),
                        T::zero(),
                        T::one(),
                        s,
                        cst::<T>(4.0) * T::epsilon() * self.y_half,
                    )?
                };
                let (f, slope) = self.inc_beta_point(t, T::one() - t, *k, *ea, *eb, *linear);
                Ok((f, -slope.1 / slope.0, self.fsecond_from_first_integral(f, slope.1 / slope.0)))
            }
            Shape::Sampled => {
                let h = self.grid_spacing();
                let pos = u / h;
                let i = pos.floor().to_usize().unwrap_or(0);
                let centre = self.grid.len() / 2;
                let lo = self.grid[(centre + i).min(self.grid.len() - 1)];
                let hi = self.grid[(centre + i + 1).min(self.grid.len() - 1)];
                let w = pos - int::<T>(i as i64);
                let lerp = |a: T, b: T| a + w * (b - a);
                Ok((lerp(lo.f, hi.f), lerp(lo.fprime, hi.fprime), lerp(lo.fsecond, hi.fsecond)))
            }
        }
    }

    /// `(f, (dy/dt, df/dt))` for the incomplete-beta parametrization.
    fn inc_beta_point(&self, t: T, t_c: T, k: T, ea: T, eb: T, linear: bool) -> (T, (T, T)) {
        let c = self.params.c;
        let dy_dt = k * t.powf(ea - T::one()) * t_c.powf(eb - T::one());
        if linear {
            (int::<T>(3) * c * t, (dy_dt, int::<T>(3) * c))
        } else {
            let root = (int::<T>(6) * c).sqrt();
            (root * t.sqrt(), (dy_dt, root / (int::<T>(2) * t.sqrt())))
        }
    }

    /// `f''` from differentiating `(f')^m = G(f)`: `f'' = G'(f) / (m (f')^{m-2})`.
    fn fsecond_from_first_integral(&self, f: T, slope: T) -> T {
        let m = self.params.m;
        first_integral_rhs_deriv(&self.params, f) / (int::<T>(m as i64) * slope.powi(m as i32 - 2))
    }

    fn grid_spacing(&self) -> T {
        let centre = self.grid.len() / 2;
        self.grid[centre + 1].y - self.grid[centre].y
    }

    /// `(f, f', f'')` at any `y`; zero outside the support. At `|y| = y_half`
    /// the slope is the one-sided limit from inside.
    pub fn eval(&self, y: T) -> Result<ProfileSample<T>, ProfileError> {
        let u = y.abs();
        if u > self.y_half {
            return Ok(ProfileSample { y, f: T::zero(), fprime: T::zero(), fsecond: T::zero() });
        }
        let (f, fp, fpp) = self.eval_abs(u)?;
        let f = if u == self.y_half { T::zero() } else { f };
        let fprime = if y < T::zero() { -fp } else { fp };
        Ok(ProfileSample { y, f, fprime, fsecond: fpp })
    }

    /// Half-profile point at parameter `t ∈ (0, 1)`; `t_left = t` and
    /// `t_right = 1 - t` are passed separately to keep the endpoint
    /// singularities accurate.
    pub fn half_point(&self, t_left: T, t_right: T) -> Result<HalfPoint<T>, ProfileError> {
        match &self.shape {
            Shape::Sin2 | Shape::Cn2 { .. } => {
                let (f, fp, _) = self.eval_abs(self.y_half * t_right)?;
                Ok(HalfPoint { f, slope: fp.abs(), dy_dt: self.y_half })
            }
            Shape::Hyper { hp } => {
                let m = int::<T>(self.params.m as i64);
                let one_minus = one_minus_pow(t_left, t_right, int::<T>(2) * hp.tau);
                let w = one_minus.powf(T::one() / m);
                Ok(HalfPoint {
                    f: hp.amplitude * t_left.powf(hp.a_exp),
                    slope: hp.amplitude * hp.a_exp * hp.beta_w * t_left.powf(hp.a_exp - T::one()) * w,
                    dy_dt: T::one() / (hp.beta_w * w),
                })
            }
            Shape::IncBeta { k, ea, eb, linear } => {
                let (f, (dy_dt, df_dt)) = self.inc_beta_point(t_left, t_right, *k, *ea, *eb, *linear);
                Ok(HalfPoint { f, slope: df_dt / dy_dt, dy_dt })
            }
            Shape::Sampled => {
                let s = self.eval(self.y_half * t_right)?;
                Ok(HalfPoint { f: s.f, slope: s.fprime.abs(), dy_dt: self.y_half })
            }
        }
    }

    /// `∫ g(f, |f'|) dy` over the whole line: twice the half-profile integral,
    /// by tanh-sinh in the family's own parameter. Sampled profiles use
    /// composite Simpson on the grid.
    pub fn integrate<G>(&self, mut g: G, tol: T) -> Result<QuadratureResult<T>, ProfileError>
    where
        G: FnMut(T, T) -> T,
    {
        let two = int::<T>(2);
        if let Shape::Sampled = self.shape {
            return Ok(self.simpson(&mut g));
        }
        let mut failure = None;
        let r = integrate_endpoints(
            |_, dl, dr| match self.half_point(dl, dr) {
                Ok(hp) => g(hp.f, hp.slope) * hp.dy_dt,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::zero()
                }
            },
            T::zero(),
            T::one(),
            tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let r = r?;
        Ok(QuadratureResult { value: two * r.value, est_abs_error: two * r.est_abs_error, evaluations: r.evaluations })
    }

    fn simpson<G: FnMut(T, T) -> T>(&self, g: &mut G) -> QuadratureResult<T> {
        let h = self.grid_spacing();
        let vals: Vec<T> = self.grid.iter().map(|s| g(s.f, s.fprime.abs())).collect();
        let n = vals.len() - 1;
        let mut simpson = vals[0] + vals[n];
        let mut trap = (vals[0] + vals[n]) / int::<T>(2);
        for (i, &v) in vals.iter().enumerate().take(n).skip(1) {
            simpson = simpson + v * if i % 2 == 1 { int::<T>(4) } else { int::<T>(2) };
            trap = trap + v;
        }
        let simpson = simpson * h / int::<T>(3);
        let trap = trap * h;
        QuadratureResult { value: simpson, est_abs_error: (simpson - trap).abs(), evaluations: vals.len() }
    }

    /// CSV with a `#` header line recording the parameters, then `y,f,fprime`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "# family={} l={} p={} m={} c={} A={:.16e} beta_w={:.16e} y_half={:.16e}",
            self.family.map_or("sampled", ProfileFamily::name),
            self.params.l,
            self.params.p,
            self.params.m,
            self.params.c,
            to_f64(self.amplitude),
            to_f64(self.beta_w),
            to_f64(self.y_half)
        )?;
        writeln!(out, "y,f,fprime")?;
        for s in &self.grid {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", to_f64(s.y), to_f64(s.f), to_f64(s.fprime))?;
        }
        Ok(())
    }
}

/// `1 - x^e` computed from both `x` and `1 - x` so it stays accurate near `x = 1`.
fn one_minus_pow<T: Real>(x: T, x_c: T, e: T) -> T {
    if x_c < cst(0.5) {
        -(e * (-x_c).ln_1p()).exp_m1()
    } else {
        T::one() - x.powf(e)
    }
}

/// Largest `|(c/2) f^{2-p} - f^{l-p}/(l(l-1)) - |f'|^m|` over interior
/// samples with `f > 0`, relative to `(c/2) A^{2-p}`.
pub fn first_integral_residual<T: Real>(profile: &CompactonProfile<T>) -> T {
    let params = &profile.params;
    if !(profile.amplitude > T::zero()) {
        return T::zero();
    }
    let scale = params.c / int::<T>(2) * profile.amplitude.powf(int::<T>(2) - params.p);
    profile
        .grid
        .iter()
        .filter(|s| s.y.abs() < profile.y_half && s.f > T::zero())
        .map(|s| (first_integral_rhs(params, s.f) - s.fprime.abs().powi(params.m as i32)).abs() / scale)
        .fold(T::zero(), T::max)
}

/// Weak-solution patching test at both edges: `|f'|^m f^p` and `f` must
/// extrapolate to zero from the three outermost interior samples, and the
/// edge sample itself must vanish.
pub fn weak_solution_check<T: Real>(profile: &CompactonProfile<T>) -> bool {
    let params = &profile.params;
    let flux = |s: &ProfileSample<T>| s.fprime.abs().powi(params.m as i32) * s.f.abs().powf(params.p);
    let interior: Vec<&ProfileSample<T>> = profile.grid.iter().filter(|s| s.y.abs() < profile.y_half).collect();
    if interior.len() < 6 {
        return false;
    }
    let flux_max = interior.iter().map(|s| flux(s)).fold(T::zero(), T::max);
    let f_max = interior.iter().map(|s| s.f.abs()).fold(T::zero(), T::max);
    if f_max == T::zero() {
        return true;
    }
    let tol = cst::<T>(1e-2);
    let edge_ok = |outer: [&ProfileSample<T>; 3], edge: Option<&ProfileSample<T>>| {
        let d = outer.map(|s| profile.y_half - s.y.abs());
        let q0 = extrapolate_to_zero(d, outer.map(flux));
        let f0 = extrapolate_to_zero(d, outer.map(|s| s.f));
        let edge_f = edge.map_or(T::zero(), |s| s.f.abs());
        q0.abs() <= tol * flux_max.max(T::min_positive_value())
            && f0.abs() <= tol * f_max
            && edge_f <= cst::<T>(1e-12) * f_max
    };
    let n = interior.len();
    let left = edge_ok([interior[2], interior[1], interior[0]], profile.grid.first());
    let right = edge_ok([interior[n - 3], interior[n - 2], interior[n - 1]], profile.grid.last());
    left && right
}

/// Quadratic through `(d_i, v_i)` evaluated at `d = 0`.
fn extrapolate_to_zero<T: Real>(d: [T; 3], v: [T; 3]) -> T {
    let mut acc = T::zero();
    for i in 0..3 {
        let mut w = T::one();
        for j in 0..3 {
            if i != j {
                w = w * d[j] / (d[j] - d[i]);
            }
        }
        acc = acc + w * v[i];
    }
    acc
}
