//! Variational approximations: trial profiles `f = A Z(βy)` at fixed momentum,
//! with the width eliminated analytically and the shape parameter found
//! numerically.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::numerics::{
    integrate_endpoints, integrate_semi_infinite, minimize_1d_scanned, minimize_nd, NumericsError,
};
use crate::params::{scaling_exponents, ModelParams};
use crate::profile::{CompactonProfile, ProfileError};
use crate::real::{cst, int, near, to_f64, Real};
use crate::specfun::{beta as beta_fn, gamma, SpecFunError};

/// Scan range and resolution for the post-Gaussian exponent `n`.
pub const N_RANGE: (f64, f64) = (0.3, 3.0);
pub const N_SCAN: usize = 28;
/// Scan range and resolution for the cos-power exponent `γ`.
pub const GAMMA_RANGE: (f64, f64) = (1.0, 30.0);
pub const GAMMA_SCAN: usize = 32;
/// Closed forms and quadrature must agree to this relative tolerance.
pub const CONSTANT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationalError {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("moment {0} diverges for this shape parameter")]
    DivergentMoment(&'static str),
    #[error("no interior minimum in the width: l = {l} is not below p + 3m = {edge}")]
    NoInteriorMinimum { l: f64, edge: f64 },
    #[error("momentum must be positive, got {0}")]
    NonPositiveMomentum(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialFamily {
    /// `Z = exp(-|z|^{2n})`.
    PostGaussian,
    /// `Z = cos(z)^γ` on `|z| <= π/2`.
    CosPower,
}

impl TrialFamily {
    pub fn name(self) -> &'static str {
        match self {
            TrialFamily::PostGaussian => "post_gaussian",
            TrialFamily::CosPower => "cos_power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

/// Moments of the trial shape `Z`: `C1 = ∫Z^l`, `C2 = ∫Z^p |Z'|^m`,
/// `C5 = ∫Z²`, and the combinations `C3`, `C4` that multiply the powers of
/// `β` in the reduced Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CConstants<T> {
    pub family: TrialFamily,
    pub shape: T,
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub c5: T,
    pub provenance: Provenance,
    pub c1_closed: T,
    pub c2_closed: T,
    pub c5_closed: T,
    /// Post-Gaussian `C1` without the factor for both half-lines, and the
    /// ratio `C1 / printed`.
    pub c1_half_line: Option<T>,
    pub c1_half_line_ratio: Option<T>,
    /// Names of constants whose closed form misses the quadrature value.
    pub discrepant: Vec<&'static str>,
}

struct Moments<T> {
    c1: T,
    c2: T,
    c5: T,
}

fn check_moments<T: Real>(family: TrialFamily, l: T, p: T, m: u32, shape: T) -> Result<(), VariationalError> {
    let mr = int::<T>(m as i64);
    let one = T::one();
    if !(shape > T::zero()) {
        return Err(VariationalError::DivergentMoment("C1"));
    }
    match family {
        TrialFamily::PostGaussian => {
            if !(mr * (int::<T>(2) * shape - one) > -one) || !(l > T::zero()) || !(p + mr > T::zero()) {
                return Err(VariationalError::DivergentMoment("C2"));
            }
        }
        TrialFamily::CosPower => {
            if !(shape * p + (shape - one) * mr + one > T::zero()) {
                return Err(VariationalError::DivergentMoment("C2"));
            }
            if !(shape * l + one > T::zero()) {
                return Err(VariationalError::DivergentMoment("C1"));
            }
        }
    }
    Ok(())
}

fn closed_moments<T: Real>(family: TrialFamily, l: T, p: T, m: u32, shape: T) -> Result<Moments<T>, VariationalError> {
    check_moments(family, l, p, m, shape)?;
    let mr = int::<T>(m as i64);
    let one = T::one();
    let two = int::<T>(2);
    let half = cst::<T>(0.5);
    Ok(match family {
        TrialFamily::PostGaussian => {
            let n = shape;
            let k = one / (two * n);
            let c1 = |x: T| -> Result<T, VariationalError> { Ok(two * x.powf(-k) * gamma(one + k)?) };
            let e = mr - (mr - one) * k;
            let c2 = (two * n).powi(m as i32) / n * (mr + p).powf(-e) * gamma(e)?;
            Moments { c1: c1(l)?, c2, c5: c1(two)? }
        }
        TrialFamily::CosPower => {
            let g = shape;
            Moments {
                c1: beta_fn((g * l + one) / two, half)?,
                c2: g.powi(m as i32) * beta_fn(((g - one) * mr + g * p + one) / two, (mr + one) / two)?,
                c5: beta_fn((two * g + one) / two, half)?,
            }
        }
    })
}

fn quadrature_moments<T: Real>(family: TrialFamily, l: T, p: T, m: u32, shape: T) -> Result<Moments<T>, VariationalError> {
    check_moments(family, l, p, m, shape)?;
    let tol = cst::<T>(1e-13);
    let two = int::<T>(2);
    let one = T::one();
    let mi = m as i32;
    Ok(match family {
        TrialFamily::PostGaussian => {
            let n2 = two * shape;
            let z_pow = |x: T, e: T| -> T { (-e * x.powf(n2)).exp() };
            let c1 = |e: T| -> Result<T, VariationalError> {
                Ok(two * integrate_semi_infinite(|x, _| z_pow(x, e), T::zero(), tol)?.value)
            };
            // Z^p |Z'|^m = (2n)^m x^{(2n-1)m} e^{-(p+m) x^{2n}}
            let c2 = two
                * integrate_semi_infinite(
                    |x, _| {
                        if x == T::zero() {
                            T::zero()
                        } else {
                            n2.powi(mi) * x.powf((n2 - one) * int::<T>(mi as i64)) * z_pow(x, p + int::<T>(mi as i64))
                        }
                    },
                    T::zero(),
                    tol,
                )?
                .value;
            Moments { c1: c1(l)?, c2, c5: c1(two)? }
        }
        TrialFamily::CosPower => {
            let g = shape;
            let half_pi = T::FRAC_PI_2();
            // cos z = sin(π/2 - z), exact near the edge from the right distance
            let c1 = |e: T| -> Result<T, VariationalError> {
                Ok(two * integrate_endpoints(|_, _, dr| dr.sin().powf(g * e), T::zero(), half_pi, tol)?.value)
            };
            let c2 = two
                * integrate_endpoints(
                    |_, dl, dr| {
                        let (cos, sin) = (dr.sin(), dl.sin());
                        g.powi(mi) * cos.powf(g * p + (g - one) * int::<T>(mi as i64)) * sin.powi(mi)
                    },
                    T::zero(),
                    half_pi,
                    tol,
                )?
                .value;
            Moments { c1: c1(l)?, c2, c5: c1(two)? }
        }
    })
}

fn assemble<T: Real>(l: T, p: T, m: u32, mo: &Moments<T>) -> (T, T) {
    let mr = int::<T>(m as i64);
    let two = int::<T>(2);
    let ratio = two / mo.c5;
    let c3 = mo.c1 / (l * (l - T::one())) * ratio.powf(l / two);
    let c4 = mo.c2 / (mr - T::one()) * ratio.powf((p + mr) / two);
    (c3, c4)
}

/// Closed-form constants only; used inside the shape optimizations.
pub fn c_constants_closed<T: Real>(
    l: T,
    p: T,
    m: u32,
    shape: T,
    family: TrialFamily,
) -> Result<CConstants<T>, VariationalError> {
    let mo = closed_moments(family, l, p, m, shape)?;
    let (c3, c4) = assemble(l, p, m, &mo);
    Ok(CConstants {
        family,
        shape,
        c1: mo.c1,
        c2: mo.c2,
        c3,
        c4,
        c5: mo.c5,
        provenance: Provenance::ClosedForm,
        c1_closed: mo.c1,
        c2_closed: mo.c2,
        c5_closed: mo.c5,
        c1_half_line: None,
        c1_half_line_ratio: None,
        discrepant: Vec::new(),
    })
}

/// Constants from quadrature, with the closed forms alongside and any
/// disagreement beyond [`CONSTANT_TOL`] listed in `discrepant`.
pub fn c_constants<T: Real>(l: T, p: T, m: u32, shape: T, family: TrialFamily) -> Result<CConstants<T>, VariationalError> {
    let closed = closed_moments(family, l, p, m, shape)?;
    let quad = quadrature_moments(family, l, p, m, shape)?;
    let (c3, c4) = assemble(l, p, m, &quad);
    let tol = cst::<T>(CONSTANT_TOL);
    let mut discrepant = Vec::new();
    for (name, a, b) in [("C1", quad.c1, closed.c1), ("C2", quad.c2, closed.c2), ("C5", quad.c5, closed.c5)] {
        if (a - b).abs() > tol * a.abs() {
            discrepant.push(name);
        }
    }
    let half_line = match family {
        TrialFamily::PostGaussian => {
            let k = T::one() / (int::<T>(2) * shape);
            Some(l.powf(-k) * gamma(T::one() + k)?)
        }
        TrialFamily::CosPower => None,
    };
    Ok(CConstants {
        family,
        shape,
        c1: quad.c1,
        c2: quad.c2,
        c3,
        c4,
        c5: quad.c5,
        provenance: Provenance::Quadrature,
        c1_closed: closed.c1,
        c2_closed: closed.c2,
        c5_closed: closed.c5,
        c1_half_line: half_line,
        c1_half_line_ratio: half_line.map(|h| quad.c1 / h),
        discrepant,
    })
}

fn check_window<T: Real>(l: T, p: T, m: u32) -> Result<(), VariationalError> {
    let edge = p + int::<T>(3) * int::<T>(m as i64);
    if !(l < edge) || near(l, edge) || !(l > int(2)) {
        return Err(VariationalError::NoInteriorMinimum { l: to_f64(l), edge: to_f64(edge) });
    }
    Ok(())
}

/// `H(β) = -C3 P^{l/2} β^{(l-2)/2} + C4 P^{(p+m)/2} β^{(p+3m-2)/2}`.
pub fn reduced_energy<T: Real>(consts: &CConstants<T>, l: T, p: T, m: u32, momentum: T, beta: T) -> T {
    let mr = int::<T>(m as i64);
    let two = int::<T>(2);
    -consts.c3 * momentum.powf(l / two) * beta.powf((l - two) / two)
        + consts.c4 * momentum.powf((p + mr) / two) * beta.powf((p + int::<T>(3) * mr - two) / two)
}

/// Stationary width of [`reduced_energy`]; a minimum whenever `2 < l < p + 3m`.
pub fn beta_star<T: Real>(momentum: T, consts: &CConstants<T>, l: T, p: T, m: u32) -> Result<T, VariationalError> {
    check_window(l, p, m)?;
    if !(momentum > T::zero()) {
        return Err(VariationalError::NonPositiveMomentum(to_f64(momentum)));
    }
    let mr = int::<T>(m as i64);
    let two = int::<T>(2);
    let q = l - p - int::<T>(3) * mr;
    let ratio = consts.c4 * (p + int::<T>(3) * mr - two) / (consts.c3 * (l - two));
    Ok(momentum.powf((p + mr - l) / q) * ratio.powf(two / q))
}

/// `f` in `H(β*) = f · P^{-r}`.
pub fn energy_prefactor<T: Real>(consts: &CConstants<T>, l: T, p: T, m: u32) -> Result<T, VariationalError> {
    let b1 = beta_star(T::one(), consts, l, p, m)?;
    let two = int::<T>(2);
    let s = p + int::<T>(3) * int::<T>(m as i64);
    Ok(consts.c3 * b1.powf((l - two) / two) * (l - s) / (s - two))
}

/// Optimized trial function at fixed momentum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFunction<T> {
    pub family: TrialFamily,
    pub amplitude: T,
    pub beta: T,
    /// `n` for post-Gaussian, `γ` for cos-power.
    pub shape: T,
    /// Reduced Hamiltonian at the optimum.
    pub energy: T,
    pub momentum: T,
    /// `c = rH/P`.
    pub speed: T,
    /// Post-Gaussian only: `β^{2n}` and `2n` in `A exp(-coef |y|^{2n})`.
    pub coefficient: Option<T>,
    pub exponent: Option<T>,
    pub iterations: usize,
}

impl<T: Real> TrialFunction<T> {
    pub fn eval(&self, y: T) -> T {
        let z = (self.beta * y).abs();
        match self.family {
            TrialFamily::PostGaussian => self.amplitude * (-z.powf(int::<T>(2) * self.shape)).exp(),
            TrialFamily::CosPower => {
                if z >= T::FRAC_PI_2() {
                    T::zero()
                } else {
                    self.amplitude * z.cos().powf(self.shape)
                }
            }
        }
    }

    /// Half-extent beyond which the trial function is zero (cos-power) or
    /// below `1e-16 A` (post-Gaussian).
    pub fn extent(&self) -> T {
        match self.family {
            TrialFamily::PostGaussian => cst::<T>(37.0).powf(T::one() / (int::<T>(2) * self.shape)) / self.beta,
            TrialFamily::CosPower => T::FRAC_PI_2() / self.beta,
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, half_width: T, n_half: usize) -> io::Result<()> {
        writeln!(
            out,
            "# family={} A={:.16e} beta={:.16e} shape={:.16e} H={:.16e} P={:.16e}",
            self.family.name(),
            to_f64(self.amplitude),
            to_f64(self.beta),
            to_f64(self.shape),
            to_f64(self.energy),
            to_f64(self.momentum)
        )?;
        writeln!(out, "y,f")?;
        let n = n_half.max(1) as i64;
        for i in -n..=n {
            let y = half_width * int::<T>(i) / int::<T>(n);
            writeln!(out, "{:.16e},{:.16e}", to_f64(y), to_f64(self.eval(y)))?;
        }
        Ok(())
    }
}

/// Energy at the optimal width for one shape value; `+∞` where a moment
/// diverges, so scans can cross the divergent region.
fn energy_at_shape<T: Real>(params: &ModelParams<T>, momentum: T, family: TrialFamily, shape: T) -> T {
    let (l, p, m) = (params.l, params.p, params.m);
    c_constants_closed(l, p, m, shape, family)
        .and_then(|k| {
            let b = beta_star(momentum, &k, l, p, m)?;
            Ok(reduced_energy(&k, l, p, m, momentum, b))
        })
        .unwrap_or(T::infinity())
}

fn optimize<T: Real>(
    params: &ModelParams<T>,
    momentum: T,
    family: TrialFamily,
    range: (f64, f64),
    scan: usize,
) -> Result<TrialFunction<T>, VariationalError> {
    let (l, p, m) = (params.l, params.p, params.m);
    check_window(l, p, m)?;
    if !(momentum > T::zero()) {
        return Err(VariationalError::NonPositiveMomentum(to_f64(momentum)));
    }
    let res = minimize_1d_scanned(
        |s| energy_at_shape(params, momentum, family, s),
        cst(range.0),
        cst(range.1),
        cst(1e-10),
        scan,
    )?
    .unimodal()?;
    let shape = res.x();
    let consts = c_constants_closed(l, p, m, shape, family)?;
    let beta = beta_star(momentum, &consts, l, p, m)?;
    let energy = reduced_energy(&consts, l, p, m, momentum, beta);
    let amplitude = (int::<T>(2) * beta * momentum / consts.c5).sqrt();
    let r = scaling_exponents(params).r.ok_or(VariationalError::NoInteriorMinimum {
        l: to_f64(l),
        edge: to_f64(p + int::<T>(3) * params.m_real()),
    })?;
    let two_n = int::<T>(2) * shape;
    let post = family == TrialFamily::PostGaussian;
    Ok(TrialFunction {
        family,
        amplitude,
        beta,
        shape,
        energy,
        momentum,
        speed: r * energy / momentum,
        coefficient: post.then(|| beta.powf(two_n)),
        exponent: post.then_some(two_n),
        iterations: res.iterations,
    })
}

/// Best `A exp(-|βy|^{2n})` at momentum `P`.
pub fn optimize_post_gaussian<T: Real>(params: &ModelParams<T>, momentum: T) -> Result<TrialFunction<T>, VariationalError> {
    optimize(params, momentum, TrialFamily::PostGaussian, N_RANGE, N_SCAN)
}

/// Best `A cos(βy)^γ` at momentum `P`.
pub fn optimize_cos_power<T: Real>(params: &ModelParams<T>, momentum: T) -> Result<TrialFunction<T>, VariationalError> {
    optimize(params, momentum, TrialFamily::CosPower, GAMMA_RANGE, GAMMA_SCAN)
}

/// Reduced Hamiltonian of the cos-power trial at free `(β, γ)`.
pub fn cos_power_energy<T: Real>(params: &ModelParams<T>, momentum: T, beta: T, gamma_shape: T) -> T {
    let (l, p, m) = (params.l, params.p, params.m);
    if !(beta > T::zero()) {
        return T::infinity();
    }
    c_constants_closed(l, p, m, gamma_shape, TrialFamily::CosPower)
        .map(|k| reduced_energy(&k, l, p, m, momentum, beta))
        .unwrap_or(T::infinity())
}

/// Joint Nelder–Mead over `(β, γ)`; a cross-check of [`optimize_cos_power`].
pub fn optimize_cos_power_joint<T: Real>(
    params: &ModelParams<T>,
    momentum: T,
    start: [T; 2],
    tol: T,
) -> Result<(T, T, T), VariationalError> {
    let r = minimize_nd(|x: &[T]| cos_power_energy(params, momentum, x[0], x[1]), &start, tol)?;
    Ok((r.argmin[0], r.argmin[1], r.fmin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileDistance<T> {
    pub l2: T,
    pub sup: T,
}

/// `L²` and sup distance between an exact profile and a trial function,
/// on the exact grid merged with a uniform grid over the trial's extent.
pub fn compare_profiles<T: Real>(
    exact: &CompactonProfile<T>,
    trial: &TrialFunction<T>,
) -> Result<ProfileDistance<T>, VariationalError> {
    let reach = exact.y_half.max(trial.extent());
    let n = exact.grid.len().max(257);
    let mut ys: Vec<T> = exact.grid.iter().map(|s| s.y).collect();
    ys.extend((0..n).map(|i| -reach + int::<T>(2) * reach * int::<T>(i as i64) / int::<T>(n as i64 - 1)));
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    let mut diffs = Vec::with_capacity(ys.len());
    for &y in &ys {
        diffs.push(exact.eval(y)?.f - trial.eval(y));
    }
    let sup = diffs.iter().fold(T::zero(), |a, d| a.max(d.abs()));
    let mut l2 = T::zero();
    for i in 1..ys.len() {
        l2 = l2 + (ys[i] - ys[i - 1]) * (diffs[i] * diffs[i] + diffs[i - 1] * diffs[i - 1]) / int::<T>(2);
    }
    Ok(ProfileDistance { l2: l2.sqrt(), sup })
}

/// Distance between two trial functions on a uniform grid over the wider extent.
pub fn compare_trials<T: Real>(a: &TrialFunction<T>, b: &TrialFunction<T>, n: usize) -> ProfileDistance<T> {
    let reach = a.extent().max(b.extent());
    let n = n.max(2);
    let h = int::<T>(2) * reach / int::<T>(n as i64 - 1);
    let d: Vec<T> = (0..n)
        .map(|i| {
            let y = -reach + h * int::<T>(i as i64);
            a.eval(y) - b.eval(y)
        })
        .collect();
    let sup = d.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
    let l2 = d.windows(2).map(|w| h * (w[0] * w[0] + w[1] * w[1]) / int::<T>(2)).sum::<T>();
    ProfileDistance { l2: l2.sqrt(), sup }
}
