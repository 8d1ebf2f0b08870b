//! Mass, momentum and energy of compacton profiles, in closed form and by
//! quadrature, and the integral identities exact profiles satisfy.

use std::cell::RefCell;

use serde::Serialize;
use thiserror::Error;

use crate::numerics::{invert_monotone, NumericsError};
use crate::params::{scaling_exponents, ModelParams};
use crate::profile::{hyperelliptic_params, CompactonProfile, ProfileError, ProfileFamily};
use crate::real::{cst, int, near, to_f64, Real};
use crate::specfun::{gamma, SpecFunError};

/// Relative tolerance used for profile quadratures unless a caller overrides it.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConservedError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("Gamma-function pole: {0}")]
    GammaPole(String),
    #[error("momentum {momentum} is unreachable: P does not depend on c for these exponents")]
    MomentumUnreachable { momentum: f64 },
}

impl From<SpecFunError> for ConservedError {
    fn from(e: SpecFunError) -> Self {
        match e {
            SpecFunError::Pole(x) => ConservedError::GammaPole(format!("argument {x}")),
            other => ConservedError::Profile(ProfileError::SpecFun(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedSet<T> {
    pub mass: T,
    pub momentum: T,
    pub energy: T,
    pub source: Source,
}

/// `I₂ = ∫f²`, `I_l = ∫f^l` and `J = ∫f^p |f'|^m` over the whole line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralSet<T> {
    pub i2: T,
    pub il: T,
    pub jmp: T,
}

/// Relative residuals of the three identities between `I₂`, `I_l` and `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationResiduals<T> {
    /// `J = (c/2) I₂ - I_l / (l(l-1))`.
    pub energy_split: T,
    /// `J = (l-2)(m-1) c I₂ / (2D)`, `D = l(m-1) + m + p`.
    pub j_from_i2: T,
    /// `I_l = l(l-1)(p+3m-2) c I₂ / (2D)`.
    pub il_from_i2: T,
}

impl<T: Real> RelationResiduals<T> {
    pub fn max(&self) -> T {
        self.energy_split.max(self.j_from_i2).max(self.il_from_i2)
    }
}

fn gamma_arg<T: Real>(x: T) -> Result<T, ConservedError> {
    Ok(gamma(x)?)
}

/// `D = l(m-1) + m + p`, the common denominator of the virial identities.
pub(crate) fn virial_denominator<T: Real>(params: &ModelParams<T>) -> T {
    params.l * (params.m_real() - T::one()) + params.m_real() + params.p
}

/// `E = cP/r` written without `r`'s denominator, so it is finite (zero) on
/// the marginal line `l = p + 3m`.
pub fn energy_from_theorem<T: Real>(params: &ModelParams<T>, momentum: T) -> T {
    let (l, p, m) = (params.l, params.p, params.m_real());
    -params.c * momentum * (p + int::<T>(3) * m - l) / (l * m + p + m - l)
}

/// Closed-form `M`, `P` of the hyperelliptic profile and `E = cP/r`.
pub fn conserved_analytic<T: Real>(params: &ModelParams<T>) -> Result<ConservedSet<T>, ConservedError> {
    if near(params.m_real() + params.p, int(2)) {
        return Err(ConservedError::GammaPole("Z-exponent a = m/(m+p-2) diverges".into()));
    }
    let hp = hyperelliptic_params(params)?;
    let m = params.m_real();
    let one = T::one();
    let two = int::<T>(2);
    let (a, tau) = (hp.a_exp, hp.tau);
    let g = gamma_arg((m - one) / m)?;
    let mass = hp.amplitude * g * gamma_arg((a + one) / (two * tau))?
        / (hp.beta_w * tau * gamma_arg(one - one / m + (one + a) / (two * tau))?);
    let momentum = hp.amplitude * hp.amplitude * g * gamma_arg((two * a + one) / (two * tau))?
        / (two * hp.beta_w * tau * gamma_arg(one - one / m + (one + two * a) / (two * tau))?);
    Ok(ConservedSet { mass, momentum, energy: energy_from_theorem(params, momentum), source: Source::Analytic })
}

pub fn integral_set<T: Real>(profile: &CompactonProfile<T>, tol: T) -> Result<IntegralSet<T>, ConservedError> {
    let (l, p, m) = (profile.params.l, profile.params.p, profile.params.m as i32);
    let i2 = profile.integrate(|f, _| f * f, tol)?.value;
    let il = profile.integrate(|f, _| f.powf(l), tol)?.value;
    let jmp = profile.integrate(|f, s| if f == T::zero() { T::zero() } else { f.powf(p) * s.powi(m) }, tol)?.value;
    Ok(IntegralSet { i2, il, jmp })
}

/// `E = J/(m-1) - I_l/(l(l-1))`.
pub fn energy_from_integrals<T: Real>(params: &ModelParams<T>, ints: &IntegralSet<T>) -> T {
    let l = params.l;
    ints.jmp / (params.m_real() - T::one()) - ints.il / (l * (l - T::one()))
}

pub fn conserved_quadrature<T: Real>(profile: &CompactonProfile<T>, tol: T) -> Result<ConservedSet<T>, ConservedError> {
    let mass = profile.integrate(|f, _| f, tol)?.value;
    let ints = integral_set(profile, tol)?;
    Ok(ConservedSet {
        mass,
        momentum: ints.i2 / int::<T>(2),
        energy: energy_from_integrals(&profile.params, &ints),
        source: Source::Quadrature,
    })
}

fn rel<T: Real>(lhs: T, rhs: T) -> T {
    let scale = lhs.abs().max(rhs.abs());
    if scale == T::zero() {
        T::zero()
    } else {
        (lhs - rhs).abs() / scale
    }
}

pub fn check_relations<T: Real>(params: &ModelParams<T>, ints: &IntegralSet<T>) -> RelationResiduals<T> {
    let (l, p, m, c) = (params.l, params.p, params.m_real(), params.c);
    let two = int::<T>(2);
    let ll = l * (l - T::one());
    let d = virial_denominator(params);
    RelationResiduals {
        energy_split: rel(ints.jmp, c / two * ints.i2 - ints.il / ll),
        j_from_i2: rel(ints.jmp, (l - two) * (m - T::one()) * c * ints.i2 / (two * d)),
        il_from_i2: rel(ints.il, ll * (p + int::<T>(3) * m - two) * c * ints.i2 / (two * d)),
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let n = int::<T>(xs.len() as i64);
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.abs().ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let sxy: T = lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = lx.iter().map(|&x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Speed `c` at which the exact profile carries momentum `P`, by inverting
/// the closed-form `P(c)` in `ln c`.
pub fn speed_for_momentum<T: Real>(params: &ModelParams<T>, momentum: T) -> Result<T, ConservedError> {
    let i2 = scaling_exponents(params).i2;
    if near(i2, T::zero()) || !(momentum > T::zero()) {
        return Err(ConservedError::MomentumUnreachable { momentum: to_f64(momentum) });
    }
    let sign = i2.signum();
    let failure = RefCell::new(None);
    let ln_p = |ln_c: T| -> T {
        let set = params.with_speed(ln_c.exp()).map_err(|e| ConservedError::Profile(e.into())).and_then(|q| conserved_analytic(&q));
        match set {
            Ok(s) => sign * s.momentum.ln(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::nan()
            }
        }
    };
    let span = cst::<T>(60.0);
    let target = sign * momentum.ln();
    let (g_lo, g_hi) = (ln_p(-span), ln_p(span));
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    if !(g_lo <= target && target <= g_hi) {
        return Err(ConservedError::MomentumUnreachable { momentum: to_f64(momentum) });
    }
    let ln_c = invert_monotone(ln_p, -span, span, target, cst::<T>(4.0) * T::epsilon() * target.abs().max(T::one()));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(ln_c?.exp())
}

/// Conserved quantities and identity residuals for one profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservedReport<T> {
    pub params: ModelParams<T>,
    pub family: Option<ProfileFamily>,
    pub mass: T,
    pub momentum: T,
    pub energy: T,
    /// `E ∝ P^{-r}`; absent on the marginal line.
    pub r: Option<T>,
    /// `cP/r` with the quadrature momentum.
    pub energy_theorem: T,
    pub analytic: Option<ConservedSet<T>>,
    pub integrals: IntegralSet<T>,
    pub residuals: RelationResiduals<T>,
}

pub fn conserved_report<T: Real>(profile: &CompactonProfile<T>, tol: T) -> Result<ConservedReport<T>, ConservedError> {
    let params = profile.params;
    let quad = conserved_quadrature(profile, tol)?;
    let ints = integral_set(profile, tol)?;
    let analytic = match profile.family {
        Some(_) => Some(conserved_analytic(&params)?),
        None => None,
    };
    Ok(ConservedReport {
        params,
        family: profile.family,
        mass: quad.mass,
        momentum: quad.momentum,
        energy: quad.energy,
        r: scaling_exponents(&params).r,
        energy_theorem: energy_from_theorem(&params, quad.momentum),
        analytic,
        integrals: ints,
        residuals: check_relations(&params, &ints),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::build_profile;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn mp(l: f64, p: f64, m: u32, c: f64) -> ModelParams<f64> {
        ModelParams::new(l, p, m, c).unwrap()
    }

    const GRID: [(f64, f64, u32); 7] =
        [(3.0, 1.0, 2), (4.0, 1.0, 2), (5.0, 1.0, 4), (6.0, 2.0, 4), (8.0, 2.0, 4), (4.0, 1.0, 6), (5.0, 2.0, 6)];

    #[test]
    fn analytic_matches_quadrature_every_family() {
        for &(l, p, m) in &GRID {
            for &c in &[0.5, 1.0, 2.0] {
                let params = mp(l, p, m, c);
                let exact = conserved_analytic(&params).unwrap();
                let mut families = vec![ProfileFamily::Hyperelliptic, ProfileFamily::default_for(&params)];
                families.extend(
                    [ProfileFamily::IncBetaL3P1, ProfileFamily::IncBetaL4P1].into_iter().filter(|f| f.applies_to(&params)),
                );
                for fam in families {
                    let prof = build_profile(&params, fam, 64).unwrap();
                    let q = conserved_quadrature(&prof, DEFAULT_TOL).unwrap();
                    assert_relative_eq!(q.mass, exact.mass, max_relative = 1e-9);
                    assert_relative_eq!(q.momentum, exact.momentum, max_relative = 1e-9);
                    assert_relative_eq!(q.energy, exact.energy, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn sin2_elementary_integrals() {
        let c = 1.0 / 3.0;
        let params = mp(3.0, 1.0, 2, c);
        let prof = build_profile(&params, ProfileFamily::ClosedSin2, 64).unwrap();
        let ints = integral_set(&prof, 1e-13).unwrap();
        let y_half = PI * 6f64.sqrt();
        // cos^4 averages to 3/8 over the support
        assert_relative_eq!(ints.i2, 9.0 * c * c * 0.375 * 2.0 * y_half, max_relative = 1e-12);
        let q = conserved_quadrature(&prof, DEFAULT_TOL).unwrap();
        assert_relative_eq!(q.momentum, conserved_analytic(&params).unwrap().momentum, max_relative = 1e-10);
        assert_relative_eq!(q.mass, 3.0 * c * y_half, max_relative = 1e-12);
    }

    #[test]
    fn unit_momentum_sin2() {
        let base = mp(3.0, 1.0, 2, 1.0);
        let c = speed_for_momentum(&base, 1.0).unwrap();
        let params = base.with_speed(c).unwrap();
        let s = conserved_analytic(&params).unwrap();
        assert_relative_eq!(s.momentum, 1.0, max_relative = 1e-13);
        // amplitude 3c = 2^{5/4} 3^{-3/4} π^{-1/2}
        assert_relative_eq!(3.0 * c, 2f64.powf(1.25) * 3f64.powf(-0.75) / PI.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(s.energy, c / -1.5, max_relative = 1e-12);
    }

    #[test]
    fn zero_profile() {
        let prof = CompactonProfile::zero(&mp(3.0, 1.0, 2, 1.0), 3.0, 64).unwrap();
        let q = conserved_quadrature(&prof, DEFAULT_TOL).unwrap();
        assert_eq!((q.mass, q.momentum, q.energy), (0.0, 0.0, 0.0));
        let ints = integral_set(&prof, DEFAULT_TOL).unwrap();
        assert_eq!(check_relations(&prof.params, &ints).max(), 0.0);
    }

    #[test]
    fn relations_hold_on_exact_profiles() {
        for &(l, p, m) in &GRID {
            let params = mp(l, p, m, 1.3);
            let prof = build_profile(&params, ProfileFamily::default_for(&params), 64).unwrap();
            let res = check_relations(&params, &integral_set(&prof, DEFAULT_TOL).unwrap());
            assert!(res.max() < 1e-9, "({l},{p},{m}): {res:?}");
        }
    }

    #[test]
    fn relations_fail_on_bump() {
        let params = mp(3.0, 1.0, 2, 1.0);
        let bump = CompactonProfile::sampled(&params, 2.0, 512, |u| {
            let x = u / 2.0;
            ((1.0 - x * x).powi(3), -3.0 * x * (1.0 - x * x).powi(2))
        })
        .unwrap();
        let res = check_relations(&params, &integral_set(&bump, DEFAULT_TOL).unwrap());
        assert!(res.max() > 0.1, "{res:?}");
    }

    #[test]
    fn gamma_pole_when_a_diverges() {
        let params = mp(3.0, 0.0, 2, 1.0);
        assert!(matches!(conserved_analytic(&params), Err(ConservedError::GammaPole(_))));
    }

    #[test]
    fn energy_momentum_power_law() {
        for &(l, p, m) in &GRID {
            let speeds = [0.5, 0.8, 1.0, 1.6, 2.0];
            let (mut ps, mut es) = (vec![], vec![]);
            for &c in &speeds {
                let params = mp(l, p, m, c);
                let prof = build_profile(&params, ProfileFamily::Hyperelliptic, 64).unwrap();
                let q = conserved_quadrature(&prof, DEFAULT_TOL).unwrap();
                ps.push(q.momentum);
                es.push(q.energy);
            }
            let r = scaling_exponents(&mp(l, p, m, 1.0)).r.unwrap();
            let slope = log_log_slope(&ps, &es);
            assert!((slope + r).abs() < 1e-8, "({l},{p},{m}): {slope} vs {}", -r);
            let i2 = log_log_slope(&speeds, &ps);
            assert!((i2 - scaling_exponents(&mp(l, p, m, 1.0)).i2).abs() < 1e-8);
        }
    }

    #[test]
    fn marginal_line_energy_vanishes() {
        let params = mp(7.0, 1.0, 2, 1.0);
        let s = conserved_analytic(&params).unwrap();
        assert_eq!(s.energy, 0.0);
        assert!(matches!(speed_for_momentum(&params, 1.0), Err(ConservedError::MomentumUnreachable { .. })));
    }

    #[test]
    fn report_serializes() {
        let params = mp(5.0, 1.0, 4, 1.0);
        let prof = build_profile(&params, ProfileFamily::Hyperelliptic, 64).unwrap();
        let rep = conserved_report(&prof, DEFAULT_TOL).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        assert!(v["residuals"]["energy_split"].as_f64().unwrap() < 1e-9);
        assert_eq!(v["family"], "hyperelliptic");
        assert_relative_eq!(rep.energy, rep.energy_theorem, max_relative = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn speed_for_momentum_inverts(l in 2.5f64..8.0, half_m in 1u32..4, p in 0.5f64..2.0, target in 0.05f64..20.0) {
            let m = 2 * half_m;
            let base = mp(l, p, m, 1.0);
            prop_assume!((p + 3.0 * m as f64 - l).abs() > 0.1);
            let c = speed_for_momentum(&base, target).unwrap();
            let got = conserved_analytic(&base.with_speed(c).unwrap()).unwrap().momentum;
            prop_assert!((got - target).abs() <= 1e-10 * target);
        }
    }
}
