use crate::real::{cst, int, to_f64, Real};

use super::SpecFunError;

// Shift point for the asymptotic series; 8 terms at x >= 15 are below
// double-precision rounding.
const STIRLING_MIN: f64 = 15.0;

// B_{2k} / (2k (2k-1)), k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

fn ln_gamma_stirling<T: Real>(x: T) -> T {
    let half = cst::<T>(0.5);
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut series = T::zero();
    let mut pow = inv;
    for &b in STIRLING.iter() {
        series = series + cst::<T>(b) * pow;
        pow = pow * inv2;
    }
    (x - half) * x.ln() - x + half * (T::PI() + T::PI()).ln() + series
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> Result<T, SpecFunError> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(SpecFunError::NonPositiveArgument(to_f64(x)));
    }
    let limit = cst::<T>(STIRLING_MIN);
    if x >= limit {
        return Ok(ln_gamma_stirling(x));
    }
    // Γ(x) = Γ(x + k) / (x (x+1) ... (x+k-1))
    let mut shifted = x;
    let mut prod = T::one();
    while shifted < limit {
        prod = prod * shifted;
        shifted = shifted + T::one();
    }
    Ok(ln_gamma_stirling(shifted) - prod.ln())
}

fn is_nonpositive_integer<T: Real>(x: T) -> bool {
    x <= T::zero() && x == x.round()
}

// sin(πx) with argument reduction so integer x gives exactly zero
fn sin_pi<T: Real>(x: T) -> T {
    let two = int::<T>(2);
    let r = x - two * (x / two).floor(); // [0, 2)
    if r == T::zero() || r == T::one() {
        return T::zero();
    }
    (T::PI() * r).sin()
}

/// Γ(x) on the real line, by reflection for `x <= 0`.
pub fn gamma<T: Real>(x: T) -> Result<T, SpecFunError> {
    if !x.is_finite() {
        return Err(SpecFunError::DomainError(format!("gamma({})", to_f64(x))));
    }
    if x > T::zero() {
        return Ok(ln_gamma(x)?.exp());
    }
    if is_nonpositive_integer(x) {
        return Err(SpecFunError::Pole(to_f64(x)));
    }
    let one_minus = T::one() - x;
    Ok(T::PI() / (sin_pi(x) * ln_gamma(one_minus)?.exp()))
}

/// `1/Γ(x)`, zero at the poles.
pub fn recip_gamma<T: Real>(x: T) -> Result<T, SpecFunError> {
    if is_nonpositive_integer(x) {
        return Ok(T::zero());
    }
    gamma(x).map(|g| g.recip())
}
