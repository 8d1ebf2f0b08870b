use crate::real::{cst, int, to_f64, Real};

use super::{gamma, recip_gamma, SpecFunError, SpecFunResult};

const MAX_TERMS: usize = 5000;
// Above this the series is replaced by the 1-z connection formula.
const SERIES_LIMIT: f64 = 0.75;

fn nonpositive_integer<T: Real>(x: T) -> bool {
    x <= T::zero() && x == x.round()
}

fn args(a: f64, b: f64, c: f64, z: f64) -> String {
    format!("2F1({a}, {b}; {c}; {z})")
}

/// Term-by-term Gauss series, valid for `|z| < 1` (or terminating).
pub fn gauss_2f1_series<T: Real>(a: T, b: T, c: T, z: T) -> Result<SpecFunResult<T>, SpecFunError> {
    if nonpositive_integer(c) {
        return Err(SpecFunError::Pole(to_f64(c)));
    }
    let terminating = nonpositive_integer(a) || nonpositive_integer(b);
    if !terminating && !(z.abs() < T::one()) {
        return Err(SpecFunError::DomainError(args(to_f64(a), to_f64(b), to_f64(c), to_f64(z))));
    }
    let mut term = T::one();
    let mut sum = T::one();
    let mut abs_sum = T::one();
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let kk = int::<T>(k as i64);
        term = term * (a + kk) * (b + kk) / ((c + kk) * (kk + T::one())) * z;
        sum = sum + term;
        abs_sum = abs_sum + term.abs();
        if term == T::zero() {
            return Ok(SpecFunResult { value: sum, est_abs_error: T::epsilon() * abs_sum });
        }
        if term.abs() <= T::epsilon() * sum.abs() {
            small += 1;
            if small >= 3 {
                // geometric tail bound with ratio ~ |z|
                let tail = term.abs() * z.abs() / (T::one() - z.abs());
                return Ok(SpecFunResult {
                    value: sum,
                    est_abs_error: tail + cst::<T>(4.0) * T::epsilon() * abs_sum,
                });
            }
        } else {
            small = 0;
        }
    }
    Err(SpecFunError::ConvergenceFailure(args(to_f64(a), to_f64(b), to_f64(c), to_f64(z))))
}

/// Evaluation through the `z → 1 - z` connection formula. Requires
/// `c - a - b` non-integer unless `z == 1`, where Gauss's summation
/// `Γ(c)Γ(c-a-b) / (Γ(c-a)Γ(c-b))` is used (needs `c - a - b > 0`).
pub fn gauss_2f1_connection<T: Real>(a: T, b: T, c: T, z: T) -> Result<SpecFunResult<T>, SpecFunError> {
    let desc = || args(to_f64(a), to_f64(b), to_f64(c), to_f64(z));
    if nonpositive_integer(c) {
        return Err(SpecFunError::Pole(to_f64(c)));
    }
    let s = c - a - b;
    let g_c = gamma(c)?;
    if z == T::one() {
        if !(s > T::zero()) {
            return Err(SpecFunError::ConvergenceFailure(format!("{} diverges at z = 1", desc())));
        }
        let value = g_c * gamma(s)? * recip_gamma(c - a)? * recip_gamma(c - b)?;
        return Ok(SpecFunResult { value, est_abs_error: cst::<T>(16.0) * T::epsilon() * value.abs() });
    }
    if s == s.round() {
        return Err(SpecFunError::ConvergenceFailure(format!(
            "{}: integer c-a-b needs the logarithmic connection formula",
            desc()
        )));
    }
    let w = T::one() - z;
    let first = gauss_2f1_series(a, b, T::one() - s, w)?;
    let second = gauss_2f1_series(c - a, c - b, T::one() + s, w)?;
    let k1 = g_c * gamma(s)? * recip_gamma(c - a)? * recip_gamma(c - b)?;
    let k2 = g_c * gamma(-s)? * recip_gamma(a)? * recip_gamma(b)? * w.powf(s);
    let value = k1 * first.value + k2 * second.value;
    let rounding = cst::<T>(16.0) * T::epsilon() * ((k1 * first.value).abs() + (k2 * second.value).abs());
    Ok(SpecFunResult {
        value,
        est_abs_error: k1.abs() * first.est_abs_error + k2.abs() * second.est_abs_error + rounding,
    })
}

/// `₂F₁(a, b; c; z)` for `z ∈ [0, 1]`, with an error estimate.
pub fn gauss_2f1_with_error<T: Real>(a: T, b: T, c: T, z: T) -> Result<SpecFunResult<T>, SpecFunError> {
    if !(z >= T::zero() && z <= T::one()) {
        return Err(SpecFunError::DomainError(args(to_f64(a), to_f64(b), to_f64(c), to_f64(z))));
    }
    if z <= cst(SERIES_LIMIT) || nonpositive_integer(a) || nonpositive_integer(b) {
        if z == T::one() && !(nonpositive_integer(a) || nonpositive_integer(b)) {
            return gauss_2f1_connection(a, b, c, z);
        }
        gauss_2f1_series(a, b, c, z)
    } else {
        gauss_2f1_connection(a, b, c, z)
    }
}

/// `₂F₁(a, b; c; z)` for `z ∈ [0, 1]`.
pub fn gauss_2f1<T: Real>(a: T, b: T, c: T, z: T) -> Result<T, SpecFunError> {
    gauss_2f1_with_error(a, b, c, z).map(|r| r.value)
}
