use crate::real::{cst, int, to_f64, Real};

use super::{ln_gamma, SpecFunError};

const MAX_ITER: usize = 500;

pub fn ln_beta<T: Real>(a: T, b: T) -> Result<T, SpecFunError> {
    Ok(ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?)
}

/// Complete beta function `B(a, b)`.
pub fn beta<T: Real>(a: T, b: T) -> Result<T, SpecFunError> {
    ln_beta(a, b).map(T::exp)
}

/// Non-regularized incomplete beta `B_x(a, b) = ∫₀ˣ t^{a-1} (1-t)^{b-1} dt`.
///
/// Continued fraction (modified Lentz) on whichever side of
/// `x = (a+1)/(a+b+2)` converges fastest; the other side goes through
/// `B(a,b) - B_{1-x}(b,a)`.
pub fn inc_beta<T: Real>(x: T, a: T, b: T) -> Result<T, SpecFunError> {
    if !(a > T::zero()) || !(b > T::zero()) {
        return Err(SpecFunError::DomainError(format!(
            "inc_beta requires a, b > 0 (a={}, b={})",
            to_f64(a),
            to_f64(b)
        )));
    }
    if !(x >= T::zero() && x <= T::one()) {
        return Err(SpecFunError::DomainError(format!("inc_beta requires 0 <= x <= 1 (x={})", to_f64(x))));
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x == T::one() {
        return beta(a, b);
    }
    let split = (a + T::one()) / (a + b + int(2));
    if x <= split {
        lower_cf(x, T::one() - x, a, b)
    } else {
        Ok(beta(a, b)? - lower_cf(T::one() - x, x, b, a)?)
    }
}

// x^a (1-x)^b / (a · cf), with xc = 1 - x supplied by the caller
fn lower_cf<T: Real>(x: T, xc: T, a: T, b: T) -> Result<T, SpecFunError> {
    let one = T::one();
    let two = int::<T>(2);
    let tiny = cst::<T>(1e-300).max(T::min_positive_value());
    let eps = T::epsilon();

    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = d.recip();
    let mut h = d;
    let mut converged = false;
    for i in 1..=MAX_ITER {
        let mi = int::<T>(i as i64);
        let m2 = two * mi;
        let aa = mi * (b - mi) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        h = h * d * c;
        let aa = -(a + mi) * (qab + mi) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= eps {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpecFunError::ConvergenceFailure(format!(
            "inc_beta continued fraction (x={}, a={}, b={})",
            to_f64(x),
            to_f64(a),
            to_f64(b)
        )));
    }
    let log_front = a * x.ln() + b * xc.ln();
    Ok(log_front.exp() * h / a)
}
