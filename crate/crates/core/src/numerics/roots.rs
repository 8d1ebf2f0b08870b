use crate::real::{cst, int, to_f64, Real};

use super::NumericsError;

const MAX_ITER: usize = 200;

/// Solves `g(x) = target` for increasing `g` on `[lo, hi]` with Brent's
/// bracketed method. Stops once `|g(x) - target| <= tol` or the bracket
/// has collapsed to rounding level.
pub fn invert_monotone<T, G>(mut g: G, lo: T, hi: T, target: T, tol: T) -> Result<T, NumericsError>
where
    T: Real,
    G: FnMut(T) -> T,
{
    if !(lo <= hi) {
        return Err(NumericsError::InvalidInterval(to_f64(lo), to_f64(hi)));
    }
    let g_lo = g(lo);
    let g_hi = g(hi);
    if !(g_lo <= target && target <= g_hi) {
        return Err(NumericsError::TargetOutOfBracket {
            target: to_f64(target),
            g_lo: to_f64(g_lo),
            g_hi: to_f64(g_hi),
        });
    }
    if (g_lo - target).abs() <= tol {
        return Ok(lo);
    }
    if (g_hi - target).abs() <= tol {
        return Ok(hi);
    }

    // zeroin on h(x) = g(x) - target; h(a) < 0 < h(b)
    let two = int::<T>(2);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (g_lo - target, g_hi - target);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + cst::<T>(0.5) * T::min_positive_value();
        let xm = (c - b) / two;
        if fb.abs() <= tol || xm.abs() <= tol1 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = int::<T>(3) * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b = b + d;
        } else {
            b = b + if xm > T::zero() { tol1 } else { -tol1 };
        }
        fb = g(b) - target;
    }
    Ok(b)
}
