use serde::Serialize;

use crate::real::{cst, int, Real};

use super::NumericsError;

/// Points in the coarse pre-scan of [`minimize_1d`].
pub const DEFAULT_SCAN_POINTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeResult<T> {
    pub argmin: Vec<T>,
    /// Objective re-evaluated at `argmin`.
    pub fmin: T,
    pub iterations: usize,
    pub converged: bool,
    /// Separated basins seen by the 1-d pre-scan (always 1 for Nelder–Mead).
    pub basins: usize,
}

impl<T: Real> MinimizeResult<T> {
    pub fn x(&self) -> T {
        self.argmin[0]
    }

    /// The result, or `NotUnimodal` if the pre-scan saw several basins.
    pub fn unimodal(self) -> Result<Self, NumericsError> {
        if self.basins > 1 {
            Err(NumericsError::NotUnimodal { basins: self.basins })
        } else {
            Ok(self)
        }
    }
}

fn finite_or_inf<T: Real>(v: T) -> T {
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

/// Golden-section minimization on `[lo, hi]` after a 32-point pre-scan.
///
/// Several separated basins in the pre-scan do not abort the search: the best
/// one is refined and the count is reported in `basins`.
pub fn minimize_1d<T, F>(f: F, lo: T, hi: T, tol: T) -> Result<MinimizeResult<T>, NumericsError>
where
    T: Real,
    F: FnMut(T) -> T,
{
    minimize_1d_scanned(f, lo, hi, tol, DEFAULT_SCAN_POINTS)
}

/// [`minimize_1d`] with an explicit number of pre-scan points (at least 3).
pub fn minimize_1d_scanned<T, F>(
    mut f: F,
    lo: T,
    hi: T,
    tol: T,
    scan_points: usize,
) -> Result<MinimizeResult<T>, NumericsError>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(NumericsError::InvalidInterval(lo.to_f64().unwrap_or(f64::NAN), hi.to_f64().unwrap_or(f64::NAN)));
    }
    let n = scan_points.max(3);
    let step = (hi - lo) / int::<T>(n as i64 - 1);
    let xs: Vec<T> = (0..n).map(|i| if i == n - 1 { hi } else { lo + step * int::<T>(i as i64) }).collect();
    let fs: Vec<T> = xs.iter().map(|&x| finite_or_inf(f(x))).collect();

    // local minima of the scan, plateaus counted once
    let mut minima = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && fs[j + 1] == fs[i] {
            j += 1;
        }
        let left_higher = i == 0 || fs[i - 1] > fs[i];
        let right_higher = j == n - 1 || fs[j + 1] > fs[j];
        if left_higher && right_higher && fs[i].is_finite() {
            minima.push(i);
        }
        i = j + 1;
    }
    let best = (0..n)
        .filter(|&i| fs[i].is_finite())
        .min_by(|&a, &b| fs[a].partial_cmp(&fs[b]).unwrap())
        .ok_or(NumericsError::NonFiniteStart)?;
    let basins = minima.len().max(1);

    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(n - 1)];
    let inv_phi = (cst::<T>(5.0).sqrt() - T::one()) / int::<T>(2);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = finite_or_inf(f(x1));
    let mut f2 = finite_or_inf(f(x2));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 500 {
        if (b - a).abs() <= int::<T>(2) * tol {
            converged = true;
            break;
        }
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = finite_or_inf(f(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = finite_or_inf(f(x2));
        }
    }
    let mid = (a + b) / int::<T>(2);
    let mut candidates = [(mid, finite_or_inf(f(mid))), (x1, f1), (x2, f2), (xs[best], fs[best])];
    candidates.sort_by(|p, q| p.1.partial_cmp(&q.1).unwrap());
    let (x, _) = candidates[0];
    Ok(MinimizeResult { argmin: vec![x], fmin: f(x), iterations, converged, basins })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions<T> {
    /// Converged when every vertex lies within this distance of the best.
    pub tol: T,
    pub max_iterations: usize,
    /// Relative size of the initial simplex edge along each axis.
    pub initial_step: T,
}

impl<T: Real> NelderMeadOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        NelderMeadOptions { tol, max_iterations: 5000, initial_step: cst(0.05) }
    }
}

/// Nelder–Mead simplex minimization in one to three dimensions.
pub fn minimize_nd<T, F>(f: F, x0: &[T], tol: T) -> Result<MinimizeResult<T>, NumericsError>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    minimize_nd_with(f, x0, NelderMeadOptions::with_tol(tol))
}

pub fn minimize_nd_with<T, F>(mut f: F, x0: &[T], opts: NelderMeadOptions<T>) -> Result<MinimizeResult<T>, NumericsError>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let dim = x0.len();
    if dim == 0 || dim > 3 {
        return Err(NumericsError::Dimension(dim));
    }
    let mut eval = |x: &[T]| finite_or_inf(f(x));
    let f0 = eval(x0);
    if !f0.is_finite() {
        return Err(NumericsError::NonFiniteStart);
    }
    let mut simplex: Vec<(Vec<T>, T)> = vec![(x0.to_vec(), f0)];
    for i in 0..dim {
        let mut x = x0.to_vec();
        let step = if x[i] != T::zero() { opts.initial_step * x[i] } else { cst(0.00025) };
        x[i] = x[i] + step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let (alpha, gamma, rho, sigma) = (T::one(), int::<T>(2), cst::<T>(0.5), cst::<T>(0.5));
    let combine = |a: &[T], b: &[T], t: T| -> Vec<T> { a.iter().zip(b).map(|(&ai, &bi)| ai + t * (bi - ai)).collect() };

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].0.clone();
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| x.iter().zip(&best).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt())
            .fold(T::zero(), T::max);
        if diameter < opts.tol {
            let fmin = f(&best);
            return Ok(MinimizeResult { argmin: best, fmin, iterations, converged: true, basins: 1 });
        }
        if iterations >= opts.max_iterations {
            return Err(NumericsError::MaxIterations(iterations));
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); dim];
        for (x, _) in &simplex[..dim] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c = *c + xi / int::<T>(dim as i64);
            }
        }
        let worst = simplex[dim].clone();
        let second_worst = simplex[dim - 1].1;

        // centroid + t (worst - centroid)
        let xr = combine(&centroid, &worst.0, -alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = combine(&centroid, &worst.0, -gamma);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = combine(&centroid, &xr, rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = combine(&centroid, &worst.0, rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < worst.1.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let anchor = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x = combine(&anchor, &v.0, sigma);
            let fx = eval(&x);
            *v = (x, fx);
        }
    }
}
