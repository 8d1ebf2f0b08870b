//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the library is generic over: `f32` or `f64`.
///
/// Accuracy targets quoted in the docs assume `f64`; an `f32` instantiation
/// works but every tolerance scales with `T::epsilon()`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn cst<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target scalar")
}

/// Converts an integer into `T`.
#[inline]
pub fn int<T: Real>(n: i64) -> T {
    T::from_i64(n).expect("integer representable in target scalar")
}

/// Lossy view of a scalar as `f64`, for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `|a - b| <= rel * max(|a|, |b|, 1)`: equality of exponents that arrive as
/// user-supplied reals.
#[inline]
pub(crate) fn near<T: Real>(a: T, b: T) -> bool {
    let scale = a.abs().max(b.abs()).max(T::one());
    (a - b).abs() <= cst::<T>(64.0) * T::epsilon() * scale
}
