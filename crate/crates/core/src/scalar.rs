//! Scalar abstraction shared by every numeric module.
//!
//! All signal-processing and geometry code is written against [`Real`], which
//! is implemented for `f32` and `f64`. The crate root exposes `f64` aliases for
//! the common types.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar usable by the FFT-backed transforms.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + Sum
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count or index into the working scalar.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn deg_to_rad<T: Real>(deg: T) -> T {
    deg * T::PI() / lit(180.0)
}

#[inline]
pub fn rad_to_deg<T: Real>(rad: T) -> T {
    rad * lit(180.0) / T::PI()
}

/// Decibels (power ratio) to linear.
#[inline]
pub fn db_to_linear<T: Real>(db: T) -> T {
    lit::<T>(10.0).powf(db / lit(10.0))
}

/// Linear power ratio to decibels.
#[inline]
pub fn linear_to_db<T: Real>(x: T) -> T {
    lit::<T>(10.0) * x.log10()
}

#[inline]
pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    db_to_linear(dbm - lit(30.0))
}

#[inline]
pub fn watts_to_dbm<T: Real>(w: T) -> T {
    linear_to_db(w) + lit(30.0)
}
