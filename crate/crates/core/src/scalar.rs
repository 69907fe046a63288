//! Floating point abstraction shared by every numeric module.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real scalar the inference engine is written against: `f32` or `f64`.
///
/// Everything numeric (whitened factors, decision-tree potentials, poses)
/// is generic over this trait; the crate root re-exports `f64` aliases.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Display + Debug + Send + Sync + 'static
{
    /// Relative pivot tolerance used to declare a triangular factor rank deficient.
    fn rank_tolerance() -> Self;

    /// Allowed deviation of a conditional probability table row sum from 1.
    fn probability_tolerance() -> Self;

    fn infinity() -> Self;
}

impl Scalar for f32 {
    fn rank_tolerance() -> Self {
        1e-6
    }

    fn probability_tolerance() -> Self {
        1e-5
    }

    fn infinity() -> Self {
        f32::INFINITY
    }
}

impl Scalar for f64 {
    fn rank_tolerance() -> Self {
        1e-12
    }

    fn probability_tolerance() -> Self {
        1e-12
    }

    fn infinity() -> Self {
        f64::INFINITY
    }
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("scalar conversion from f64")
}

/// Converts a working scalar into `f64` (for reporting and I/O).
#[inline]
pub fn to_f64<T: Scalar>(value: T) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `ln(2π)`.
#[inline]
pub fn ln_two_pi<T: Scalar>() -> T {
    T::two_pi().ln()
}
