//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! The eigensolvers come from `nalgebra`, so the bound starts at
//! [`RealField`]; `num-traits` supplies the primitive conversions.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the pipeline can run on (`f32` or `f64`).
pub trait Scalar:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("finite scalar")
    }

    /// Tolerance used when deciding that two magnitudes are "the same"
    /// (sign conventions, tie detection).
    #[inline]
    fn tie_tolerance() -> Self {
        Self::default_epsilon().sqrt() * Self::lit(16.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
