use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point element type accepted by every kernel in this crate.
///
/// Implemented for `f32` and `f64`. Special functions and reductions are
/// written once against this trait; tolerances scale with `epsilon()`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn lit(v: f64) -> Self;

    fn from_usize_lossy(v: usize) -> Self {
        Self::lit(v as f64)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }
}
