use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used by the numeric modules.
///
/// Everything that is not tied to 8-bit pixel data (flows, Gaussians,
/// curve parameters, the optimizer) is written against this trait so the
/// same code runs in `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or measured value into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Residual capacities below this are treated as zero by max-flow.
    fn flow_floor() -> Self;

    /// Absolute tolerance for conservation checks.
    fn conservation_tol() -> Self;
}

impl Scalar for f32 {
    fn flow_floor() -> Self {
        1e-6
    }

    fn conservation_tol() -> Self {
        1e-4
    }
}

impl Scalar for f64 {
    fn flow_floor() -> Self {
        1e-12
    }

    fn conservation_tol() -> Self {
        1e-9
    }
}
