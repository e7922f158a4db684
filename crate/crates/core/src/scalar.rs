//! Scalar abstraction for image samples.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point sample type the whole crate is generic over.
///
/// Implemented for `f32` and `f64`. File I/O and the solver default to
/// `f64` (see the crate-root aliases); `f32` is available for callers
/// that want to trade precision for memory.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossless-ish conversion from `f64` parameters (kernel weights,
    /// step sizes). Panics only if the value is not representable at
    /// all, which cannot happen for finite inputs.
    fn of_f64(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts to Scalar")
    }

    /// Widening conversion used for reporting (norms, residuals, PSNR).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
