//! Floating-point scalar abstraction shared by frames, log-space math and
//! the decoder. Implemented for `f32` and `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point: f32 or f64.
pub trait LogFloat:
    Float
    + FromPrimitive
    + NumCast
    + Display
    + LowerExp
    + Debug
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from an `f64` constant.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl LogFloat for f32 {}
impl LogFloat for f64 {}
