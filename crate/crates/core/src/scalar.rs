//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point element type for images, LUTs and metrics: `f32` or `f64`.
///
/// Reductions always accumulate in `f64` regardless of `Self`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    #[inline(always)]
    fn from_f64_lossy(v: f64) -> Self {
        // f64 -> f32 narrowing never fails for finite input; NaN stays NaN.
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline(always)]
    fn lit(v: f64) -> Self {
        Self::from_f64_lossy(v)
    }

    /// Clamp to [0,1]; NaN maps to 0.
    #[inline(always)]
    fn clamp01(self) -> Self {
        if self > Self::zero() {
            if self < Self::one() {
                self
            } else {
                Self::one()
            }
        } else {
            Self::zero()
        }
    }

    /// Truncating conversion of a non-negative finite value to an index.
    #[inline(always)]
    fn trunc_index(self) -> usize {
        self.to_usize().unwrap_or(0)
    }

    #[inline(always)]
    fn from_index(i: usize) -> Self {
        Self::lit(i as f64)
    }
}

impl Scalar for f32 {
    #[inline(always)]
    fn trunc_index(self) -> usize {
        self as usize
    }

    #[inline(always)]
    fn from_index(i: usize) -> Self {
        i as f32
    }

    #[inline(always)]
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn trunc_index(self) -> usize {
        self as usize
    }

    #[inline(always)]
    fn from_index(i: usize) -> Self {
        i as f64
    }

    #[inline(always)]
    fn from_f64_lossy(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}
