//! Scalar abstraction for the math modules.
//!
//! Everything numerical in this crate is generic over [`Real`], a blanket
//! trait over the `num-traits` float stack. `f64` is the scalar every
//! serialized artifact is pinned to (see the aliases in `lib.rs`); `f32`
//! instantiations compile and run but cannot meet the shipped tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

use crate::numerics::linalg::LinScalar;

pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + LinScalar<Mag = Self>
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
        + LinScalar<Mag = T>
{
}

/// Lossy-by-design conversion from an `f64` literal into the working scalar.
/// Panics only if the scalar type cannot represent ordinary constants, which
/// would make the whole crate unusable anyway.
#[inline]
pub fn cast<T: Real>(x: f64) -> T {
    T::from(x).expect("constant not representable in the scalar type")
}

/// `x.to_f64()` for error reporting; errors are concrete even when the math
/// is generic.
#[inline]
pub(crate) fn approx_f64<T: Real>(x: T) -> f64 {
    num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}
