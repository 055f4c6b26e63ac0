//! The scalar abstraction underlying all numerics.
//!
//! Everything in this crate is generic over a floating-point scalar so the
//! same code runs in `f64` (the default for all shipped tolerances) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the whole crate: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for literals and parsed input.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    /// Lossy conversion to `f64`, for serialization and display.
    fn f64(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }

    /// A validation tolerance: the stated `f64` value, floored at
    /// `100 * epsilon` so narrower scalars stay usable. For `f64` every
    /// shipped tolerance is above the floor and passes through unchanged.
    fn tol(spec: f64) -> Self {
        Self::of(spec).max(Self::epsilon() * Self::of(100.0))
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
