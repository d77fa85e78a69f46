//! Floating-point abstraction for the numeric kernels.
//!
//! Everything downstream is written against [`Scalar`] so the same code
//! runs in `f32` and `f64`; concrete runs use [`crate::Real`].

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable in the simulation kernels.
///
/// The supertraits cover what the kernels actually do: IEEE arithmetic with
/// transcendentals and constants (`Float`/`FloatConst`), conversions from
/// literals and counters (`FromPrimitive`/`ToPrimitive`), in-place
/// accumulation, and thread-safe sharing for the parallel estimators.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`, panicking only for non-finite input
/// (every finite `f64` rounds into `f32` range, possibly to zero or infinity
/// — the conversion itself cannot fail for the literals used here).
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 literal must convert to the scalar type")
}

/// Converts a count into `T` (exact for the magnitudes used here).
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count must convert to the scalar type")
}

/// Validation tolerance for probability sums: `1e-12` where the precision
/// allows it, relaxed to a few epsilon otherwise so `f32` models remain
/// constructible.
#[inline]
pub fn prob_tol<T: Scalar>() -> T {
    real::<T>(1e-12).max(T::epsilon() * real(16.0))
}
