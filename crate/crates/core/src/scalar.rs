//! Floating-point abstraction shared by the numerical core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used by sparse kernels, product graphs, spectral routines and filters.
///
/// Implemented for `f32` and `f64`. Everything above the filter layer (training,
/// perturbation experiments) is fixed to `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Entries with magnitude at or below this are never stored in a sparse matrix.
    fn drop_tolerance() -> Self {
        Self::of(1e-15)
    }

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Conversion from a count (matrix dimensions, polynomial degrees).
    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("count is representable in every Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
