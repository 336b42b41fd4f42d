//! Numeric abstraction for node states.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable as a node state: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Relative slack applied when checking exact real-arithmetic inequalities
    /// against rounded results.
    const RELATIVE_SLACK: Self;

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("every f64 maps to a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("every float maps to f64")
    }
}

impl Scalar for f64 {
    const RELATIVE_SLACK: f64 = 1e-12;
}

impl Scalar for f32 {
    const RELATIVE_SLACK: f32 = 1e-5;
}
