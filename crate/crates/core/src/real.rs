//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate is generic over [`Real`]; the crate root
//! exports [`crate::Scalar`] (`f64`) as the concrete type used by the
//! protocol and CLI layers.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable for profiles, ratings, and gradients.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + FromStr + Display + Debug + Default + Send + Sync + 'static
{
    /// Shorthand for lossless-ish conversion from `f64` literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
