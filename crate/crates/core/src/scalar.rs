//! Scalar abstraction over the floating-point element type.
//!
//! All weight, activation, and score math in this crate is generic over
//! [`Scalar`], which is `num_traits::Float` plus the handful of extras the
//! recipes need (error function for GELU, round-half-to-even for fixed-point
//! rounding, serde bounds for the wire format). `f64` is the working
//! precision used by the CLI and the verification suites; `f32` is provided
//! for callers that want it.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    ///
    /// Panics if the value is not representable (never happens for the
    /// rational constants emitted by the builders).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Gauss error function, used by the exact GELU.
    fn erf(self) -> Self;

    /// Rounds to the nearest integer, ties to even.
    fn round_half_even(self) -> Self;
}

impl Scalar for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }

    fn round_half_even(self) -> Self {
        f64::round_ties_even(self)
    }
}

impl Scalar for f32 {
    fn erf(self) -> Self {
        libm::erff(self)
    }

    fn round_half_even(self) -> Self {
        f32::round_ties_even(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        assert!((f64::erf(0.0)).abs() < 1e-15);
        assert!((f64::erf(1.0) - 0.8427007929497149).abs() < 1e-15);
        assert!((f64::erf(-1.0) + 0.8427007929497149).abs() < 1e-15);
    }

    #[test]
    fn round_half_even_ties() {
        assert_eq!(2.5f64.round_half_even(), 2.0);
        assert_eq!(3.5f64.round_half_even(), 4.0);
        assert_eq!((-2.5f64).round_half_even(), -2.0);
    }
}
