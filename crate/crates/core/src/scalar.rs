//! Generic scalar abstraction for the numeric core.
//!
//! Every solver, surrogate and optimizer in this crate is written against
//! [`Scalar`] rather than a concrete float, so the same code runs in `f32`
//! or `f64`. Training and the acceptance tolerances assume `f64`; `f32` is
//! available for memory-bound inference experiments.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; the canonical way constants enter
    /// generic code.
    fn from_f64(v: f64) -> Self;

    /// Lossy conversion to `f64`, used at I/O and special-function
    /// boundaries (erf is evaluated in double precision).
    fn as_f64(self) -> f64;

    fn from_usize(v: usize) -> Self {
        Self::from_f64(v as f64)
    }

    fn two() -> Self {
        Self::from_f64(2.0)
    }

    fn half() -> Self {
        Self::from_f64(0.5)
    }
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(<f64 as Scalar>::from_f64(1.5), 1.5);
        assert_eq!(<f32 as Scalar>::from_f64(1.5), 1.5f32);
        assert_eq!(Scalar::as_f64(0.25f32), 0.25);
    }
}
