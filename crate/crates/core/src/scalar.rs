//! Arithmetic shared by plain `f64` evaluation and tape recording.
//!
//! The solvers are written once against [`Scalar`]. Running them on `f64`
//! is the fast path used for grid evaluation; running them on [`Var`]
//! records every step so the result can be differentiated.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::tape::{logaddexp_with_weights, TapeError, Var};

/// Log-domain stand-in for zero. Finite so tapes never hold `-inf`.
pub const LOG_ZERO: f64 = -1e300;

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;

    /// A constant living in the same arithmetic context as `self`.
    fn lift(&self, value: f64) -> Self;

    fn exp(self) -> Self;

    fn ln(self) -> Self;

    fn logaddexp(self, other: Self) -> Self;

    /// Reports a latched arithmetic failure (or a non-finite value).
    fn status(&self) -> Result<(), TapeError>;
}

impl Scalar for f64 {
    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn lift(&self, value: f64) -> Self {
        value
    }

    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }

    #[inline]
    fn ln(self) -> Self {
        libm::log(self)
    }

    #[inline]
    fn logaddexp(self, other: Self) -> Self {
        if self <= LOG_ZERO {
            return other;
        }
        if other <= LOG_ZERO {
            return self;
        }
        logaddexp_with_weights(self, other).0
    }

    fn status(&self) -> Result<(), TapeError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(TapeError::NonFinite { op: "f64" })
        }
    }
}

impl<'t> Scalar for Var<'t> {
    #[inline]
    fn value(&self) -> f64 {
        Var::value(self)
    }

    fn lift(&self, value: f64) -> Self {
        self.tape().constant(value)
    }

    fn exp(self) -> Self {
        Var::exp(self)
    }

    fn ln(self) -> Self {
        Var::ln(self)
    }

    fn logaddexp(self, other: Self) -> Self {
        Var::logaddexp(self, other)
    }

    fn status(&self) -> Result<(), TapeError> {
        self.tape().check()?;
        if self.is_poisoned() {
            return Err(TapeError::NonFinite { op: "var" });
        }
        Ok(())
    }
}

/// Plain values of a slice of scalars.
pub fn values<S: Scalar>(xs: &[S]) -> alloc::vec::Vec<f64> {
    xs.iter().map(Scalar::value).collect()
}
