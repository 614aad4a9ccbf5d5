//! Scalar abstractions.
//!
//! The engine's numerics are generic over the working floating-point type
//! (`f32` or `f64`). The time-stepping recurrences are additionally usable
//! with complex scalars, which is how the steppers are exercised on the
//! scalar linear test equation during stability verification.

use num_complex::Complex64;
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};

/// Arithmetic required by the time-stepping stage recurrences.
///
/// Implemented for `f32`/`f64` (production grids) and for [`Complex64`]
/// (the scalar test equation).
pub trait StageScalar: num_traits::Num + NumAssign + Copy + Debug + Send + Sync + 'static {
    /// Embeds a real constant (step sizes, scheme coefficients).
    fn from_real(x: f64) -> Self;
}

impl StageScalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
}

impl StageScalar for f32 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x as f32
    }
}

impl StageScalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Real floating-point scalar backing grids, operators and coefficients.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + StageScalar + std::iter::Sum<Self> + Debug + Display
{
    /// Converts an `f64` literal (parameter tables, weight formulas).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Widens to `f64`; cumulative sums accumulate in the widest
    /// hardware type regardless of the working precision.
    #[inline]
    fn wide(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trips() {
        assert_eq!(f64::lit(0.5), 0.5);
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(0.5f64.wide(), 0.5);
    }

    #[test]
    fn complex_embeds_reals() {
        let z = Complex64::from_real(1.5);
        assert_eq!(z, Complex64::new(1.5, 0.0));
    }
}
