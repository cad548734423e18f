//! Floating-point abstraction shared by the closed-form parts of the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Real scalar usable by the density, likelihood and constant formulas.
///
/// Implemented for `f32` and `f64`. The Monte Carlo machinery (sampler,
/// quadrature, argsup search, limit law) runs in `f64` only.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumCast + Sum + Debug + Display + Send + Sync + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Lossy conversion from `f64` literal values.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf<T: Scalar>(z: T) -> T {
    T::lit(0.5) * (-z / T::SQRT_2()).erfc()
}

/// Standard normal survival function, accurate in the upper tail.
#[inline]
pub fn norm_sf<T: Scalar>(z: T) -> T {
    T::lit(0.5) * (z / T::SQRT_2()).erfc()
}

/// Standard normal density.
#[inline]
pub fn norm_pdf<T: Scalar>(z: T) -> T {
    (-(z * z) / T::lit(2.0)).exp() / (T::TAU()).sqrt()
}
