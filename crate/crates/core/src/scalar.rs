//! Scalar fields the integrators run over.
//!
//! Everything in this crate is generic over [`Scalar`], which covers the real
//! types `f32`/`f64` and their complex counterparts. On the real field the
//! adjoint degenerates to the transpose and conjugation is the identity, so
//! one code path serves both.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Real companion type of a [`Scalar`] (times, norms, singular values).
pub trait RealScalar:
    RealField + Copy + Send + Sync + FromPrimitive + ToPrimitive + 'static
{
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// Real or complex field element.
pub trait Scalar: ComplexField<RealField: RealScalar> + Copy + Send + Sync + 'static {
    /// Field tag: `true` for complex arithmetic.
    const IS_COMPLEX: bool;

    /// Draws a standard normal sample. Complex samples have independent real
    /// and imaginary parts with variance 1/2 each.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Splits into `(re, im)` in double precision.
    fn to_re_im(self) -> (f64, f64);

    /// Builds from `(re, im)`; the imaginary part is dropped on real fields.
    fn from_re_im(re: f64, im: f64) -> Self;
}

/// Shorthand for the real field of `T`.
pub type Real<T> = <T as ComplexField>::RealField;

/// Converts an `f64` constant into the real field of `T`.
#[inline]
pub fn real<T: Scalar>(x: f64) -> Real<T> {
    Real::<T>::from_f64(x).expect("f64 is representable in every supported real field")
}

/// Converts a real value of `T` to `f64`.
#[inline]
pub fn real_to_f64<T: Scalar>(x: Real<T>) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Converts an `f64` constant into `T` (real embedding).
#[inline]
pub fn scalar<T: Scalar>(x: f64) -> T {
    T::from_real(real::<T>(x))
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn to_re_im(self) -> (f64, f64) {
        (self, 0.0)
    }

    fn from_re_im(re: f64, _im: f64) -> Self {
        re
    }
}

impl Scalar for f32 {
    const IS_COMPLEX: bool = false;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn to_re_im(self) -> (f64, f64) {
        (self as f64, 0.0)
    }

    fn from_re_im(re: f64, _im: f64) -> Self {
        re as f32
    }
}

impl Scalar for Complex<f64> {
    const IS_COMPLEX: bool = true;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn to_re_im(self) -> (f64, f64) {
        (self.re, self.im)
    }

    fn from_re_im(re: f64, im: f64) -> Self {
        Complex::new(re, im)
    }
}

impl Scalar for Complex<f32> {
    const IS_COMPLEX: bool = true;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f32 = rng.sample(StandardNormal);
        let im: f32 = rng.sample(StandardNormal);
        Complex::new(re, im) * std::f32::consts::FRAC_1_SQRT_2
    }

    fn to_re_im(self) -> (f64, f64) {
        (self.re as f64, self.im as f64)
    }

    fn from_re_im(re: f64, im: f64) -> Self {
        Complex::new(re as f32, im as f32)
    }
}
