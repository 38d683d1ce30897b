//! Scalar abstraction shared by every numeric module.
//!
//! All channel, estimator and closed-form code is written against [`Real`],
//! which is implemented for `f32` and `f64`. Random draws go through the
//! trait so generic code does not need `Distribution` bounds.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};
use rand::Rng;
use rand_distr::StandardNormal;

pub trait Real:
    Float + FloatConst + NumAssign + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or parameter into this type.
    fn of(x: f64) -> Self;

    /// Widens to `f64` (used for reporting and CSV output).
    fn as_f64(self) -> f64;

    /// One draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from U[0, 1).
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from CN(0, variance): independent real and imaginary parts
    /// each with variance `variance / 2`.
    fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: Self) -> Complex<Self> {
        let scale = (variance / Self::of(2.0)).sqrt();
        let re = Self::standard_normal(rng);
        let im = Self::standard_normal(rng);
        Complex::new(scale * re, scale * im)
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(StandardNormal)
            }

            #[inline]
            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Unit-modulus complex number `e^{j angle}`.
#[inline]
pub fn cis<T: Real>(angle: T) -> Complex<T> {
    Complex::new(angle.cos(), angle.sin())
}
