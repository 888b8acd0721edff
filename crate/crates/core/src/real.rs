//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01};

/// Floating point type the models are written against.
///
/// Implemented for `f32` and `f64`. Besides the usual arithmetic bounds the
/// trait carries the handful of random variates the samplers need, so generic
/// code never has to repeat `Exp1: Distribution<T>` style bounds.
pub trait Real:
    'static
    + Copy
    + Send
    + Sync
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
{
    /// Converts an `f64` literal. Only used for constants that are exactly
    /// or approximately representable in every implementor.
    fn c(x: f64) -> Self;

    /// Lossless (for `f64`) or widening conversion used for error reporting.
    fn as_f64(self) -> f64;

    /// Converts a count.
    fn from_count(n: usize) -> Self {
        Self::c(n as f64)
    }

    /// Draws from Gamma(shape, 1).
    fn sample_unit_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;

    /// Draws from Exp(1).
    fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws from the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn c(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn sample_unit_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
                match Gamma::<$t>::new(shape, 1.0) {
                    Ok(d) => d.sample(rng),
                    Err(_) => <$t>::NAN,
                }
            }

            #[inline]
            fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <Exp1 as Distribution<$t>>::sample(&Exp1, rng)
            }

            #[inline]
            fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <Open01 as Distribution<$t>>::sample(&Open01, rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
