//! Scalar abstraction shared by every numeric module.
//!
//! All algorithms are written against [`Real`], which is implemented for
//! `f32` and `f64`. Complex quantities are `num_complex::Complex<T>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

/// Floating-point scalar usable by the certificate machinery.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the value is unrepresentable,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal")
    }

    /// A relative tolerance `base`, widened to a few ulps for narrow types.
    #[inline]
    fn tol(base: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(base).max(floor)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn re<T: Real>(v: T) -> C<T> {
    C::new(v, T::zero())
}

/// Max modulus of a complex vector (zero for an empty slice).
#[inline]
pub(crate) fn max_modulus<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_is_widened_for_f32() {
        assert_eq!(<f64 as Real>::tol(1e-12), 1e-12);
        assert!(<f32 as Real>::tol(1e-12) > 1e-6);
    }
}
