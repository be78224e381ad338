//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All linear algebra runs over `Complex<T>` for a real field `T`. The
//! spectral routines need a genuine field with square roots, so exact
//! rationals are not supported; `f32` and `f64` are.

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar field usable as the base of a block matrix algebra.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Debug + 'static {
    /// Lossy conversion from an `f64` literal or tolerance.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 literal")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

pub(crate) fn cre<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}
