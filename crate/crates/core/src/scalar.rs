//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Display
    + Debug
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex column vector.
pub type CVec<T> = DVector<Complex<T>>;
/// Dense complex matrix.
pub type CMat<T> = DMatrix<Complex<T>>;

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("finite scalar")
}

#[inline]
pub(crate) fn abs<T: Real>(x: T) -> T {
    if x < T::zero() {
        -x
    } else {
        x
    }
}

#[inline]
pub(crate) fn maxr<T: Real>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

#[inline]
pub(crate) fn minr<T: Real>(a: T, b: T) -> T {
    if a <= b {
        a
    } else {
        b
    }
}

/// `‖v‖²` without the square root.
pub(crate) fn norm_sqr<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// `a^H b`.
pub(crate) fn inner<T: Real>(a: &CVec<T>, b: &CVec<T>) -> Complex<T> {
    a.iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// `|z|`.
#[inline]
pub(crate) fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

#[inline]
pub(crate) fn polar<T: Real>(r: T, theta: T) -> Complex<T> {
    Complex::new(r * theta.cos(), r * theta.sin())
}

#[inline]
pub(crate) fn infinity<T: Real>() -> T {
    lit(f64::INFINITY)
}
