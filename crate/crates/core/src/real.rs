//! Generic real scalar trait and complex helpers.
//!
//! Core math is written against [`Real`] so the same code runs in `f32` and
//! `f64`. `nalgebra::RealField` supplies transcendental functions and the
//! linear-algebra bounds, `num_traits::FromPrimitive` supplies literal
//! conversion.

use crate::Cx;
use num_traits::FromPrimitive;

/// Real scalar type usable throughout the library: `f32` or `f64`.
pub trait Real: nalgebra::RealField + FromPrimitive + Copy + Default {}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` literal to the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal not representable in scalar type")
}

/// Complex zero.
#[inline]
pub fn czero<T: Real>() -> Cx<T> {
    Cx::new(T::zero(), T::zero())
}

/// Complex one.
#[inline]
pub fn cone<T: Real>() -> Cx<T> {
    Cx::new(T::one(), T::zero())
}

/// Complex from a real part.
#[inline]
pub fn creal<T: Real>(re: T) -> Cx<T> {
    Cx::new(re, T::zero())
}

/// `e^{j theta}`.
#[inline]
pub fn expj<T: Real>(theta: T) -> Cx<T> {
    Cx::new(theta.cos(), theta.sin())
}

/// |z|, written out so it only needs the `Real` bound.
#[inline]
pub fn cabs<T: Real>(z: Cx<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Phase of `z` in (-pi, pi]; zero for z = 0.
#[inline]
pub fn carg<T: Real>(z: Cx<T>) -> T {
    if z.norm_sqr() == T::zero() {
        T::zero()
    } else {
        z.im.atan2(z.re)
    }
}

/// z / |z|, or 1 when z is (near) zero.
#[inline]
pub fn unit_phase<T: Real>(z: Cx<T>) -> Cx<T> {
    let n = cabs(z);
    if n <= T::zero() {
        cone()
    } else {
        z / creal(n)
    }
}

/// z^x for real exponent x, principal branch.
pub fn cpowf<T: Real>(z: Cx<T>, x: T) -> Cx<T> {
    let r = cabs(z);
    if r == T::zero() {
        return czero();
    }
    let mag = (x * r.ln()).exp();
    expj(carg(z) * x) * creal(mag)
}

/// z^n for a nonnegative integer exponent, by repeated squaring.
pub fn cpowu<T: Real>(z: Cx<T>, mut n: u64) -> Cx<T> {
    let mut base = z;
    let mut acc = cone::<T>();
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}
