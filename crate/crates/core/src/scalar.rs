//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{ComplexField, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the solvers are generic over: `f32` or `f64`.
///
/// `RealField` supplies the elementary functions and the dense linear
/// algebra, `FftNum` the transforms. Both declare `abs`/`signum`, so crate
/// code goes through [`abs`] instead of method syntax.
pub trait Real: RealField + FftNum + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug {
    /// Unit roundoff.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Converts an `f64` literal into the working precision.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in working precision")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn abs<T: Real>(x: T) -> T {
    <T as ComplexField>::abs(x)
}

#[inline]
pub fn cabs<T: Real>(z: num_complex::Complex<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in working precision")
}

/// `x^p` for the nonlinearity power. Integer powers are evaluated with
/// `powi` so negative arguments are valid on the sign-changing branch.
#[derive(Debug, Clone, Copy)]
pub struct Power<T> {
    pub p: T,
    int: Option<i32>,
}

impl<T: Real> Power<T> {
    pub fn new(p: T) -> Self {
        let pf = to_f64(p);
        let int = if pf.fract() == 0.0 && pf.abs() < 64.0 { Some(pf as i32) } else { None };
        Self { p, int }
    }

    pub fn integer(&self) -> Option<i32> {
        self.int
    }

    pub fn is_even_integer(&self) -> bool {
        matches!(self.int, Some(n) if n > 0 && n % 2 == 0)
    }

    /// `x^(p + shift)` where `shift` is a small integer offset.
    #[inline]
    pub fn pow(&self, x: T, shift: i32) -> T {
        match self.int {
            Some(n) => x.powi(n + shift),
            None => x.powf(self.p + T::from_i32(shift).unwrap()),
        }
    }
}
