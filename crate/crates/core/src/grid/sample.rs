use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Scalar type stored in a [`Grid`](super::Grid): `f64` for CT images and
/// sinograms, `Complex64` for MRI images and k-space.
///
/// Inner products use the real part of `conj(a) * b`, which makes every
/// complex-linear operator with a Hermitian adjoint self-adjoint in the
/// sense conjugate gradients needs.
pub trait Sample:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    /// Number of real channels (1 for real, 2 for complex).
    const CHANNELS: usize;

    fn zero() -> Self;
    fn norm_sqr(self) -> f64;
    fn re_dot(self, other: Self) -> f64;
    /// Full complex inner-product term `conj(self) * other`.
    fn conj_dot(self, other: Self) -> Complex64;
    fn is_finite(self) -> bool;
    fn to_complex(self) -> Complex64;
    /// Real channel `c` (`0` = real part, `1` = imaginary part).
    fn channel(self, c: usize) -> f64;
    /// Build from per-channel values; extra channels are ignored.
    fn from_channels(ch: &[f64]) -> Self;
    /// Magnitude, used for display and structural metrics.
    fn magnitude(self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl Sample for f64 {
    const CHANNELS: usize = 1;

    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn re_dot(self, other: Self) -> f64 {
        self * other
    }
    #[inline]
    fn conj_dot(self, other: Self) -> Complex64 {
        Complex64::new(self * other, 0.0)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    #[inline]
    fn channel(self, _c: usize) -> f64 {
        self
    }
    #[inline]
    fn from_channels(ch: &[f64]) -> Self {
        ch[0]
    }
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Sample for Complex64 {
    const CHANNELS: usize = 2;

    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    #[inline]
    fn re_dot(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }
    #[inline]
    fn conj_dot(self, other: Self) -> Complex64 {
        self.conj() * other
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }
    #[inline]
    fn channel(self, c: usize) -> f64 {
        if c == 0 {
            self.re
        } else {
            self.im
        }
    }
    #[inline]
    fn from_channels(ch: &[f64]) -> Self {
        Complex64::new(ch[0], ch[1])
    }
}
