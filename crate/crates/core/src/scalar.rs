//! Scalar abstraction shared by every numerical layer.
//!
//! Geometry, geodesic integration and the Hadamard transport are written once
//! against [`Real`]. Instantiating them with `f64` gives plain values;
//! instantiating them with a truncated Taylor number ([`crate::jet::Jet`])
//! gives the same quantities together with their derivatives with respect to
//! the base point, which is how `P_g` is applied to two-point coefficients.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{FloatConst, NumAssign};

/// Real-like scalar: a field with the elementary functions used by the
/// expression language.
///
/// `re` exposes the primal value; control flow (pivoting, convergence tests,
/// domain checks) is decided on it.
pub trait Real: Copy + Debug + Send + Sync + 'static + NumAssign + Neg<Output = Self> {
    /// Truncation order of the Taylor expansion carried by the scalar
    /// (0 for plain floats).
    const ORDER: usize = 0;

    fn from_f64(v: f64) -> Self;
    fn re(&self) -> f64;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn scale(self, k: f64) -> Self {
        self * Self::from_f64(k)
    }
}

macro_rules! impl_real_float {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn re(&self) -> f64 {
                *self as f64
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            #[inline]
            fn sin(self) -> Self {
                <$t>::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            #[inline]
            fn sinh(self) -> Self {
                <$t>::sinh(self)
            }
            #[inline]
            fn cosh(self) -> Self {
                <$t>::cosh(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            #[inline]
            fn recip(self) -> Self {
                <$t>::recip(self)
            }
        }
    };
}

impl_real_float!(f32);
impl_real_float!(f64);

/// `π` for any scalar that can be built from an `f64`.
pub fn pi<T: Real>() -> T {
    T::from_f64(f64::PI())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic_poly<T: Real>(x: T) -> T {
        x * x * x.exp() - x.sin().powi(2)
    }

    #[test]
    fn f32_and_f64_agree() {
        let a = generic_poly(0.3f64);
        let b = generic_poly(0.3f32) as f64;
        assert!((a - b).abs() < 1e-6);
    }
}
