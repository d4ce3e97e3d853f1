//! Scalar abstraction for the transform code.
//!
//! The Chebyshev machinery is written against [`Real`] so it can run in `f32`
//! or `f64`; the crate-root aliases pin `f64`, which is what the estimator
//! stack and all stated tolerances assume.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + 'static {
    /// Lossless widening to `f64` for reporting and ledger math.
    fn to_f64(self) -> f64;

    /// Conversion from `f64` constants; rounds in `f32`.
    fn from_f64_c(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }
}

impl Real for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

/// Euclidean norm of a slice.
pub fn l2_norm<R: Real>(v: &[R]) -> R {
    v.iter()
        .fold(R::zero(), |acc, &x| acc + x * x)
        .sqrt()
}

/// Inner product of two equal-length slices.
pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Largest absolute entry of a slice.
pub fn linf_norm<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |acc, &x| acc.max(x.abs()))
}
