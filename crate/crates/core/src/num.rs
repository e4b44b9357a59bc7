//! Scalar abstraction for the numeric kernels.
//!
//! Penalty scoring, distribution divergence, language-model probabilities
//! and error rates are generic over [`Real`] so the same code runs at
//! `f32` or `f64`. The crate root exports concrete aliases at `f64`.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable by every numeric kernel in the crate.
pub trait Real: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display {
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar")
    }
    fn from_u64_exact(n: u64) -> Self {
        Self::from_u64(n).expect("u64 representable in scalar")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display {}
