//! Scalar abstraction shared by the algebraic modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real: Float + FromPrimitive + NumAssign + Debug + Display + LowerExp + Default + Sum + Send + Sync + 'static {
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Tolerance for exact-algebra invariants: `1e-12` in `f64`, a few
    /// hundred ulps in narrower types.
    #[inline]
    fn exact_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(100.0))
    }

    /// Relative threshold for numerical rank decisions.
    #[inline]
    fn rank_tol() -> Self {
        Self::lit(1e-8).max(Self::epsilon() * Self::lit(1000.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_follow_precision() {
        assert_eq!(f64::exact_tol(), 1e-12);
        assert!(f32::exact_tol() > 1e-6);
        assert_eq!(f64::rank_tol(), 1e-8);
    }
}
