use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Tolerance for "sums to one" style checks.
    fn simplex_tol() -> Self {
        let e = Self::epsilon() * Self::lit(256.0);
        e.max(Self::lit(1e-9))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Sums values in a canonical order (ascending by value) so the result does
/// not depend on the order in which the terms were produced.
pub fn canonical_sum<T: Real>(mut terms: Vec<T>) -> T {
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    terms.into_iter().fold(T::zero(), |acc, t| acc + t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sum_ignores_input_order() {
        let a = vec![0.1f64, 1e-17, 0.7, 3.3, 1e-9];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(canonical_sum(a).to_bits(), canonical_sum(b).to_bits());
    }

    #[test]
    fn simplex_tol_scales_with_precision() {
        assert!(f32::simplex_tol() > 1e-6);
        assert_eq!(f64::simplex_tol(), 1e-9);
    }
}
