//! Scalar abstraction for the evaluation maths.
//!
//! Every score in this crate (precision, recall, κ, similarity ratios, shares)
//! is a quotient of integer counts, so the computations only need field
//! operations plus conversion from counts. That lets the same code run on
//! `f32`, `f64` and exact rationals such as `Ratio<i128>`.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A numeric field usable for all metric computations.
pub trait Scalar:
    Num + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Send + Sync + 'static
{
    /// Converts an integer count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// `num / den` computed in the scalar field.
    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    /// Lossy conversion used for display and serialization.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Send + Sync + 'static
{
}
