//! Scalar abstractions shared by the matching, gap and scoring code.
//!
//! Edge weights only need exact ring arithmetic and an order, so integer,
//! rational and floating point types all qualify. Scores are real-valued
//! and go through `exp`, so they require a [`num_traits::Float`].

use std::cmp::Ordering;
use std::fmt::Debug;

use num_traits::{Float, Num, ToPrimitive};

/// Edge-weight scalar used by decoding graphs, matchings and gaps.
///
/// Weights must be non-negative when used as edge costs. Halving is only
/// ever applied to quantities the matching algorithm keeps even, so integer
/// weights stay exact.
pub trait Weight: Copy + PartialOrd + Debug + Num + ToPrimitive + Send + Sync + 'static {
    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// Total order used for heaps and sorting. Incomparable values (NaN)
    /// compare equal.
    fn cmp_weight(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn distance_to(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }
}

impl<T> Weight for T where T: Copy + PartialOrd + Debug + Num + ToPrimitive + Send + Sync + 'static {}

/// Real scalar for scores and free parameters.
pub trait Real: Float + Debug + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("finite f64 converts to any float type")
    }

    fn from_weight<W: Weight>(w: W) -> Self {
        Self::from_f64(w.to_f64().expect("weight converts to f64"))
    }
}

impl Real for f32 {}
impl Real for f64 {}
