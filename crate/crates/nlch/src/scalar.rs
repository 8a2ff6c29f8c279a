//! Scalar abstraction: the solver is generic over the floating-point type.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Floating-point scalar the whole crate is generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; panics only for values a float type
    /// cannot represent at all (never happens for finite literals).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert to scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::of(0.5), 0.5);
        assert_eq!(f32::of(0.25), 0.25_f32);
        assert_eq!(1.5_f64.as_f64(), 1.5);
    }
}
