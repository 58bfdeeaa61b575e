use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssignOps, NumCast};

/// Floating-point element type for networks, datasets, and all math in this
/// crate. Blanket-implemented for `f32` and `f64`; statistics and file
/// formats stay in `f64` regardless of the model's scalar.
pub trait Scalar:
    Float + NumAssignOps + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lossy view as `f64`, for reporting and loss accumulation.
    /// (Named to avoid clashing with `ToPrimitive::to_f64`.)
    fn as_f64(self) -> f64 {
        NumCast::from(self).unwrap_or(f64::NAN)
    }

    /// Conversion from `f64`, for constants and file I/O. `f64 -> f32`
    /// saturates to the infinities rather than failing.
    fn from_f64(value: f64) -> Self {
        NumCast::from(value).unwrap_or_else(|| {
            if value > 0.0 {
                Self::infinity()
            } else {
                Self::neg_infinity()
            }
        })
    }
}

impl<T> Scalar for T where T: Float + NumAssignOps + Sum<T> + Debug + Display + Send + Sync + 'static
{}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_generic<F: Scalar>(values: &[F]) -> F {
        values.iter().copied().sum()
    }

    #[test]
    fn blanket_impl_covers_both_widths() {
        assert_eq!(sum_generic(&[1.0f32, 2.0, 3.0]), 6.0f32);
        assert_eq!(sum_generic(&[1.0f64, 2.0, 3.0]), 6.0f64);
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let x = 0.1f64 + 0.2;
        assert_eq!(<f64 as Scalar>::from_f64(x.as_f64()), x);
    }

    #[test]
    fn from_f64_saturates_outside_f32_range() {
        let big = <f32 as Scalar>::from_f64(1e300);
        assert!(big == f32::INFINITY || big == f32::MAX);
    }
}
