//! Scalar abstraction for the floating-point parts of the pipeline.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the numeric routines are generic over.
///
/// Implemented by `f32` and `f64`. Training, similarity, and coherence code
/// takes any `Real`; persisted vector files are always 32-bit on disk.
pub trait Real:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    fn of_f64(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 conversion")
    }

    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl<T> Real for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm<F: Real>(v: &[F]) -> F {
        v.iter().map(|x| *x * *x).sum::<F>().sqrt()
    }

    #[test]
    fn generic_over_both_widths() {
        assert!((norm::<f32>(&[3.0, 4.0]) - 5.0).abs() < 1e-6);
        assert!((norm::<f64>(&[3.0, 4.0]) - 5.0).abs() < 1e-12);
    }
}
