use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the matrices, samplers and estimators are generic over.
///
/// Implemented for `f32` and `f64`. Statistics (reports, divergences, tail
/// probabilities) are always accumulated in `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for orthonormality and symmetry checks at this precision.
    fn ortho_tol() -> Self;

    /// Residual norm under which a Gram-Schmidt pivot is treated as degenerate.
    fn pivot_floor() -> Self;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("every f64 converts to a Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("every Scalar converts to f64")
    }
}

impl Scalar for f64 {
    fn ortho_tol() -> Self {
        1e-10
    }

    fn pivot_floor() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn ortho_tol() -> Self {
        5e-4
    }

    fn pivot_floor() -> Self {
        1e-5
    }
}
