use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the solver and the geometry run on: `f32` or `f64`.
///
/// Tolerances are per type because a 24-bit mantissa cannot honour the
/// `1e-6` feasibility threshold used for `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Primal/dual feasibility tolerance.
    fn feas_tol() -> Self;
    /// Integrality tolerance for binary variables.
    fn int_tol() -> Self;
    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tol() -> Self;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn feas_tol() -> Self {
        1e-6
    }
    fn int_tol() -> Self {
        1e-6
    }
    fn pivot_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn feas_tol() -> Self {
        1e-3
    }
    fn int_tol() -> Self {
        1e-3
    }
    fn pivot_tol() -> Self {
        1e-5
    }
}
