//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the discretization and certificate arithmetic run on.
///
/// Implemented for `f32` and `f64`. Literals are lifted with [`Real::lit`].
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Absolute slack used for strict inequalities in certificate arithmetic:
    /// `a < b` only passes when `a < b - strict_tol()`.
    fn strict_tol() -> Self;

    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f64 {
    fn strict_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn strict_tol() -> Self {
        1e-6
    }
}
