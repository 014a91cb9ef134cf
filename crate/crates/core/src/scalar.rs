//! Scalar abstraction shared by the geometric and dynamical kernels.
//!
//! Everything that is plain arithmetic on vectors of reals is written against
//! [`Real`], so the same kernels run in `f32` (fast, loose) and `f64` (the
//! precision every documented tolerance refers to). Dense linear algebra
//! (rank tests, Galerkin spectra) and Monte-Carlo statistics are `f64` only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the kernels: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }

    /// Allowed deviation of `|v|^2` from one for unit vectors.
    fn unit_tolerance() -> Self;

    /// Default central-difference step for first derivatives.
    fn fd_step() -> Self;
}

impl Real for f32 {
    fn unit_tolerance() -> Self {
        1e-6
    }

    fn fd_step() -> Self {
        1e-2
    }
}

impl Real for f64 {
    fn unit_tolerance() -> Self {
        1e-12
    }

    fn fd_step() -> Self {
        1e-5
    }
}
