//! Scalar abstractions shared by the exact and floating-point parts of the crate.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Coefficient type of symbolic expressions.
///
/// Exact types (`Ratio<i64>`, `i64`) give exact bounds; `f32`/`f64` are
/// accepted for quick exploratory work.
pub trait Coefficient:
    Num + Signed + Copy + PartialOrd + Debug + Display + ToPrimitive + Send + Sync + 'static
{
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Coefficient for Ratio<i64> {}
impl Coefficient for i64 {}
impl Coefficient for f64 {}
impl Coefficient for f32 {}

/// Floating point type used by the estimators and the LP solver.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Pivot / feasibility tolerance appropriate for the precision.
    fn solver_eps() -> Self;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }
}

impl Real for f64 {
    fn solver_eps() -> Self {
        1e-11
    }
}

impl Real for f32 {
    fn solver_eps() -> Self {
        1e-5
    }
}
