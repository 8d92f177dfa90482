use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar used by every solver: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy conversion to `f64`, used for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Unit round-off of the type.
    fn eps() -> Self {
        Self::default_epsilon()
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
