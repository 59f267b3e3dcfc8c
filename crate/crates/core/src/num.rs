//! Scalar abstraction shared by every numerical module.
//!
//! All core math is generic over [`Real`], which is implemented for `f32`
//! and `f64`. The pipeline and CLI instantiate everything at `f64` through
//! the aliases at the crate root.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar the library is generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FftNum
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + ScalarOperand
    + Sum
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` constant, panicking on the (impossible for
    /// `f32`/`f64`) failure case. Keeps call sites short.
    fn cst(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }

    /// Lossy widening to `f64` for reporting and time arithmetic.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
