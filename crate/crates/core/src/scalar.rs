use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Scalar type for all real arithmetic in this crate.
///
/// Dense tensor algebra and the conic modelling layer are generic over this
/// trait; eigenproblems are delegated to f64 internally regardless of `R`.
pub trait Real:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Display
    + LowerExp
    + Debug
    + Copy
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossless-enough conversion from f64 literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }
    fn to64(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over the crate-wide real type.
pub type C<R> = Complex<R>;

pub fn c_re<R: Real>(x: R) -> C<R> {
    Complex::new(x, R::zero())
}

pub fn c_im<R: Real>(x: R) -> C<R> {
    Complex::new(R::zero(), x)
}
