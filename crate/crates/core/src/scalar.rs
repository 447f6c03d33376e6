//! Scalar abstraction shared by the classical, semiclassical and spectral code.
//!
//! Everything that does not need a dense eigensolver is written against
//! [`Real`], so the same code runs in `f32` or `f64`. The exact quantum
//! oracle is `f64` only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Element of a phase-space state vector: either a real scalar (real
/// trajectories, TWA) or its complexification (saddle trajectories).
pub trait PhaseElem<T: Real>:
    Copy
    + NumAssign
    + From<T>
    + std::ops::Mul<T, Output = Self>
    + std::ops::Neg<Output = Self>
    + Debug
    + Send
    + Sync
    + 'static
{
    fn magnitude(self) -> T;
}

impl<T: Real> PhaseElem<T> for T {
    fn magnitude(self) -> T {
        self.abs()
    }
}

impl<T: Real> PhaseElem<T> for Complex<T> {
    fn magnitude(self) -> T {
        self.norm()
    }
}

/// Shorthand for the imaginary unit.
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}
