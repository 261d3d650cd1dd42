//! Work and photon-number statistics of a cavity field driven by an oscillating
//! boundary.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`] Bessel functions and their roots.
//! * [`cavity`] eigenfrequencies, coupling coefficients and mode spectra.
//! * [`driving`] boundary protocols, resonance classification and the
//!   effective interaction generators.
//! * [`symplectic`] quadratic boson forms, characteristic matrices and traces.
//! * [`charfun`] closed-form characteristic functions, classical limits and moments.
//! * [`fock`] a truncated Fock-space two-point-measurement simulator.
//! * [`distributions`] inversion of characteristic functions and theorem checks.
//! * [`cli`] the command-line front end.
//!
//! Numerical kernels that do not touch the Fock oracle are generic over a
//! [`Real`] scalar; the aliases below fix them to `f64`.

pub mod branch;
pub mod cavity;
pub mod charfun;
pub mod cli;
pub mod distributions;
pub mod driving;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod quad;
pub mod special;
pub mod symplectic;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

pub use error::{Error, Result};

/// Floating point scalar accepted by the generic kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    /// Lossy conversion used for diagnostics.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`].
pub type Complex<T> = num_complex::Complex<T>;
pub type C64 = num_complex::Complex64;
pub type CMatrix64 = linalg::CMatrix<f64>;
pub type QuadraticForm64 = symplectic::QuadraticForm<f64>;
pub type CharacteristicMatrix64 = symplectic::CharacteristicMatrix<f64>;
pub type CharfunParams64 = charfun::CharfunParams<f64>;

pub type RootCache64 = special::RootCache<f64>;

/// Formats a number with 12 significant digits in scientific notation.
pub fn sig12(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}
