//! Randomized channel-state duality.
//!
//! A quantum channel is represented by an ensemble of random pure dual states
//! whose first moment is an exact dual state of the channel. The crate
//! provides the linear algebra, Haar sampling, channel representations,
//! estimators with their variance bounds, OTOC estimation and spin-chain
//! experiments, plus the `randual` command-line driver.

pub mod channels;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod randsrc;
pub mod rdual;
pub mod scalar;
pub mod spinchain;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision dense complex matrix; the carrier for states and operators.
pub type ComplexMatrix = linalg::CMatrix<f64>;
/// Double-precision state vector.
pub type StateVector = linalg::CVector<f64>;
pub type ComplexMatrix32 = linalg::CMatrix<f32>;
pub type StateVector32 = linalg::CVector<f32>;
