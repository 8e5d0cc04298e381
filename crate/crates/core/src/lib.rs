//! Channel parameter estimation for hybrid-beamforming MIMO-OFDM links.
//!
//! The measurement across receive streams, training symbols, and subcarriers
//! forms a third-order tensor with a low-rank Tucker structure. This crate
//! synthesizes such tensors from multipath geometry ([`channel`]), recovers
//! per-path angle of arrival, angle of departure, distance, and gain from them
//! ([`estimator`]), bounds the achievable accuracy ([`crb`]), and runs seeded
//! Monte-Carlo sweeps comparing the two ([`harness`]).

pub mod channel;
pub mod crb;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod tensor;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
