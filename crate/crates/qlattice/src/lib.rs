//! Numerical toolkit for a two-letter-word-indexed family of tridiagonal
//! lattice operators with a shared exceptional point at t = 0.

mod eigen;
pub mod error;
pub mod export;
mod linalg;
pub mod metric;
pub mod model;
pub mod phase;
pub mod pseudospectrum;
pub mod spectral;

pub use error::{Error, ErrorCategory};

pub type Result<T> = std::result::Result<T, Error>;
