//! Projection quantization and quantum symplectic cutting on truncated,
//! explicitly enumerable Hilbert spaces.

pub mod cut;
pub mod examples;
pub mod error;
pub mod hilbert;
pub mod line;
pub mod projection;
pub mod rational;

pub use error::{Error, Result};
