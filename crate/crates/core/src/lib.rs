//! Randomized fixed-composition coding for two-user discrete memoryless
//! interference channels: capacity regions, error exponents, MMI decoding
//! simulation and the uniform-vs-simple time-sharing gap.

pub mod cli;
pub mod error;
pub mod exponents;
pub mod io;
pub mod prob;
pub mod regions;
pub mod simulator;
pub mod types;

pub use error::{Error, Result};
