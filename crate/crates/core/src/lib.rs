//! Two-stage (screen, then hire) selection model: numerical kernels,
//! closed-form pipeline analysis, parameter estimation and simulation.

pub mod analytic;
pub mod error;
pub mod estimate;
pub mod numkern;
pub mod sim;

pub use error::{Error, Gender, Result};
