//! Operator-splitting solver for a compressible viscous fluid in a cavity
//! whose top wall is a thermoelastic plate.
//!
//! Each splitting window first advances the plate and temperature modes with
//! the lagged fluid trace, then solves the damped continuity equation and the
//! Galerkin momentum system on the reference domain for the new plate motion.
//! The diagnostics module evaluates the energy identities and bounds the
//! scheme satisfies.

pub mod bases;
pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod fsp;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod ssp;

pub use config::RunConfig;
pub use driver::{run, RunOutput, RunStatus};
pub use error::{Error, Result};
pub mod sweep;
pub mod output;
pub mod checks;
