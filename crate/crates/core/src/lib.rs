//! Spectral-coefficient learning for parametric time-fractional differential equations.
//!
//! A Legendre–Galerkin weak-form residual is minimised over a small neural
//! network that maps random problem parameters to spectral coefficients. The
//! trained network yields closed-form surrogate solutions over the whole
//! parameter distribution.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod legendre;
pub mod metrics;
pub mod model;
pub mod problems;
pub mod quadrature;
pub mod system;
pub mod train;

pub use error::{Error, Result};
