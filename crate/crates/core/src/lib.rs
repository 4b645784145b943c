//! Load distribution of the typical cell in a cellular network whose base
//! stations form a Poisson point process and whose users form an independent
//! Poisson cluster process (Thomas or Matérn), and the downlink rate coverage
//! that follows from it.
//!
//! The analytical side lives in [`analytic`]; [`montecarlo`] simulates the
//! same spatial model directly and is used to validate every formula.

pub mod error;
pub mod quadrature;
pub mod specfun;
pub mod ppmodel;
pub mod analytic;
pub mod montecarlo;

pub use error::{Error, Result};
pub use ppmodel::{ClusterKind, NetworkModel, UserModel};
