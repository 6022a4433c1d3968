//! Simulation and experiment toolkit for variational quantum binary
//! classification with unambiguous (accept / reject) measurement
//! postprocessing.

pub mod circuits;
pub mod decision;
pub mod error;
pub mod noise;
pub mod pipeline;
pub mod qsim;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
