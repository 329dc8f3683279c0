//! Simulation and prediction toolkit for Trotterized spin-chain dynamics
//! under gate noise.

pub mod error;
pub mod harness;
pub mod pauli;
pub mod predictor;
pub mod rng;
pub mod rpe;
pub mod sim;
pub mod stats;
pub mod trotter;

pub use error::{Error, Result};
