//! Simulation of delayed-measurement EPR attacks on quantum two-party
//! computations.

pub mod attack;
pub mod error;
pub mod harness;
pub mod layout;
pub mod linalg;
pub mod protocol;
pub mod zoo;

pub use error::{Error, Result};
