//! Hamilton–Jacobi learning dynamics, a coupled two-qubit Boltzmann
//! evolution, entanglement witnesses and canonical perturbation theory.

pub mod canonical;
pub mod csvio;
pub mod error;
pub mod expcli;
pub mod hjnet;
pub mod qboltz;
pub mod witnesses;

pub use error::{Error, Result};
