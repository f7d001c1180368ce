//! Weighted stochastic diffusion for interacting qubits.
//!
//! Each qubit is a classical 3-vector; the ensemble carries signed weights
//! and reproduces von Neumann dynamics for one-qubit fields and pairwise
//! couplings. The crate also ships an exact dense solver and a verifier that
//! checks the diffusion generator against the quantum one.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod phase;
pub mod reference;
pub mod rng;
pub mod sde;
pub mod verify;

pub use error::{Error, Result};
