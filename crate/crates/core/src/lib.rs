//! Quantum state transfer between two qubits through a d-level interconnect
//! beyond the rotating-wave approximation.
//!
//! The crate builds the time-dependent Hamiltonian for the quantum-bus and
//! CTAP protocols, propagates the composite system, and evaluates the induced
//! qubit-to-qubit channel: single-letter coherent information and leakage out
//! of the low-excitation and target subspaces.

pub mod channel;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod sweep;
mod tableau;
pub mod verify;

pub use error::{Error, Result};
