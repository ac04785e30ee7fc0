//! Quantum Bayesian network toolkit.
//!
//! The pipeline runs in five stages, one module each:
//!
//! 1. [`bayesnet`]: binary Bayesian networks with exact enumeration inference.
//! 2. [`cqbn`]: compile a network into a circuit of (controlled) Y rotations,
//!    one qubit per node plus a shared ancilla for two-parent nodes.
//! 3. [`transpiler`]: lower to {U1, U2, U3, CNOT}, lay out and route onto a
//!    [`device`], and optimise at one of four levels.
//! 4. [`sim`]: statevector evolution, shot sampling, and Pauli-trajectory noise
//!    parameterised by device calibration.
//! 5. [`harness`]: repeated runs, marginal extraction, RMSPE and reports.
//!
//! [`circuit`] holds the shared gate-level representation and its matrix
//! semantics.

pub mod bayesnet;
pub mod circuit;
pub mod cqbn;
pub mod device;
pub mod harness;
pub mod sim;
pub mod transpiler;
