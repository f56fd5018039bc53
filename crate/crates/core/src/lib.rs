//! Exact and statistical checks of subsystem randomness in GHZ states.
//!
//! - [`pauli`]: Pauli strings with exact phases and their action on basis states.
//! - [`state`]: GHZ state vectors, dense and closed-form expectation values.
//! - [`measurement`]: seeded joint `σ_x` sampling and randomness tests.
//! - [`probspace`]: exact atom distributions and moment-constraint solving.
//! - [`holism`]: entropy of subset products and the strict Π-holism checker.
//! - [`verify`]: the end-to-end verification suite.

pub mod config;
pub mod holism;
pub mod measurement;
pub mod pauli;
pub mod probspace;
pub mod state;
pub mod verify;
