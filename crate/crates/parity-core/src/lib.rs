//! Single-shot parity measurement via engineered dispersive shifts.
//!
//! The crate builds coupled-transmon unit-cell Hamiltonians in truncated Fock
//! space, reduces them with closed-form Schrieffer-Wolff coupler eliminations,
//! computes n-body dispersive shift tables from exact labeled spectra or
//! numeric perturbation theory, searches for parameter regimes with equal
//! ancilla-data shifts, simulates the two-drive parity gate, and scores it
//! against ideal stabilizer unitaries and CNOT-chain baselines.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fock;
pub mod linalg;
pub mod optim;
pub mod regimes;
pub mod shifts;
pub mod stabilizers;
pub mod sw;

pub use error::{Error, Result};
pub use exec::Execution;

#[cfg(feature = "parallel")]
pub use rayon;
