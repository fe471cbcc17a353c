//! Scrambling (bipartite A-OTOC) and nonlocal magic (average Pauli-entangling
//! power) of noisy Clifford encoding-decoding circuits
//! `Ω = C† (E^{⊗k} ⊗ I) C`, with exact per-instance evaluators, fourth-moment
//! Clifford ensemble averages, magic capacity, and the fitting and
//! typicality experiments built on them.

pub mod error;
pub mod pauli_clifford;
pub mod dense_ops;
pub mod scrambling;
pub mod nonlocal_magic;
pub mod clifford_moments;
pub mod magic_capacity;
pub mod experiments;

pub use error::{Error, Result};
