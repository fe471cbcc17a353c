//! Fourth-moment Clifford averages via the commutant of `C^{⊗4}`.

pub mod engine;
pub mod ensemble;
pub mod s4;

pub use engine::{
    phi_clifford_4, phi_clifford_4_factorized, FactorizedOperator, MomentDecomposition, ProductOperator,
    SiteFactorSet, WeingartenTable,
};
pub use ensemble::*;
pub use s4::S4Data;
