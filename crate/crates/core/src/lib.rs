//! Spin-1 (SU(3)) spin-nematic squeezing: operator algebra, lattice models,
//! exact and discrete truncated-Wigner dynamics, and metrology.

pub mod algebra;
pub mod dtwa;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod metrology;
pub mod experiments;
