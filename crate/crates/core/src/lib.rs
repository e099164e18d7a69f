//! Hamiltonian stationary Lagrangian tori in R⁴.
//!
//! The crate builds tori from lattice data, evaluates their associated
//! families, factors twisted loops (Iwasawa, Birkhoff), reconstructs surfaces
//! from holomorphic potentials, integrates finite-type Lax flows and checks
//! every geometric identity numerically.

pub mod algebra;
pub mod construct;
pub mod examples;
pub mod finitetype;
pub mod io;
pub mod lattice;
pub mod loops;
pub mod verify;

pub use num_complex::Complex64;
