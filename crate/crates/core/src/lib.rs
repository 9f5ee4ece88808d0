//! Numerical laboratory for the strongly coupled confined polaron.
//!
//! The crate computes the classical Pekar energy of a truncated
//! spectral-Galerkin model, the fluctuation operators and the quantum
//! correction `1/2 Tr(1 - sqrt(1 - K))`, and validates them against
//! independent brute-force oracles: sparse Fock-space diagonalization,
//! adaptive quadrature, and finite differences.
//!
//! Module map:
//! - [`spectral`] - Dirichlet eigenbases, overlap tensors, spectral kernels,
//!   Weyl counting;
//! - [`pekar`] - the classical minimization and its electron Hessian;
//! - [`fluctuation`] - the operators `K`, `L`, the quantum correction, and
//!   quadratic-bound diagnostics;
//! - [`fock`] - exact diagonalization of the truncated quantum Hamiltonian,
//!   oscillator lower bounds, the variational trial state, and the
//!   strong-coupling sweep;
//! - [`bounds`] - quadrature verification of closed-form constants and
//!   scaling exponents;
//! - [`export`] - JSON-facing result shapes.

pub mod bounds;
pub mod error;
pub mod export;
pub mod fluctuation;
pub mod fock;
pub mod linalg;
pub mod pekar;
pub mod quadrature;
pub mod spectral;

pub use error::{CoreError, Result};
