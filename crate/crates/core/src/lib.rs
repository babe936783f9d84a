//! Finite-mode laboratory for mean-field bosons: Hartree states, the
//! Bogoliubov quadratic Hamiltonian and exact diagonalization of the
//! `N`-body problem.

pub mod bogoliubov;
pub mod error;
pub mod fock;
pub mod harness;
pub mod hartree;
pub mod io;
pub mod linalg;
pub mod model;

pub use error::{Error, Result};
