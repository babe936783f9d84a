//! Occupation-number spaces and the operators that live on them.

pub mod basis;
pub mod density;
pub mod excitation;
pub mod hamiltonian;
pub mod lanczos;
pub mod ops;
pub mod residual;
pub mod sparse;

pub use basis::{BasisKind, FockBasis};
pub use sparse::SparseOperator;
