//! Lattice models: geometry, kernels, disorder, dressed operators.

pub mod catalog;
mod kernel;
mod lattice;
mod operator;

pub use kernel::{Disorder, DisorderKind, HoppingKernel};
pub use lattice::{BoundaryMode, Lattice, MagneticField};
pub use operator::{
    build_hamiltonian, build_magnetic_translation, dress_phase, strip_phase, Operator,
};
