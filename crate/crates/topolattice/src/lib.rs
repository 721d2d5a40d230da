//! Numerical laboratory for independent fermions hopping on finite pieces of
//! `Z^d` (`d = 1, 2, 3`) with an internal orbital/spin space, a uniform
//! magnetic field entering through translation-covariant phases, and random
//! on-site disorder.
//!
//! The crate is organised around a small operator calculus:
//!
//! * [`model`] builds lattices, hopping kernels, disorder realizations and the
//!   dressed Hamiltonian matrices, plus magnetic translation operators.
//! * [`algebra`] provides the position derivation `∇_j A = i[A, X_j]`, the
//!   field derivative `δ_j` (finite differences on phase-stripped kernels and
//!   a spectral divided-difference form), windowed traces per unit volume,
//!   spectral functional calculus, a Sobolev seminorm and time reversal.
//! * [`observables`] computes Chern markers, current-current correlation
//!   measures, density of states, orbital magnetization by three independent
//!   routes, localization lengths, and magnetic/chemical-potential response
//!   identities.
//! * [`dynamics`] drives slowly-modulated Hamiltonians: Liouville evolution,
//!   transported polarization, pump invariants and super-adiabatic
//!   projections of arbitrary order.
//! * [`edge`] restricts bulk models to half-spaces/cylinders and evaluates
//!   spectrally-filtered edge currents.
//! * [`cli`] exposes the experiment runner used by the `topolattice` binary.

pub mod algebra;
pub mod cli;
pub mod dynamics;
pub mod edge;
pub mod error;
pub mod linalg;
pub mod model;
pub mod observables;

pub use error::{Error, Result};
pub use model::{
    BoundaryMode, Disorder, DisorderKind, HoppingKernel, Lattice, MagneticField, Operator,
};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Shorthand for a dense complex matrix.
pub type CMatrix = ndarray::Array2<C64>;
