//! Half-space restrictions and boundary currents.
//!
//! A gapped bulk model restricted to a half-space grows boundary modes whose
//! net current is pinned to the bulk invariant. This module realizes the
//! restriction as a finite two-edge cylinder (Dirichlet cut along one axis),
//! provides the per-unit-transverse-length edge trace with depth-truncation
//! diagnostics, and evaluates the boundary current selected by a smooth
//! unit-integral spectral weight supported in the bulk gap.

mod bump;
mod current;
mod half_space;

pub use bump::BumpFunction;
pub use current::{edge_current, EdgeCurrent};
pub use half_space::{edge_trace, restrict_half_space, EdgeTrace, HalfSpaceOp};
