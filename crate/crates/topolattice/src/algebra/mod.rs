//! Non-commutative calculus on finite lattices: position gradients, windowed
//! traces, spectral functional calculus, field derivatives, time reversal.

pub mod ito;
pub mod spectral;
pub mod symmetry;
pub mod trace;

pub use ito::{
    exp_div_diff1, exp_div_diff2, ito_derivative_fd, ito_derivative_richardson, ito_exponential,
    DEFAULT_FIELD_STEP,
};
pub use spectral::{fermi_deriv_fn, fermi_fn, pressure_fn, Spectral};
pub use symmetry::{time_reversal, SpinStructure};
pub use trace::{
    trace_per_volume, trace_product_per_volume, windowed_op_norm, windowed_submatrix,
    with_sensitivity, TraceWindow, WindowedValue,
};

use crate::model::{BoundaryMode, Lattice, Operator};
use crate::{C64, CMatrix};

/// Which coordinate difference enters the position commutator on periodic
/// axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionConvention {
    /// Literal cell coordinates (default; the natural choice on open axes).
    Literal,
    /// Minimal-image displacement on periodic axes, making one-cell shifts
    /// pick up a uniform factor across the wrap seam.
    Wrapped,
}

/// Position gradient `∇_axis A = i[A, X_axis]` computed entrywise:
/// `(∇A)_{nl} = i·(l_axis − n_axis)·A_{nl}`. Axes beyond the lattice
/// dimension have zero coordinates, so the gradient vanishes there.
pub fn grad_matrix(
    m: &CMatrix,
    lattice: &Lattice,
    axis: usize,
    convention: PositionConvention,
) -> CMatrix {
    let n = m.nrows();
    let l = lattice.internal_dim();
    let coord: Vec<i64> = (0..n).map(|i| lattice.cell_coord(i / l)[axis]).collect();
    let wrap = convention == PositionConvention::Wrapped
        && axis < lattice.dim()
        && lattice.boundary(axis) == BoundaryMode::Periodic;
    let ext = if axis < lattice.dim() {
        lattice.extent(axis) as i64
    } else {
        1
    };
    let mut out = CMatrix::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            let mut d = coord[c] - coord[r];
            if wrap {
                d = d.rem_euclid(ext);
                if 2 * d > ext {
                    d -= ext;
                }
            }
            if d != 0 {
                out[[r, c]] = C64::new(0.0, d as f64) * m[[r, c]];
            }
        }
    }
    out
}

/// [`grad_matrix`] with literal coordinates, wrapping the geometry tags.
pub fn grad(a: &Operator, axis: usize) -> Operator {
    a.with_matrix(grad_matrix(
        &a.matrix,
        &a.lattice,
        axis,
        PositionConvention::Literal,
    ))
}

/// [`grad_matrix`] with minimal-image coordinates on periodic axes.
pub fn grad_wrapped(a: &Operator, axis: usize) -> Operator {
    a.with_matrix(grad_matrix(
        &a.matrix,
        &a.lattice,
        axis,
        PositionConvention::Wrapped,
    ))
}

/// First-order Sobolev seminorm `( T(A†A) + Σ_j T((∇_jA)†(∇_jA)) )^{1/2}`
/// over the window; the identity maps to `√L_int`.
pub fn sobolev_seminorm(a: &Operator, window: &TraceWindow) -> f64 {
    let dag = crate::linalg::dagger(&a.matrix);
    let mut total = trace_product_per_volume(&dag, &a.matrix, window).re;
    for axis in 0..a.lattice.dim() {
        let g = grad_matrix(&a.matrix, &a.lattice, axis, PositionConvention::Literal);
        total += trace_product_per_volume(&crate::linalg::dagger(&g), &g, window).re;
    }
    total.max(0.0).sqrt()
}
