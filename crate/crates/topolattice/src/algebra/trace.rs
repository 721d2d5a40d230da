//! Windowed trace per unit volume and boundary-sensitivity reporting.

use crate::error::{Error, Result};
use crate::model::{BoundaryMode, Lattice};
use crate::{C64, CMatrix};

/// A sub-box `Λ_w` of lattice cells over which traces are averaged. Open
/// axes are shrunk by a margin; periodic axes keep their full range.
#[derive(Debug, Clone)]
pub struct TraceWindow {
    lattice: Lattice,
    margins: [usize; 3],
    mask: Vec<bool>,
    count: usize,
}

impl TraceWindow {
    /// Window with the given margin on every open axis (periodic axes are
    /// never shrunk — there is no boundary to protect against).
    pub fn with_margin(lattice: &Lattice, margin: usize) -> Result<Self> {
        let mut margins = [0usize; 3];
        for k in 0..lattice.dim() {
            if lattice.boundary(k) == BoundaryMode::Open {
                margins[k] = margin;
            }
        }
        Self::with_margins(lattice, margins)
    }

    /// Per-axis margins (applied on open axes only).
    pub fn with_margins(lattice: &Lattice, mut margins: [usize; 3]) -> Result<Self> {
        for k in 0..lattice.dim() {
            if lattice.boundary(k) == BoundaryMode::Periodic {
                margins[k] = 0;
            }
            if 2 * margins[k] >= lattice.extent(k) {
                return Err(Error::Geometry(format!(
                    "margin {} empties axis {k} of extent {}",
                    margins[k],
                    lattice.extent(k)
                )));
            }
        }
        let mut mask = vec![false; lattice.n_cells()];
        let mut count = 0usize;
        for cell in lattice.iter_cells() {
            let c = lattice.cell_coord(cell);
            let mut inside = true;
            for k in 0..lattice.dim() {
                let lo = margins[k] as i64;
                let hi = (lattice.extent(k) - margins[k]) as i64;
                if c[k] < lo || c[k] >= hi {
                    inside = false;
                    break;
                }
            }
            if inside {
                mask[cell] = true;
                count += 1;
            }
        }
        Ok(TraceWindow {
            lattice: lattice.clone(),
            margins,
            mask,
            count,
        })
    }

    /// The whole lattice (margin 0 everywhere).
    pub fn full(lattice: &Lattice) -> Self {
        Self::with_margins(lattice, [0; 3]).expect("full window is never empty")
    }

    /// Default window: margin = extent/4 on each open axis.
    pub fn default_for(lattice: &Lattice) -> Result<Self> {
        let mut margins = [0usize; 3];
        for k in 0..lattice.dim() {
            if lattice.boundary(k) == BoundaryMode::Open {
                margins[k] = lattice.extent(k) / 4;
            }
        }
        Self::with_margins(lattice, margins)
    }

    /// Same window with every open-axis margin grown by `extra` (used for
    /// boundary-sensitivity estimates).
    pub fn widened(&self, extra: usize) -> Result<Self> {
        let mut margins = self.margins;
        for k in 0..self.lattice.dim() {
            if self.lattice.boundary(k) == BoundaryMode::Open {
                margins[k] += extra;
            }
        }
        Self::with_margins(&self.lattice, margins)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn margins(&self) -> [usize; 3] {
        self.margins
    }

    /// Number of cells in the window.
    pub fn n_cells(&self) -> usize {
        self.count
    }

    pub fn contains_cell(&self, cell: usize) -> bool {
        self.mask[cell]
    }

    /// Iterator over (flattened) cell indices inside the window.
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }
}

/// Trace per unit volume: `(1/|Λ_w|) Σ_{n∈Λ_w} Tr ⟨n|A|n⟩` (the identity
/// averages to the internal dimension).
pub fn trace_per_volume(a: &CMatrix, window: &TraceWindow) -> C64 {
    let l = window.lattice.internal_dim();
    let mut acc = C64::new(0.0, 0.0);
    for cell in window.cells() {
        for orb in 0..l {
            let i = cell * l + orb;
            acc += a[[i, i]];
        }
    }
    acc / window.count as f64
}

/// `T(AB)` without forming the full product: only the windowed diagonal of
/// `AB` is assembled from row-column dot products.
pub fn trace_product_per_volume(a: &CMatrix, b: &CMatrix, window: &TraceWindow) -> C64 {
    let l = window.lattice.internal_dim();
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for cell in window.cells() {
        for orb in 0..l {
            let i = cell * l + orb;
            let mut dot = C64::new(0.0, 0.0);
            for k in 0..n {
                dot += a[[i, k]] * b[[k, i]];
            }
            acc += dot;
        }
    }
    acc / window.count as f64
}

/// Restriction of a matrix to the rows and columns whose cells lie in the
/// window (used for interior-norm estimates on open lattices).
pub fn windowed_submatrix(a: &CMatrix, window: &TraceWindow) -> CMatrix {
    let l = window.lattice.internal_dim();
    let dofs: Vec<usize> = window
        .cells()
        .flat_map(|cell| (0..l).map(move |orb| cell * l + orb))
        .collect();
    let m = dofs.len();
    let mut out = CMatrix::zeros((m, m));
    for (ri, &r) in dofs.iter().enumerate() {
        for (ci, &c) in dofs.iter().enumerate() {
            out[[ri, ci]] = a[[r, c]];
        }
    }
    out
}

/// Operator norm of the window-restricted matrix.
pub fn windowed_op_norm(a: &CMatrix, window: &TraceWindow) -> f64 {
    crate::linalg::op_norm(&windowed_submatrix(a, window))
}

/// A windowed value together with its boundary-sensitivity estimate
/// (difference from recomputing with margins grown by two cells).
#[derive(Debug, Clone, Copy)]
pub struct WindowedValue {
    pub value: C64,
    /// `value(margin w) − value(margin w+2)`; small when the window sits in
    /// converged bulk.
    pub sensitivity: C64,
}

impl WindowedValue {
    pub fn re(&self) -> f64 {
        self.value.re
    }
}

/// Evaluate a windowed functional at the window and at margin+2, reporting
/// the drift.
pub fn with_sensitivity(
    window: &TraceWindow,
    eval: impl Fn(&TraceWindow) -> C64,
) -> Result<WindowedValue> {
    let value = eval(window);
    let wider = window.widened(2)?;
    let other = eval(&wider);
    Ok(WindowedValue {
        value,
        sensitivity: value - other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matmul;
    use crate::model::Lattice;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, n), |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn identity_traces_to_internal_dimension() {
        let lat = Lattice::torus(2, &[4, 4], 3).unwrap();
        let w = TraceWindow::full(&lat);
        let id = CMatrix::eye(lat.n_dof());
        let t = trace_per_volume(&id, &w);
        assert!((t.re - 3.0).abs() < 1e-14 && t.im.abs() < 1e-14);
    }

    #[test]
    fn cyclicity_on_full_torus() {
        let lat = Lattice::torus(2, &[3, 3], 2).unwrap();
        let w = TraceWindow::full(&lat);
        let a = random_matrix(lat.n_dof(), 1);
        let b = random_matrix(lat.n_dof(), 2);
        let tab = trace_per_volume(&matmul(&a, &b), &w);
        let tba = trace_per_volume(&matmul(&b, &a), &w);
        assert!((tab - tba).norm() < 1e-12);
        let fast = trace_product_per_volume(&a, &b, &w);
        assert!((fast - tab).norm() < 1e-12);
    }

    #[test]
    fn window_margins_and_counts() {
        let lat = Lattice::open(2, &[8, 8], 1).unwrap();
        let w = TraceWindow::with_margin(&lat, 2).unwrap();
        assert_eq!(w.n_cells(), 16);
        let w2 = w.widened(1).unwrap();
        assert_eq!(w2.n_cells(), 4);
        assert!(TraceWindow::with_margin(&lat, 4).is_err());
    }

    #[test]
    fn periodic_axes_keep_full_range() {
        let lat = Lattice::new(
            2,
            &[6, 8],
            &[BoundaryMode::Periodic, BoundaryMode::Open],
            1,
        )
        .unwrap();
        let w = TraceWindow::with_margin(&lat, 2).unwrap();
        assert_eq!(w.n_cells(), 6 * 4);
    }
}
