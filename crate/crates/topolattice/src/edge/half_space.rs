//! Dirichlet restriction of a bulk model to a half-space, realized as a
//! finite cylinder, and the per-unit-transverse-length edge trace.

use crate::error::{Error, Result};
use crate::model::{BoundaryMode, Lattice, Operator};
use crate::{C64, CMatrix};

/// A bulk model together with its Dirichlet restriction along one axis.
///
/// The infinite half-space is stood in for by a finite cylinder: the
/// restricted axis becomes open (hops across its seam are dropped), every
/// other axis keeps the bulk boundary conditions. The cylinder therefore has
/// two boundaries; quantities attributed to "the" edge are read off the rows
/// nearest the low-coordinate end, truncated at `depth`.
#[derive(Debug, Clone)]
pub struct HalfSpaceOp {
    /// The unrestricted parent model.
    pub bulk: Operator,
    /// Ascending bulk eigenvalues, diagonalized once at restriction time so
    /// every gap lookup afterwards is free.
    pub bulk_evals: Vec<f64>,
    /// Axis that was cut open.
    pub axis: usize,
    /// The restricted model: same sites, seam-crossing hops removed.
    pub cylinder: Operator,
    /// Default truncation depth for edge traces (a third of the open extent).
    pub depth: usize,
}

impl HalfSpaceOp {
    /// Number of rows along the open axis.
    pub fn rows(&self) -> usize {
        self.cylinder.lattice.extent(self.axis)
    }

    /// Number of lattice cells transverse to the open axis.
    pub fn transverse_cells(&self) -> usize {
        self.cylinder.lattice.n_cells() / self.rows()
    }
}

/// Cut the given axis open by removing every hop that crosses its periodic
/// seam (Dirichlet conditions on both new boundaries).
///
/// Matrix elements are classified by the literal coordinate difference along
/// `axis`: an entry connecting cells `2·|n_axis − l_axis| ≥ extent` apart can
/// only have come from a wrapped hop when the hopping range is below half the
/// extent, which holds for every kernel in the catalog. If the axis is
/// already open nothing is removed and the restriction is the identity.
pub fn restrict_half_space(bulk: &Operator, axis: usize) -> Result<HalfSpaceOp> {
    let lattice = &bulk.lattice;
    if axis >= lattice.dim() {
        return Err(Error::Geometry(format!(
            "restriction axis {axis} outside lattice dimension {}",
            lattice.dim()
        )));
    }
    let ext = lattice.extent(axis);
    let depth = (ext / 3).max(1);
    let bulk_evals = crate::linalg::eigh_values(&bulk.matrix).to_vec();
    if lattice.boundary(axis) == BoundaryMode::Open {
        return Ok(HalfSpaceOp {
            bulk: bulk.clone(),
            bulk_evals,
            axis,
            cylinder: bulk.clone(),
            depth,
        });
    }

    let mut boundary: Vec<BoundaryMode> = (0..lattice.dim()).map(|a| lattice.boundary(a)).collect();
    boundary[axis] = BoundaryMode::Open;
    let extents: Vec<usize> = (0..lattice.dim()).map(|a| lattice.extent(a)).collect();
    let open_lattice = Lattice::new(lattice.dim(), &extents, &boundary, lattice.internal_dim())?;

    let l_int = lattice.internal_dim();
    let n = bulk.matrix.nrows();
    let coord: Vec<i64> = (0..n)
        .map(|dof| lattice.cell_coord(dof / l_int)[axis])
        .collect();
    let mut m = bulk.matrix.clone();
    let e = ext as i64;
    for r in 0..n {
        for c in 0..n {
            if 2 * (coord[r] - coord[c]).abs() >= e {
                m[[r, c]] = C64::new(0.0, 0.0);
            }
        }
    }
    let cylinder = Operator::new(open_lattice, bulk.field, m)?;
    Ok(HalfSpaceOp {
        bulk: bulk.clone(),
        bulk_evals,
        axis,
        cylinder,
        depth,
    })
}

/// Edge trace of an operator on the cylinder: diagonal sum over the rows
/// within `depth` of the low-coordinate boundary, averaged over the
/// transverse cells but *not* over the open axis.
#[derive(Debug, Clone)]
pub struct EdgeTrace {
    /// Transverse-averaged diagonal sum over rows `0..depth`.
    pub value: C64,
    /// Absolute diagonal mass in the shell `depth..2·depth`, reported so a
    /// caller can judge whether the truncation converged.
    pub shell_mass: f64,
    /// Transverse-averaged absolute diagonal mass per row along the open
    /// axis, for decay diagnostics.
    pub row_profile: Vec<f64>,
    /// Whether the shell mass is small against the edge mass (the input
    /// decays away from the boundary).
    pub decaying: bool,
}

/// Per-row diagonal sums of `a` along the open axis: complex sums and
/// absolute masses, both divided by the number of transverse cells.
pub(crate) fn row_diagonal_profile(
    a: &CMatrix,
    lattice: &Lattice,
    axis: usize,
) -> (Vec<C64>, Vec<f64>) {
    let ext = lattice.extent(axis);
    let l_int = lattice.internal_dim();
    let n_trans = (lattice.n_cells() / ext) as f64;
    let mut sums = vec![C64::new(0.0, 0.0); ext];
    let mut mass = vec![0.0f64; ext];
    for dof in 0..a.nrows() {
        let r = lattice.cell_coord(dof / l_int)[axis] as usize;
        let d = a[[dof, dof]];
        sums[r] += d;
        mass[r] += d.norm();
    }
    for r in 0..ext {
        sums[r] /= n_trans;
        mass[r] /= n_trans;
    }
    (sums, mass)
}

/// Assemble an [`EdgeTrace`] from per-row profiles.
pub(crate) fn profile_to_trace(sums: &[C64], mass: &[f64], depth: usize) -> Result<EdgeTrace> {
    let ext = sums.len();
    if depth == 0 || depth > ext {
        return Err(Error::Geometry(format!(
            "edge depth {depth} must lie in 1..={ext}"
        )));
    }
    let value: C64 = sums[..depth].iter().sum();
    let edge_mass: f64 = mass[..depth].iter().sum();
    let shell_end = (2 * depth).min(ext);
    let shell_mass: f64 = mass[depth..shell_end].iter().sum();
    let decaying = shell_mass <= 0.1 * edge_mass + 1e-12;
    Ok(EdgeTrace {
        value,
        shell_mass,
        row_profile: mass.to_vec(),
        decaying,
    })
}

/// Edge trace of a dense operator `a` living on the cylinder of `half`.
///
/// Returns the diagonal sum over the rows within `depth` of the
/// low-coordinate boundary, per unit transverse length, together with the
/// mass found in the doubling shell `depth..2·depth` as a convergence
/// indicator. Inputs that do not decay away from the boundary are flagged in
/// the metadata rather than rejected.
pub fn edge_trace(half: &HalfSpaceOp, a: &CMatrix, depth: usize) -> Result<EdgeTrace> {
    let n = half.cylinder.matrix.nrows();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Geometry(format!(
            "operator is {}x{}, cylinder wants {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let (sums, mass) = row_diagonal_profile(a, &half.cylinder.lattice, half.axis);
    profile_to_trace(&sums, &mass, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Spectral;
    use crate::edge::BumpFunction;
    use crate::linalg::hermiticity_defect;
    use crate::model::{build_hamiltonian, catalog, Disorder, MagneticField};

    fn haldane_torus(nx: usize, ny: usize, t2: f64, m: f64, disorder: &Disorder) -> Operator {
        let lat = Lattice::torus(2, &[nx, ny], 2).unwrap();
        let kernel = catalog::haldane(1.0, t2, std::f64::consts::FRAC_PI_2, m).unwrap();
        build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, disorder).unwrap()
    }

    #[test]
    fn restriction_of_an_open_axis_is_the_identity() {
        let lat = Lattice::open(2, &[5, 4], 2).unwrap();
        let kernel = catalog::haldane(1.0, 0.2, 1.0, 0.3).unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, &Disorder::clean()).unwrap();
        let half = restrict_half_space(&h, 1).unwrap();
        let diff = &half.cylinder.matrix - &h.matrix;
        assert_eq!(crate::linalg::fro_norm(&diff), 0.0);
        assert_eq!(half.depth, 1);
    }

    #[test]
    fn restriction_matches_direct_cylinder_assembly() {
        // Cutting the seam of the torus build must coincide with assembling
        // the same model directly on the mixed-boundary lattice, including
        // the disorder diagonal (site values depend only on coordinates).
        let disorder = Disorder::uniform(0.7, 42);
        let bulk = haldane_torus(6, 5, 0.3, 0.2, &disorder);
        let half = restrict_half_space(&bulk, 1).unwrap();

        let mixed = Lattice::new(
            2,
            &[6, 5],
            &[BoundaryMode::Periodic, BoundaryMode::Open],
            2,
        )
        .unwrap();
        let kernel = catalog::haldane(1.0, 0.3, std::f64::consts::FRAC_PI_2, 0.2).unwrap();
        let direct = build_hamiltonian(&mixed, &MagneticField::ZERO, &kernel, &disorder).unwrap();
        let diff = &half.cylinder.matrix - &direct.matrix;
        assert!(crate::linalg::fro_norm(&diff) < 1e-13);
        assert!(hermiticity_defect(&half.cylinder.matrix) < 1e-12);
        assert_eq!(half.cylinder.lattice.boundary(1), BoundaryMode::Open);
        assert_eq!(half.cylinder.lattice.boundary(0), BoundaryMode::Periodic);
    }

    #[test]
    fn hopless_model_keeps_its_onsite_spectrum() {
        let lat = Lattice::torus(2, &[4, 4], 1).unwrap();
        let n = lat.n_dof();
        let mut m = CMatrix::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = C64::new(i as f64, 0.0);
        }
        let bulk = Operator::new(lat, MagneticField::ZERO, m).unwrap();
        let half = restrict_half_space(&bulk, 0).unwrap();
        let diff = &half.cylinder.matrix - &bulk.matrix;
        assert_eq!(crate::linalg::fro_norm(&diff), 0.0);
    }

    #[test]
    fn edge_trace_of_zero_vanishes_and_a_boundary_cell_counts_orbitals() {
        let bulk = haldane_torus(6, 6, 0.3, 0.2, &Disorder::clean());
        let half = restrict_half_space(&bulk, 1).unwrap();
        let n = half.cylinder.matrix.nrows();

        let zero = CMatrix::zeros((n, n));
        let t = edge_trace(&half, &zero, 2).unwrap();
        assert_eq!(t.value, C64::new(0.0, 0.0));
        assert_eq!(t.shell_mass, 0.0);

        // Projector onto both orbitals of the single cell (0, 0): the trace
        // is the orbital count divided by the transverse cell count.
        let lat = &half.cylinder.lattice;
        let cell = lat.cell_index([0, 0, 0]).unwrap();
        let mut proj = CMatrix::zeros((n, n));
        for orb in 0..lat.internal_dim() {
            let dof = lat.dof(cell, orb);
            proj[[dof, dof]] = C64::new(1.0, 0.0);
        }
        let t = edge_trace(&half, &proj, 2).unwrap();
        let expected = lat.internal_dim() as f64 / half.transverse_cells() as f64;
        assert!((t.value.re - expected).abs() < 1e-14);
        assert!(t.value.im.abs() < 1e-14);

        assert!(edge_trace(&half, &proj, 0).is_err());
        assert!(edge_trace(&half, &proj, 99).is_err());
    }

    #[test]
    fn gap_supported_weights_give_depth_stable_edge_traces() {
        // In the topological phase the in-gap weight lives on the two
        // boundaries and decays exponentially into the bulk, so doubling the
        // truncation depth barely moves the trace.
        let bulk = haldane_torus(12, 12, 0.3, 0.2, &Disorder::clean());
        let gap = Spectral::new(&bulk).unwrap().nearest_gap(0.0);
        let half = restrict_half_space(&bulk, 1).unwrap();
        let bump = BumpFunction::centered_in(gap.0, gap.1).unwrap();
        let s = Spectral::new(&half.cylinder).unwrap();
        let f = s.apply_function(|e| bump.eval(e));

        let d = half.depth;
        let t1 = edge_trace(&half, &f, d).unwrap();
        let t2 = edge_trace(&half, &f, 2 * d).unwrap();
        assert!(
            (t1.value - t2.value).norm() <= 1e-3,
            "depth doubling moved the trace by {:.3e}",
            (t1.value - t2.value).norm()
        );
        assert!(t1.decaying, "shell mass {:.3e}", t1.shell_mass);

        // The per-row mass decays walking away from the boundary; rows past
        // the midpoint pick the opposite edge back up, so only the first half
        // is monotone territory.
        let profile = &t1.row_profile;
        assert!(profile[0] > 10.0 * profile[d]);
        assert!(profile[0] > 100.0 * profile[profile.len() / 2]);
    }
}
