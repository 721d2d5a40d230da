//! Finite lattice geometry, boundary conditions and the uniform field.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Boundary handling per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Dirichlet truncation: hops leaving the box are dropped, positions are
    /// literal cell coordinates.
    Open,
    /// Periodic wrap-around. Requires the field to satisfy the
    /// single-valuedness quantization checked by [`Lattice::validate_field`].
    Periodic,
}

/// Uniform magnetic field, stored through the three independent components of
/// the antisymmetric matrix `B`: `B_12 = b[2]`, `B_23 = b[0]`, `B_31 = b[1]`
/// (so `B_ij = Σ_k ε_ijk b_k`). In two dimensions only `b[2]` acts; in one
/// dimension the field is inert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    pub b: [f64; 3],
}

impl MagneticField {
    pub const ZERO: MagneticField = MagneticField { b: [0.0; 3] };

    pub fn new(b: [f64; 3]) -> Self {
        MagneticField { b }
    }

    /// Perpendicular component for planar models.
    pub fn perpendicular(b3: f64) -> Self {
        MagneticField { b: [0.0, 0.0, b3] }
    }

    /// Antisymmetric matrix entry `B_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 1) => self.b[2],
            (1, 0) => -self.b[2],
            (1, 2) => self.b[0],
            (2, 1) => -self.b[0],
            (2, 0) => self.b[1],
            (0, 2) => -self.b[1],
            _ => 0.0,
        }
    }

    /// The bilinear pairing `a·Bn = Σ_ij a_i B_ij n_j` entering every phase.
    pub fn pairing(&self, a: [i64; 3], n: [i64; 3]) -> f64 {
        let (a0, a1, a2) = (a[0] as f64, a[1] as f64, a[2] as f64);
        let (n0, n1, n2) = (n[0] as f64, n[1] as f64, n[2] as f64);
        self.b[2] * (a0 * n1 - a1 * n0)
            + self.b[0] * (a1 * n2 - a2 * n1)
            + self.b[1] * (a2 * n0 - a0 * n2)
    }

    /// Field with every component negated (time-reversal partner).
    pub fn negated(&self) -> Self {
        MagneticField {
            b: [-self.b[0], -self.b[1], -self.b[2]],
        }
    }

    /// Shift one component by `h` (finite differencing in the field).
    pub fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut b = self.b;
        b[axis] += h;
        MagneticField { b }
    }
}

/// Finite box `Λ ⊂ Z^d` with an internal fibre of dimension `internal_dim`.
///
/// Cells are enumerated lexicographically (axis 0 slowest); the degree of
/// freedom index is `cell * internal_dim + orbital`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    extents: [usize; 3],
    boundary: [BoundaryMode; 3],
    internal_dim: usize,
}

impl Lattice {
    pub fn new(
        dim: usize,
        extents: &[usize],
        boundary: &[BoundaryMode],
        internal_dim: usize,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Geometry(format!("dimension {dim} not in 1..=3")));
        }
        if extents.len() != dim || boundary.len() != dim {
            return Err(Error::Geometry(format!(
                "expected {dim} extents and boundary modes, got {} and {}",
                extents.len(),
                boundary.len()
            )));
        }
        if internal_dim == 0 {
            return Err(Error::Geometry("internal dimension must be >= 1".into()));
        }
        let mut e = [1usize; 3];
        let mut b = [BoundaryMode::Open; 3];
        for k in 0..dim {
            if extents[k] == 0 {
                return Err(Error::Geometry(format!("axis {k} has zero extent")));
            }
            e[k] = extents[k];
            b[k] = boundary[k];
        }
        Ok(Lattice {
            dim,
            extents: e,
            boundary: b,
            internal_dim,
        })
    }

    /// All-open box.
    pub fn open(dim: usize, extents: &[usize], internal_dim: usize) -> Result<Self> {
        Lattice::new(dim, extents, &vec![BoundaryMode::Open; dim], internal_dim)
    }

    /// All-periodic box (torus).
    pub fn torus(dim: usize, extents: &[usize], internal_dim: usize) -> Result<Self> {
        Lattice::new(
            dim,
            extents,
            &vec![BoundaryMode::Periodic; dim],
            internal_dim,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.extents[axis]
    }

    pub fn boundary(&self, axis: usize) -> BoundaryMode {
        self.boundary[axis]
    }

    pub fn internal_dim(&self) -> usize {
        self.internal_dim
    }

    pub fn n_cells(&self) -> usize {
        self.extents[..self.dim].iter().product()
    }

    /// Total matrix dimension.
    pub fn n_dof(&self) -> usize {
        self.n_cells() * self.internal_dim
    }

    /// Cell coordinates of a cell index (unused axes report 0).
    pub fn cell_coord(&self, mut cell: usize) -> [i64; 3] {
        let mut c = [0i64; 3];
        for k in (0..self.dim).rev() {
            c[k] = (cell % self.extents[k]) as i64;
            cell /= self.extents[k];
        }
        c
    }

    /// Cell index of coordinates, wrapping periodic axes; `None` when an open
    /// axis is left.
    pub fn cell_index(&self, coord: [i64; 3]) -> Option<usize> {
        let mut idx = 0usize;
        for k in 0..self.dim {
            let ext = self.extents[k] as i64;
            let c = match self.boundary[k] {
                BoundaryMode::Periodic => coord[k].rem_euclid(ext),
                BoundaryMode::Open => {
                    if coord[k] < 0 || coord[k] >= ext {
                        return None;
                    }
                    coord[k]
                }
            };
            idx = idx * self.extents[k] as usize + c as usize;
        }
        Some(idx)
    }

    /// Canonical representative of coordinates (wrap periodic axes).
    pub fn canonical(&self, coord: [i64; 3]) -> [i64; 3] {
        let mut c = coord;
        for k in 0..self.dim {
            if self.boundary[k] == BoundaryMode::Periodic {
                c[k] = c[k].rem_euclid(self.extents[k] as i64);
            }
        }
        c
    }

    pub fn dof(&self, cell: usize, orbital: usize) -> usize {
        cell * self.internal_dim + orbital
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = usize> {
        0..self.n_cells()
    }

    /// Phase single-valuedness on periodic axes: wrapping a coordinate by the
    /// extent must leave every dressing phase `e^{(i/2) l·Bn}` unchanged,
    /// which requires `extent_k * B_kj ∈ 4πZ` for every periodic axis `k` and
    /// every other axis `j`.
    pub fn validate_field(&self, field: &MagneticField) -> Result<()> {
        let four_pi = 4.0 * std::f64::consts::PI;
        for k in 0..self.dim {
            if self.boundary[k] != BoundaryMode::Periodic {
                continue;
            }
            for j in 0..self.dim {
                if j == k {
                    continue;
                }
                let v = self.extents[k] as f64 * field.entry(k, j);
                let frac = (v / four_pi - (v / four_pi).round()).abs();
                if frac > 1e-9 {
                    return Err(Error::FluxQuantization {
                        axis: k,
                        other: j,
                        extent: self.extents[k],
                        got: v,
                    });
                }
            }
        }
        Ok(())
    }

    /// Literal position of a degree of freedom along `axis` (the cell
    /// coordinate; the internal fibre is position-less).
    pub fn position(&self, dof: usize, axis: usize) -> f64 {
        let cell = dof / self.internal_dim;
        self.cell_coord(cell)[axis] as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_roundtrip() {
        let lat = Lattice::open(3, &[3, 4, 5], 2).unwrap();
        for cell in lat.iter_cells() {
            let c = lat.cell_coord(cell);
            assert_eq!(lat.cell_index(c), Some(cell));
        }
        assert_eq!(lat.n_cells(), 60);
        assert_eq!(lat.n_dof(), 120);
    }

    #[test]
    fn open_axis_rejects_outside() {
        let lat = Lattice::open(2, &[4, 4], 1).unwrap();
        assert_eq!(lat.cell_index([-1, 0, 0]), None);
        assert_eq!(lat.cell_index([0, 4, 0]), None);
    }

    #[test]
    fn periodic_axis_wraps() {
        let lat = Lattice::torus(2, &[4, 4], 1).unwrap();
        assert_eq!(lat.cell_index([-1, 0, 0]), lat.cell_index([3, 0, 0]));
        assert_eq!(lat.cell_index([0, 5, 0]), lat.cell_index([0, 1, 0]));
    }

    #[test]
    fn pairing_is_antisymmetric() {
        let f = MagneticField::new([0.3, -0.7, 1.1]);
        let a = [2, -1, 3];
        let n = [5, 4, -2];
        assert!((f.pairing(a, n) + f.pairing(n, a)).abs() < 1e-14);
        assert_eq!(f.pairing(a, a), 0.0);
    }

    #[test]
    fn flux_quantization_gate() {
        let lat = Lattice::torus(2, &[6, 6], 1).unwrap();
        // 6 * B3 ∈ 4πZ  ⇔  B3 ∈ (2π/3)Z.
        let ok = MagneticField::perpendicular(2.0 * std::f64::consts::PI / 3.0);
        assert!(lat.validate_field(&ok).is_ok());
        let bad = MagneticField::perpendicular(2.0 * std::f64::consts::PI / 5.0);
        assert!(lat.validate_field(&bad).is_err());
        // Open boxes accept any field.
        let open = Lattice::open(2, &[6, 6], 1).unwrap();
        assert!(open.validate_field(&bad).is_ok());
    }
}
