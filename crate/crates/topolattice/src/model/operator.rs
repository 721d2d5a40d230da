//! Dressed operator matrices: Hamiltonians, magnetic translations, and the
//! phase dressing/stripping that connects matrices to field-independent
//! kernels.
//!
//! The representation convention used throughout: the matrix element between
//! row cell `n` and column cell `l` of a covariant operator with kernel `K`
//! is `K_{n,l} e^{(i/2) l·Bn}`. For the Hamiltonian `K_{n,l} = T_{n-l}` plus
//! the on-site disorder on the diagonal. Magnetic translations act as
//! `(U_a ψ)_n = e^{(i/2) a·Bn} ψ_{n-a}`.

use crate::error::{Error, Result};
use crate::linalg::hermiticity_defect;
use crate::model::{Disorder, HoppingKernel, Lattice, MagneticField};
use crate::{C64, CMatrix};

/// A dense operator together with the geometry and field it was built on.
#[derive(Debug, Clone)]
pub struct Operator {
    pub lattice: Lattice,
    pub field: MagneticField,
    pub matrix: CMatrix,
}

impl Operator {
    pub fn new(lattice: Lattice, field: MagneticField, matrix: CMatrix) -> Result<Self> {
        let n = lattice.n_dof();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Geometry(format!(
                "matrix is {}x{}, lattice wants {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                n,
                n
            )));
        }
        Ok(Operator {
            lattice,
            field,
            matrix,
        })
    }

    pub fn zeros(lattice: Lattice, field: MagneticField) -> Self {
        let n = lattice.n_dof();
        Operator {
            lattice,
            field,
            matrix: CMatrix::zeros((n, n)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_defect(&self.matrix) <= tol
    }

    /// Same geometry/field, different matrix.
    pub fn with_matrix(&self, matrix: CMatrix) -> Self {
        Operator {
            lattice: self.lattice.clone(),
            field: self.field,
            matrix,
        }
    }
}

/// Remove the representation phase: entry `(n, l)` of the result is
/// `e^{-(i/2) l·Bn} A_{n,l}`, i.e. the bare kernel matrix, which is
/// field-independent for operators built from field-independent kernels.
pub fn strip_phase(a: &Operator) -> CMatrix {
    phase_map(&a.lattice, &a.field, &a.matrix, -0.5)
}

/// Re-attach the representation phase of `field` to a bare kernel matrix.
pub fn dress_phase(lattice: &Lattice, field: &MagneticField, kernel: &CMatrix) -> Operator {
    Operator {
        lattice: lattice.clone(),
        field: *field,
        matrix: phase_map(lattice, field, kernel, 0.5),
    }
}

fn phase_map(lattice: &Lattice, field: &MagneticField, m: &CMatrix, sign_half: f64) -> CMatrix {
    let l_int = lattice.internal_dim();
    let n_cells = lattice.n_cells();
    let coords: Vec<[i64; 3]> = (0..n_cells).map(|c| lattice.cell_coord(c)).collect();
    let mut out = m.clone();
    for rn in 0..n_cells {
        for cl in 0..n_cells {
            let phi = sign_half * field.pairing(coords[cl], coords[rn]);
            if phi == 0.0 {
                continue;
            }
            let w = C64::from_polar(1.0, phi);
            for a in 0..l_int {
                for b in 0..l_int {
                    out[[rn * l_int + a, cl * l_int + b]] *= w;
                }
            }
        }
    }
    out
}

/// Magnetic translation `(U_a ψ)_n = e^{(i/2) a·Bn} ψ_{n-a}`.
///
/// On open axes the operator is a partial isometry (amplitudes leaving the
/// box are dropped); shifting an open axis by at least its extent empties the
/// lattice and is reported as an error.
pub fn build_magnetic_translation(
    lattice: &Lattice,
    field: &MagneticField,
    a: [i64; 3],
) -> Result<Operator> {
    lattice.validate_field(field)?;
    for k in 0..lattice.dim() {
        if lattice.boundary(k) == crate::model::BoundaryMode::Open
            && a[k].unsigned_abs() as usize >= lattice.extent(k)
        {
            return Err(Error::EmptyTranslation { shift: a, axis: k });
        }
    }
    for k in lattice.dim()..3 {
        if a[k] != 0 {
            return Err(Error::Geometry(format!(
                "translation {a:?} leaves the {}-dimensional lattice",
                lattice.dim()
            )));
        }
    }
    let l_int = lattice.internal_dim();
    let n = lattice.n_dof();
    let mut u = CMatrix::zeros((n, n));
    for cell in lattice.iter_cells() {
        let nc = lattice.cell_coord(cell);
        let src = [nc[0] - a[0], nc[1] - a[1], nc[2] - a[2]];
        if let Some(sc) = lattice.cell_index(src) {
            let w = C64::from_polar(1.0, 0.5 * field.pairing(a, nc));
            for orb in 0..l_int {
                u[[lattice.dof(cell, orb), lattice.dof(sc, orb)]] = w;
            }
        }
    }
    Operator::new(lattice.clone(), *field, u)
}

/// Assemble the dressed Hamiltonian `H = Σ_m (T_m hops) + V_disorder` on a
/// finite lattice: element `(n, l) = T_{n-l} e^{(i/2) l·Bn}` with the on-site
/// potential added on the diagonal.
pub fn build_hamiltonian(
    lattice: &Lattice,
    field: &MagneticField,
    kernel: &HoppingKernel,
    disorder: &Disorder,
) -> Result<Operator> {
    if kernel.dim() != lattice.dim() || kernel.internal_dim() != lattice.internal_dim() {
        return Err(Error::Geometry(format!(
            "kernel shape (d={}, L={}) does not match lattice (d={}, L={})",
            kernel.dim(),
            kernel.internal_dim(),
            lattice.dim(),
            lattice.internal_dim()
        )));
    }
    lattice.validate_field(field)?;
    let l_int = lattice.internal_dim();
    let n = lattice.n_dof();
    let mut h = CMatrix::zeros((n, n));
    for col_cell in lattice.iter_cells() {
        let lc = lattice.cell_coord(col_cell);
        for (m, t) in kernel.iter() {
            let target = [lc[0] + m[0], lc[1] + m[1], lc[2] + m[2]];
            if let Some(row_cell) = lattice.cell_index(target) {
                let nc = lattice.cell_coord(row_cell);
                let w = C64::from_polar(1.0, 0.5 * field.pairing(lc, nc));
                for a in 0..l_int {
                    for b in 0..l_int {
                        h[[lattice.dof(row_cell, a), lattice.dof(col_cell, b)]] += w * t[[a, b]];
                    }
                }
            }
        }
    }
    let diag = disorder.diagonal(lattice);
    for (i, v) in diag.iter().enumerate() {
        h[[i, i]] += C64::new(*v, 0.0);
    }
    let op = Operator::new(lattice.clone(), *field, h)?;
    debug_assert!(
        op.is_hermitian(1e-10),
        "assembled Hamiltonian lost Hermiticity"
    );
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dagger, fro_norm, matmul};
    use crate::model::BoundaryMode;
    use ndarray::array;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn chain_kernel() -> HoppingKernel {
        let mut k = HoppingKernel::new(1, 1);
        k.add_hop([1, 0, 0], array![[c(1.0, 0.0)]]).unwrap();
        k
    }

    #[test]
    fn ring_spectrum_closed_form() {
        // Circulant ring of N sites with unit hopping: eigenvalues
        // 2cos(2πq/N), q = 0..N-1.
        let n = 8usize;
        let lat = Lattice::torus(1, &[n], 1).unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &chain_kernel(), &Disorder::clean())
            .unwrap();
        let (vals, _) = crate::linalg::eigh(&h.matrix);
        let mut expect: Vec<f64> = (0..n)
            .map(|q| 2.0 * (2.0 * PI * q as f64 / n as f64).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (got, want) in vals.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn open_chain_spectrum_closed_form() {
        // Dirichlet chain of N sites: eigenvalues 2cos(πq/(N+1)), q = 1..N.
        let n = 9usize;
        let lat = Lattice::open(1, &[n], 1).unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &chain_kernel(), &Disorder::clean())
            .unwrap();
        let (vals, _) = crate::linalg::eigh(&h.matrix);
        let mut expect: Vec<f64> = (1..=n)
            .map(|q| 2.0 * (PI * q as f64 / (n as f64 + 1.0)).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (got, want) in vals.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_phases_match_bruteforce() {
        // Directly check (U_a ψ)_n = e^{(i/2) a·Bn} ψ_{n-a} entry by entry.
        let lat = Lattice::open(2, &[5, 4], 1).unwrap();
        let f = MagneticField::perpendicular(0.37);
        let a = [1, -2, 0];
        let u = build_magnetic_translation(&lat, &f, a).unwrap();
        for cell in lat.iter_cells() {
            let nc = lat.cell_coord(cell);
            let src = [nc[0] - a[0], nc[1] - a[1], nc[2] - a[2]];
            match lat.cell_index(src) {
                Some(sc) => {
                    let phase = 0.5 * f.b[2] * (a[0] as f64 * nc[1] as f64 - a[1] as f64 * nc[0] as f64);
                    let want = C64::from_polar(1.0, phase);
                    assert!((u.matrix[[cell, sc]] - want).norm() < 1e-14);
                }
                None => {
                    let row_sum: f64 = u.matrix.row(cell).iter().map(|z| z.norm()).sum();
                    assert!(row_sum < 1e-14);
                }
            }
        }
    }

    #[test]
    fn translations_compose_with_central_phase() {
        // U_a U_b = e^{(i/2) a·Bb} U_{a+b}, checked as matrices on a torus
        // with properly quantized flux, for all |a|,|b| <= 2.
        let next = 6usize;
        let lat = Lattice::torus(2, &[next, next], 1).unwrap();
        let f = MagneticField::perpendicular(2.0 * PI / 3.0);
        lat.validate_field(&f).unwrap();
        for a1 in -2i64..=2 {
            for a2 in -2i64..=2 {
                for b1 in -2i64..=2 {
                    for b2 in -2i64..=2 {
                        let a = [a1, a2, 0];
                        let b = [b1, b2, 0];
                        let ua = build_magnetic_translation(&lat, &f, a).unwrap();
                        let ub = build_magnetic_translation(&lat, &f, b).unwrap();
                        let uab =
                            build_magnetic_translation(&lat, &f, [a1 + b1, a2 + b2, 0]).unwrap();
                        let lhs = matmul(&ua.matrix, &ub.matrix);
                        let w = C64::from_polar(1.0, 0.5 * f.pairing(a, b));
                        let rhs = uab.matrix.mapv(|z| z * w);
                        assert!(
                            fro_norm(&(&lhs - &rhs)) < 1e-12,
                            "composition failed for a={a:?} b={b:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn translation_unitary_on_torus() {
        let lat = Lattice::torus(2, &[6, 6], 2).unwrap();
        let f = MagneticField::perpendicular(2.0 * PI / 3.0);
        let u = build_magnetic_translation(&lat, &f, [2, 1, 0]).unwrap();
        let udu = matmul(&dagger(&u.matrix), &u.matrix);
        assert!(fro_norm(&(&udu - &CMatrix::eye(lat.n_dof()))) < 1e-12);
    }

    #[test]
    fn empty_translation_rejected() {
        let lat = Lattice::open(1, &[4], 1).unwrap();
        let err = build_magnetic_translation(&lat, &MagneticField::ZERO, [4, 0, 0]);
        assert!(matches!(err, Err(Error::EmptyTranslation { .. })));
    }

    #[test]
    fn hamiltonian_covariance_on_torus() {
        // U_a H_ω U_a^{-1} = H_{T^a ω} exactly on a flux-quantized torus.
        let next = 6usize;
        let lat = Lattice::torus(2, &[next, next], 1).unwrap();
        let f = MagneticField::perpendicular(2.0 * PI / 3.0);
        let mut k = HoppingKernel::new(2, 1);
        k.add_hop([1, 0, 0], array![[c(1.0, 0.0)]]).unwrap();
        k.add_hop([0, 1, 0], array![[c(1.0, 0.0)]]).unwrap();
        k.add_hop([1, 1, 0], array![[c(0.2, 0.1)]]).unwrap();
        let dis = Disorder::uniform(1.5, 11);
        let h = build_hamiltonian(&lat, &f, &k, &dis).unwrap();
        for a in [[1i64, 0, 0], [0, 1, 0], [2, -1, 0]] {
            let u = build_magnetic_translation(&lat, &f, a).unwrap();
            let lhs = matmul(&matmul(&u.matrix, &h.matrix), &dagger(&u.matrix));
            let h_shift = build_hamiltonian(&lat, &f, &k, &dis.shifted(a)).unwrap();
            assert!(
                fro_norm(&(&lhs - &h_shift.matrix)) < 1e-11,
                "covariance failed for a={a:?}"
            );
        }
    }

    #[test]
    fn strip_dress_roundtrip_and_field_independence() {
        let lat = Lattice::open(2, &[5, 5], 2).unwrap();
        let mut k = HoppingKernel::new(2, 2);
        k.add_onsite(array![[c(0.5, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(-0.5, 0.0)]])
            .unwrap();
        k.add_hop(
            [1, 0, 0],
            array![[c(0.1, 0.3), c(0.0, 0.0)], [c(0.4, 0.0), c(0.1, -0.3)]],
        )
        .unwrap();
        let dis = Disorder::uniform(0.7, 3);
        let f1 = MagneticField::perpendicular(0.23);
        let f2 = MagneticField::perpendicular(-0.61);
        let h1 = build_hamiltonian(&lat, &f1, &k, &dis).unwrap();
        let h2 = build_hamiltonian(&lat, &f2, &k, &dis).unwrap();
        // Stripping removes all field dependence of a kernel-built operator.
        let k1 = strip_phase(&h1);
        let k2 = strip_phase(&h2);
        assert!(fro_norm(&(&k1 - &k2)) < 1e-12);
        // Dress is the inverse of strip.
        let back = dress_phase(&lat, &f1, &k1);
        assert!(fro_norm(&(&back.matrix - &h1.matrix)) < 1e-12);
    }

    #[test]
    fn mixed_boundary_cylinder_builds() {
        let lat = Lattice::new(
            2,
            &[6, 5],
            &[BoundaryMode::Periodic, BoundaryMode::Open],
            1,
        )
        .unwrap();
        let f = MagneticField::perpendicular(2.0 * PI / 3.0);
        let mut k = HoppingKernel::new(2, 1);
        k.add_hop([1, 0, 0], array![[c(1.0, 0.0)]]).unwrap();
        k.add_hop([0, 1, 0], array![[c(1.0, 0.0)]]).unwrap();
        let h = build_hamiltonian(&lat, &f, &k, &Disorder::clean()).unwrap();
        assert!(h.is_hermitian(1e-12));
    }
}
