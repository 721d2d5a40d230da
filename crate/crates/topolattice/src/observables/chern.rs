//! Real-space Chern invariant of a spectral projection, evaluated as a
//! windowed trace per unit volume.

use crate::algebra::{grad, trace_product_per_volume, with_sensitivity, TraceWindow};
use crate::error::{Error, Result};
use crate::linalg::{commutator, matmul, op_norm};
use crate::model::{BoundaryMode, Operator};
use crate::C64;

/// Result of [`chern_number`]: the real invariant, the discarded imaginary
/// part (zero for an exact projection up to rounding), and the drift when
/// the window margin grows by two cells.
#[derive(Debug, Clone, Copy)]
pub struct ChernValue {
    pub value: f64,
    pub imag_defect: f64,
    pub sensitivity: f64,
}

/// `2πi · T(P [∇_{pair.0} P, ∇_{pair.1} P])` on the given window.
///
/// Requires `P` to be a projection to `1e-8`, a lattice of dimension 2 or 3,
/// and open boundaries on both `pair` axes (the position commutator behind
/// `∇` needs literal coordinates there). Converges to an integer as the
/// lattice and window grow when the projection has a gapped parent.
pub fn chern_number(p: &Operator, pair: (usize, usize), window: &TraceWindow) -> Result<ChernValue> {
    let dim = p.lattice.dim();
    if !(2..=3).contains(&dim) {
        return Err(Error::Geometry(format!(
            "Chern invariant needs a 2- or 3-dimensional lattice, got {dim}"
        )));
    }
    let (a1, a2) = pair;
    if a1 >= dim || a2 >= dim || a1 == a2 {
        return Err(Error::Geometry(format!(
            "invalid axis pair ({a1}, {a2}) for dimension {dim}"
        )));
    }
    for axis in [a1, a2] {
        if !matches!(p.lattice.boundary(axis), BoundaryMode::Open) {
            return Err(Error::Geometry(format!(
                "axis {axis} must be open for the position commutator"
            )));
        }
    }
    let idem = {
        let p2 = matmul(&p.matrix, &p.matrix);
        op_norm(&(&p2 - &p.matrix))
    };
    if idem > 1e-8 {
        return Err(Error::Invariant(format!(
            "input is not a projection: ‖P² − P‖ = {idem:.3e}"
        )));
    }

    let g1 = grad(p, a1);
    let g2 = grad(p, a2);
    let bracket = commutator(&g1.matrix, &g2.matrix);
    let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
    let eval = |w: &TraceWindow| two_pi_i * trace_product_per_volume(&p.matrix, &bracket, w);
    // Sensitivity drops to zero when the window cannot widen further (the
    // margin already touches the boundary); the value itself is unaffected.
    let traced = match with_sensitivity(window, eval) {
        Ok(t) => t,
        Err(_) => crate::algebra::WindowedValue {
            value: eval(window),
            sensitivity: C64::new(0.0, 0.0),
        },
    };
    Ok(ChernValue {
        value: traced.value.re,
        imag_defect: traced.value.im.abs(),
        sensitivity: traced.sensitivity.re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Spectral, TraceWindow};
    use crate::model::catalog;
    use crate::model::{build_hamiltonian, Disorder, Lattice, MagneticField};
    use crate::CMatrix;

    fn haldane_projection(
        size: usize,
        t2: f64,
        phi: f64,
        m: f64,
        disorder: Disorder,
    ) -> (Operator, Spectral) {
        let lat = Lattice::open(2, &[size, size], 2).unwrap();
        let kernel = catalog::haldane(1.0, t2, phi, m).unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, &disorder).unwrap();
        let s = Spectral::new(&h).unwrap();
        // Half filling: put μ in the middle gap found near E = 0.
        let gap = s.nearest_gap(0.0);
        let mu = 0.5 * (gap.0 + gap.1);
        let p = s.operator(s.fermi_projection(mu).unwrap());
        (p, s)
    }

    #[test]
    fn trivial_projections_give_zero() {
        let lat = Lattice::open(2, &[6, 6], 1).unwrap();
        let w = TraceWindow::with_margin(&lat, 1).unwrap();
        let zero = Operator::zeros(lat.clone(), MagneticField::ZERO);
        let c = chern_number(&zero, (0, 1), &w).unwrap();
        assert_eq!(c.value, 0.0);
        let one = zero.with_matrix(crate::linalg::eye(lat.n_dof()));
        let c = chern_number(&one, (0, 1), &w).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn rejects_non_projections_and_bad_geometry() {
        let lat = Lattice::open(2, &[4, 4], 1).unwrap();
        let w = TraceWindow::full(&lat);
        let half = Operator::zeros(lat.clone(), MagneticField::ZERO)
            .with_matrix(CMatrix::eye(lat.n_dof()).mapv(|z| z * 0.5));
        assert!(matches!(
            chern_number(&half, (0, 1), &w),
            Err(Error::Invariant(_))
        ));

        let lat1 = Lattice::open(1, &[8], 1).unwrap();
        let w1 = TraceWindow::full(&lat1);
        let p1 = Operator::zeros(lat1, MagneticField::ZERO);
        assert!(matches!(
            chern_number(&p1, (0, 1), &w1),
            Err(Error::Geometry(_))
        ));

        let lat_torus = Lattice::torus(2, &[4, 4], 1).unwrap();
        let wt = TraceWindow::full(&lat_torus);
        let pt = Operator::zeros(lat_torus, MagneticField::ZERO);
        assert!(matches!(
            chern_number(&pt, (0, 1), &wt),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn topological_phase_carries_unit_invariant() {
        // t₂ sin φ dominant over the staggered mass: the clean oracle for
        // these parameters (k-space plaquette sum, see the Bloch module
        // tests) gives +1 for the lower band on the axis pair (0, 1).
        let (p, _) = haldane_projection(16, 0.3, std::f64::consts::FRAC_PI_2, 0.2, Disorder::clean());
        let w = TraceWindow::with_margin(&p.lattice, 4).unwrap();
        let c = chern_number(&p, (0, 1), &w).unwrap();
        assert!(c.imag_defect < 1e-8, "imag defect {}", c.imag_defect);
        assert!(
            (c.value.abs() - 1.0).abs() < 0.15,
            "expected |Ch| ≈ 1 at this size, got {}",
            c.value
        );
    }

    #[test]
    fn trivial_phase_carries_zero_invariant() {
        let (p, _) = haldane_projection(16, 0.05, std::f64::consts::FRAC_PI_2, 1.2, Disorder::clean());
        let w = TraceWindow::with_margin(&p.lattice, 4).unwrap();
        let c = chern_number(&p, (0, 1), &w).unwrap();
        assert!(c.value.abs() < 0.1, "expected ≈ 0, got {}", c.value);
    }

    #[test]
    fn invariant_is_constant_across_a_gap() {
        let (_, s) = haldane_projection(12, 0.3, std::f64::consts::FRAC_PI_2, 0.2, Disorder::clean());
        let gap = s.nearest_gap(0.0);
        let w = TraceWindow::with_margin(&s.lattice, 3).unwrap();
        let mu_a = gap.0 + 0.25 * (gap.1 - gap.0);
        let mu_b = gap.0 + 0.75 * (gap.1 - gap.0);
        let pa = s.operator(s.fermi_projection(mu_a).unwrap());
        let pb = s.operator(s.fermi_projection(mu_b).unwrap());
        let ca = chern_number(&pa, (0, 1), &w).unwrap();
        let cb = chern_number(&pb, (0, 1), &w).unwrap();
        assert!(
            (ca.value - cb.value).abs() < 1e-10,
            "gap values differ: {} vs {}",
            ca.value,
            cb.value
        );
    }
}
