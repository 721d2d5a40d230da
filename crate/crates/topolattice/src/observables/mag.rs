//! Real-space orbital magnetization at zero temperature and the response
//! identities connecting it to the density and the Chern invariant:
//! magnetic-field derivative of the state count, chemical-potential
//! derivative of the magnetization, and a finite-difference susceptibility.

use crate::algebra::{grad, trace_product_per_volume, with_sensitivity, Spectral, TraceWindow};
use crate::error::{Error, Result};
use crate::linalg::commutator;
use crate::model::{MagneticField, Operator};
use crate::observables::ccm::{current_current_measure, integrated_density, magnetization_ccm};
use crate::{C64, CMatrix};

/// Zero-temperature magnetization with its internal cross-check: the value
/// from the `|μ−H|` form, the algebraically equal `(μ−H)(1−2P)` form, the
/// discarded imaginary part, and the window-widening drift.
#[derive(Debug, Clone, Copy)]
pub struct MagnetizationT0 {
    pub value: f64,
    pub companion: f64,
    pub imag_defect: f64,
    pub sensitivity: f64,
}

/// Ground-state orbital magnetization along the axis completing `pair` to a
/// cyclic triple:
///
/// `M = −(i/2) · T(|μ−H| [∇_{pair.0} P_μ, ∇_{pair.1} P_μ])`
///
/// evaluated on the window, together with the equivalent form
/// `+(i/2) · T((μ−H)(1−2P_μ)[·,·])`; the two agree to rounding because
/// `(μ−H)(1−2P_μ) = −|μ−H|` on the spectrum. Errors when `mu` collides
/// with an eigenvalue.
pub fn magnetization_t0(
    s: &Spectral,
    mu: f64,
    pair: (usize, usize),
    window: &TraceWindow,
) -> Result<MagnetizationT0> {
    let p = s.fermi_projection(mu)?;
    let p_op = s.operator(p);
    let g1 = grad(&p_op, pair.0);
    let g2 = grad(&p_op, pair.1);
    let bracket = commutator(&g1.matrix, &g2.matrix);

    let abs_shift = s.abs_shift(mu);
    let half_i = C64::new(0.0, 0.5);
    let eval = |w: &TraceWindow| -half_i * trace_product_per_volume(&abs_shift, &bracket, w);
    let traced = match with_sensitivity(window, eval) {
        Ok(t) => t,
        Err(_) => crate::algebra::WindowedValue {
            value: eval(window),
            sensitivity: C64::new(0.0, 0.0),
        },
    };

    // Companion form: (μ−H)(1−2P) applied spectrally.
    let signed = s.apply_function(|e| {
        let w = mu - e;
        if e < mu {
            -w
        } else {
            w
        }
    });
    let companion = (half_i * trace_product_per_volume(&signed, &bracket, window)).re;

    let value = traced.value.re;
    if (value - companion).abs() > 1e-8 * value.abs().max(1.0) {
        return Err(Error::Invariant(format!(
            "the two magnetization forms disagree: {value} vs {companion}"
        )));
    }
    Ok(MagnetizationT0 {
        value,
        companion,
        imag_defect: traced.value.im.abs(),
        sensitivity: traced.sensitivity.re,
    })
}

/// Finite-difference slope of the magnetization in the chemical potential,
/// paired with the closed commutator form it must equal inside a gap.
#[derive(Debug, Clone, Copy)]
pub struct DmuMagnetization {
    /// `(M(μ+δμ) − M(μ−δμ)) / 2δμ` from [`magnetization_t0`].
    pub slope: f64,
    /// `−i · T(P_μ [∇_{pair.0} P_μ, ∇_{pair.1} P_μ])`, i.e. `−Ch/2π` in the
    /// normalization of [`crate::observables::chern_number`].
    pub commutator: f64,
}

/// Chemical-potential derivative of the ground-state magnetization. Both
/// `mu ± dmu` must lie in the same spectral gap so the projection does not
/// change across the stencil.
pub fn dmu_magnetization(
    s: &Spectral,
    mu: f64,
    dmu: f64,
    pair: (usize, usize),
    window: &TraceWindow,
) -> Result<DmuMagnetization> {
    if dmu <= 0.0 {
        return Err(Error::Config(format!("dmu must be positive, got {dmu}")));
    }
    if s.count_below(mu - dmu) != s.count_below(mu + dmu) {
        return Err(Error::Invariant(format!(
            "μ ± δμ = {mu} ± {dmu} straddles an eigenvalue; the slope needs a common gap"
        )));
    }
    let plus = magnetization_t0(s, mu + dmu, pair, window)?;
    let minus = magnetization_t0(s, mu - dmu, pair, window)?;
    let slope = (plus.value - minus.value) / (2.0 * dmu);

    let p = s.fermi_projection(mu)?;
    let p_op = s.operator(p);
    let g1 = grad(&p_op, pair.0);
    let g2 = grad(&p_op, pair.1);
    let bracket = commutator(&g1.matrix, &g2.matrix);
    let commutator_value =
        (-C64::new(0.0, 1.0) * trace_product_per_volume(&p_op.matrix, &bracket, window)).re;
    Ok(DmuMagnetization {
        slope,
        commutator: commutator_value,
    })
}

/// The two sides of the field-derivative identity for the state count.
#[derive(Debug, Clone, Copy)]
pub struct StredaCheck {
    /// Central finite difference of the windowed integrated density of
    /// states in the field component `axis`.
    pub lhs: f64,
    /// `−i · T(P_μ [∇_{axis+1} P_μ, ∇_{axis+2} P_μ])` at the base field.
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Compare the magnetic-field derivative of the particle count against the
/// Chern commutator: `∂_{B_axis} T(P_μ) = −Ch/2π`. The `build` closure must
/// produce the Hamiltonian of the same model at any nearby field (open
/// boundaries, so arbitrary field values are admissible).
pub fn streda_check(
    build: impl Fn(&MagneticField) -> Result<Operator>,
    base: &MagneticField,
    axis: usize,
    mu: f64,
    h_b: f64,
    window: &TraceWindow,
) -> Result<StredaCheck> {
    if h_b <= 0.0 {
        return Err(Error::Config(format!("field step must be positive, got {h_b}")));
    }
    if axis >= 3 {
        return Err(Error::Geometry(format!("field axis {axis} out of range")));
    }
    let center = Spectral::new(&build(base)?)?;
    let filled = center.count_below(mu);
    center.fermi_projection(mu)?;

    let mut ids = [0.0; 2];
    for (slot, sign) in [(0usize, -1.0), (1usize, 1.0)] {
        let field = base.shifted(axis, sign * h_b);
        let s = Spectral::new(&build(&field)?)?;
        s.fermi_projection(mu).map_err(|_| Error::GapClosed {
            t: sign * h_b,
            gap: 0.0,
            required: 0.0,
        })?;
        if s.count_below(mu) != filled {
            return Err(Error::GapClosed {
                t: sign * h_b,
                gap: 0.0,
                required: 0.0,
            });
        }
        ids[slot] = integrated_density(&s, mu, window);
    }
    let lhs = (ids[1] - ids[0]) / (2.0 * h_b);

    let pair = ((axis + 1) % 3, (axis + 2) % 3);
    let p_op = center.operator(center.fermi_projection(mu)?);
    let g1 = grad(&p_op, pair.0);
    let g2 = grad(&p_op, pair.1);
    let bracket = commutator(&g1.matrix, &g2.matrix);
    let rhs = (-C64::new(0.0, 1.0) * trace_product_per_volume(&p_op.matrix, &bracket, window)).re;
    Ok(StredaCheck {
        lhs,
        rhs,
        discrepancy: (lhs - rhs).abs(),
    })
}

/// Finite-difference magnetic susceptibility `∂_{B_axis} M_j(β, μ)` of the
/// correlation-measure magnetization, rebuilding the model at `B ± h_b`.
/// `j` is the magnetization component; its cyclic pair supplies the
/// gradient axes.
#[allow(clippy::too_many_arguments)]
pub fn susceptibility_fd(
    build: impl Fn(&MagneticField) -> Result<Operator>,
    base: &MagneticField,
    j: usize,
    axis: usize,
    beta: f64,
    mu: f64,
    bins: usize,
    h_b: f64,
    window: &TraceWindow,
) -> Result<f64> {
    if h_b <= 0.0 {
        return Err(Error::Config(format!("field step must be positive, got {h_b}")));
    }
    let pair = ((j + 1) % 3, (j + 2) % 3);
    let mut values = [0.0; 2];
    for (slot, sign) in [(0usize, -1.0), (1usize, 1.0)] {
        let field = base.shifted(axis, sign * h_b);
        let h = build(&field)?;
        let dim = h.lattice.dim();
        let grads: Vec<CMatrix> = (0..dim).map(|a| grad(&h, a).matrix).collect();
        let s = Spectral::new(&h)?;
        let ccm = current_current_measure(&s, &grads, bins, window)?;
        values[slot] = magnetization_ccm(&ccm, beta, mu, pair).value;
    }
    Ok((values[1] - values[0]) / (2.0 * h_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;
    use crate::model::{build_hamiltonian, Disorder, Lattice};
    use crate::observables::chern_number;

    fn haldane_open(size: usize, t2: f64, phi: f64, m: f64) -> (Operator, Spectral) {
        let lat = Lattice::open(2, &[size, size], 2).unwrap();
        let kernel = catalog::haldane(1.0, t2, phi, m).unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, &Disorder::clean()).unwrap();
        let s = Spectral::new(&h).unwrap();
        (h, s)
    }

    #[test]
    fn flat_spectrum_magnetizes_to_zero() {
        let lat = Lattice::open(2, &[5, 5], 1).unwrap();
        let mut kernel = crate::model::HoppingKernel::new(2, 1);
        kernel
            .add_onsite(CMatrix::from_elem((1, 1), C64::new(0.4, 0.0)))
            .unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, &Disorder::clean()).unwrap();
        let s = Spectral::new(&h).unwrap();
        let w = TraceWindow::full(&lat);
        let m = magnetization_t0(&s, 1.0, (0, 1), &w).unwrap();
        assert_eq!(m.value, 0.0);
        assert!((m.value - m.companion).abs() < 1e-14);
    }

    #[test]
    fn the_two_closed_forms_agree_to_rounding() {
        let (_, s) = haldane_open(10, 0.3, std::f64::consts::FRAC_PI_2, 0.2);
        let gap = s.nearest_gap(0.0);
        let mu = 0.5 * (gap.0 + gap.1);
        let w = TraceWindow::with_margin(&s.lattice, 2).unwrap();
        let m = magnetization_t0(&s, mu, (0, 1), &w).unwrap();
        assert!(
            (m.value - m.companion).abs() < 1e-10 * m.value.abs().max(1.0),
            "forms differ: {} vs {}",
            m.value,
            m.companion
        );
        assert!(m.imag_defect < 1e-10);
    }

    #[test]
    fn time_reversal_symmetric_model_carries_no_magnetization() {
        // Honeycomb with zero chiral hopping: real kernel, B = 0.
        let (_, s) = haldane_open(10, 0.0, 0.0, 0.6);
        let gap = s.nearest_gap(0.0);
        let mu = 0.5 * (gap.0 + gap.1);
        let w = TraceWindow::with_margin(&s.lattice, 2).unwrap();
        let m = magnetization_t0(&s, mu, (0, 1), &w).unwrap();
        assert!(m.value.abs() < 1e-10, "TRS magnetization {}", m.value);
    }

    #[test]
    fn mu_slope_equals_commutator_form_and_chern() {
        let (_, s) = haldane_open(14, 0.3, std::f64::consts::FRAC_PI_2, 0.2);
        let gap = s.nearest_gap(0.0);
        let mu = 0.5 * (gap.0 + gap.1);
        let w = TraceWindow::with_margin(&s.lattice, 3).unwrap();
        let dm = dmu_magnetization(&s, mu, 0.02 * (gap.1 - gap.0), (0, 1), &w).unwrap();
        assert!(
            (dm.slope - dm.commutator).abs() < 1e-6,
            "slope {} vs commutator {}",
            dm.slope,
            dm.commutator
        );
        let p = s.operator(s.fermi_projection(mu).unwrap());
        let ch = chern_number(&p, (0, 1), &w).unwrap();
        assert!(
            (dm.commutator + ch.value / (2.0 * std::f64::consts::PI)).abs() < 1e-10,
            "commutator {} vs −Ch/2π {}",
            dm.commutator,
            -ch.value / (2.0 * std::f64::consts::PI)
        );
    }

    #[test]
    fn slope_requires_a_common_gap() {
        let (_, s) = haldane_open(8, 0.3, std::f64::consts::FRAC_PI_2, 0.2);
        let gap = s.nearest_gap(0.0);
        let mu = 0.5 * (gap.0 + gap.1);
        let w = TraceWindow::full(&s.lattice);
        let too_wide = 2.0 * (gap.1 - gap.0);
        assert!(dmu_magnetization(&s, mu, too_wide, (0, 1), &w).is_err());
    }

    #[test]
    fn trivial_insulator_has_flat_response() {
        let (_, s) = haldane_open(12, 0.05, std::f64::consts::FRAC_PI_2, 1.2);
        let gap = s.nearest_gap(0.0);
        let mu = 0.5 * (gap.0 + gap.1);
        let w = TraceWindow::with_margin(&s.lattice, 3).unwrap();
        let dm = dmu_magnetization(&s, mu, 0.02 * (gap.1 - gap.0), (0, 1), &w).unwrap();
        assert!(dm.slope.abs() < 5e-2, "trivial slope {}", dm.slope);
        assert!(dm.commutator.abs() < 5e-2);
    }
}
