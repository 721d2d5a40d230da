//! Polarization change over a driving cycle, three ways.
//!
//! * [`polarization_dynamic`]: transport the initial state with the propagator
//!   and integrate the current expectation `T(ρ(t) ∇H(t))` over the cycle.
//! * [`polarization_kv`]: integrate the adiabatic two-form
//!   `i·T(P₀[∂ₜP₀, ∇P₀])` of the instantaneous spectral projections.
//! * [`pump_chern`]: the same two-form for a closed loop of projections,
//!   without the `2π`; its components are integers for a periodic gapped loop.
//!
//! Both polarizations carry one factor of `2π` per cycle, so the quantization
//! statement reads `ΔP = 2π·(integer)` and `ΔP_kv = 2π·pump_chern`.

use super::liouville::{plan_steps, LiouvilleStepper};
use super::path::{PathEnds, TimePath};
use crate::algebra::{
    grad_matrix, trace_product_per_volume, PositionConvention, Spectral, TraceWindow,
};
use crate::error::{Error, Result};
use crate::linalg::{fro_norm, matmul};
use crate::model::Lattice;
use crate::{C64, CMatrix};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Spectral data of the path's Hamiltonian at time `t`.
fn spectral_at(path: &TimePath, t: f64) -> Result<Spectral> {
    Spectral::new(&crate::model::Operator::new(
        path.lattice().clone(),
        crate::model::MagneticField::ZERO,
        path.hamiltonian(t),
    )?)
}

/// Composite Simpson rule over a uniform grid with an even interval count.
fn simpson(values: &[f64], h: f64) -> f64 {
    assert!(values.len() >= 3 && values.len() % 2 == 1, "Simpson needs an even number of intervals");
    let mut acc = values[0] + values[values.len() - 1];
    for (k, v) in values.iter().enumerate().skip(1).take(values.len() - 2) {
        acc += v * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Fourth-order first-derivative stencils over a list of matrices sampled on
/// a uniform grid. `periodic` treats index `n` as index `0`.
fn differentiate_grid(samples: &[CMatrix], h: f64, periodic: bool, flat_ends: bool) -> Vec<CMatrix> {
    let n = samples.len();
    let shape = samples[0].raw_dim();
    let mut out = Vec::with_capacity(n);
    let central = |km2: &CMatrix, km1: &CMatrix, kp1: &CMatrix, kp2: &CMatrix| {
        (&(kp1 - km1).mapv(|z| z * 8.0) - &(kp2 - km2)).mapv(|z| z / (12.0 * h))
    };
    for k in 0..n {
        if periodic {
            let idx = |o: i64| ((k as i64 + o).rem_euclid(n as i64)) as usize;
            out.push(central(
                &samples[idx(-2)],
                &samples[idx(-1)],
                &samples[idx(1)],
                &samples[idx(2)],
            ));
        } else if (k == 0 || k == n - 1) && flat_ends {
            out.push(CMatrix::zeros(shape));
        } else if k >= 2 && k + 2 < n {
            out.push(central(&samples[k - 2], &samples[k - 1], &samples[k + 1], &samples[k + 2]));
        } else {
            // Offset five-point stencils at the edges.
            let (base, w): (usize, [f64; 5]) = if k == 0 {
                (0, [-25.0, 48.0, -36.0, 16.0, -3.0])
            } else if k == 1 {
                (0, [-3.0, -10.0, 18.0, -6.0, 1.0])
            } else if k == n - 2 {
                (n - 5, [-1.0, 6.0, -18.0, 10.0, 3.0])
            } else {
                (n - 5, [3.0, -16.0, 36.0, -48.0, 25.0])
            };
            let mut acc = CMatrix::zeros(shape);
            for (j, wj) in w.iter().enumerate() {
                acc += &samples[base + j].mapv(|z| z * *wj);
            }
            out.push(acc.mapv(|z| z / (12.0 * h)));
        }
    }
    out
}

/// `Re i·T_w(P [dP, ∇ⱼP])` — the adiabatic curvature integrand.
fn curvature_integrand(
    p: &CMatrix,
    p_dot: &CMatrix,
    lattice: &Lattice,
    window: &TraceWindow,
    axis: usize,
) -> f64 {
    let grad_p = grad_matrix(p, lattice, axis, PositionConvention::Wrapped);
    let bracket = &matmul(p_dot, &grad_p) - &matmul(&grad_p, p_dot);
    let val = trace_product_per_volume(p, &bracket, window);
    (C64::new(0.0, 1.0) * val).re
}

/// Result of [`polarization_dynamic`].
#[derive(Debug, Clone)]
pub struct DynamicPolarization {
    /// `ΔP_j = (2π/ε)·∫₀ᵀ T_w(ρ(t) ∇ⱼH(t)) dt` per axis.
    pub delta_p: Vec<f64>,
    /// The same integral in the commutator form
    /// `(2π/ε)·∫₀ᵀ Re i·T_w(ρ [i[ρ,H], ∇ⱼρ]) dt`.
    pub delta_p_commutator: Vec<f64>,
    /// Worst pointwise gap between the two integrands over the grid.
    pub identity_defect: f64,
    /// Number of propagator steps taken.
    pub steps: usize,
}

/// Integrate the current carried by the transported state over one cycle.
///
/// `rho0` must be the spectral projection of `H(0)` below `μ(0)` (checked:
/// idempotency, commutation with `H(0)`, and an open gap at `μ(0)`). The
/// integrand is sampled on the propagator's own uniform grid and integrated
/// by Simpson's rule. At every node the commutator form of the integrand is
/// evaluated as well; the two agree identically for projections, so a gap
/// between them beyond `1e-6` aborts. On a torus the position derivation
/// uses minimal-image distances, whose Leibniz rule carries wrap-around
/// corrections of order `e^{-L/2ξ}` (`ξ` the inverse gap); the default
/// tolerance assumes the chain is long enough for these to be negligible,
/// and [`polarization_dynamic_with`] lets short-chain studies widen it.
pub fn polarization_dynamic(
    path: &TimePath,
    rho0: &CMatrix,
    epsilon: f64,
    window: &TraceWindow,
) -> Result<DynamicPolarization> {
    polarization_dynamic_with(
        path,
        rho0,
        epsilon,
        window,
        super::liouville::DEFAULT_STEP_FACTOR,
        1e-6,
    )
}

pub fn polarization_dynamic_with(
    path: &TimePath,
    rho0: &CMatrix,
    epsilon: f64,
    window: &TraceWindow,
    step_factor: f64,
    identity_tol: f64,
) -> Result<DynamicPolarization> {
    let h0 = path.hamiltonian(0.0);
    let idem = fro_norm(&(&matmul(rho0, rho0) - rho0));
    if idem > 1e-8 {
        return Err(Error::Config(format!(
            "initial state must be a projection (defect {idem:.3e})"
        )));
    }
    let comm0 = fro_norm(&(&matmul(&h0, rho0) - &matmul(rho0, &h0)));
    if comm0 > 1e-8 {
        return Err(Error::Config(format!(
            "initial state must commute with H(0) (defect {comm0:.3e})"
        )));
    }
    // The gap at μ(0) must be open for the initial projection to be spectral.
    spectral_at(path, 0.0)?.fermi_projection(path.mu(0.0))?;

    let period = path.period();
    let mut n_steps = plan_steps(path, epsilon, period, step_factor);
    if n_steps % 2 == 1 {
        n_steps += 1;
    }
    let h = period / n_steps as f64;
    let dim = path.lattice().dim();
    let lattice = path.lattice().clone();

    let mut stepper = LiouvilleStepper::new(path, epsilon)?;
    let mut direct = vec![Vec::with_capacity(n_steps + 1); dim];
    let mut bracket_form = vec![Vec::with_capacity(n_steps + 1); dim];
    let mut identity_defect: f64 = 0.0;
    for k in 0..=n_steps {
        let t = k as f64 * h;
        if k > 0 {
            stepper.step(t - h, h);
        }
        let rho = stepper.conjugate(rho0);
        let h_t = path.hamiltonian(t);
        // Unit-speed generator of the flow: ε ∂ₜρ = i[ρ, H].
        let gen = (&matmul(&rho, &h_t) - &matmul(&h_t, &rho)).mapv(|z| z * C64::new(0.0, 1.0));
        for axis in 0..dim {
            let grad_h = path.hamiltonian_grad(t, axis);
            let direct_val = trace_product_per_volume(&rho, &grad_h, window).re;
            let bracket_val = curvature_integrand(&rho, &gen, &lattice, window, axis);
            identity_defect = identity_defect.max((direct_val - bracket_val).abs());
            direct[axis].push(direct_val);
            bracket_form[axis].push(bracket_val);
        }
    }
    if identity_defect > identity_tol {
        return Err(Error::Invariant(format!(
            "current integrand and its commutator form disagree by {identity_defect:.3e} \
             (tolerance {identity_tol:.1e})"
        )));
    }
    let scale = TWO_PI / epsilon;
    Ok(DynamicPolarization {
        delta_p: direct.iter().map(|v| simpson(v, h) * scale).collect(),
        delta_p_commutator: bracket_form.iter().map(|v| simpson(v, h) * scale).collect(),
        identity_defect,
        steps: n_steps,
    })
}

/// Result of [`polarization_kv`].
#[derive(Debug, Clone)]
pub struct KvPolarization {
    /// `ΔP_j = 2π·i·∫₀ᵀ T_w(P₀[∂ₜP₀, ∇ⱼP₀]) dt` per axis.
    pub delta_p: Vec<f64>,
    /// Smallest spectral gap at `μ(t)` encountered along the grid.
    pub min_gap: f64,
    pub times: Vec<f64>,
}

/// Adiabatic polarization from the instantaneous spectral projections.
///
/// Builds `P₀(t)` below `μ(t)` on a uniform grid of `n_steps` intervals,
/// differentiates the grid in time with fourth-order stencils (wrapped for
/// periodic paths, endpoint-aware for flat ones) and integrates by Simpson's
/// rule. Fails if the gap at `μ(t)` closes anywhere on the grid.
pub fn polarization_kv(
    path: &TimePath,
    n_steps: usize,
    window: &TraceWindow,
) -> Result<KvPolarization> {
    if n_steps < 8 || n_steps % 2 == 1 {
        return Err(Error::Config(
            "the time grid needs an even number of intervals, at least 8".into(),
        ));
    }
    let period = path.period();
    let h = period / n_steps as f64;
    let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * h).collect();
    let periodic = path.ends() == PathEnds::Periodic;

    let mut projections = Vec::with_capacity(n_steps + 1);
    let mut min_gap = f64::INFINITY;
    for &t in times.iter().take(if periodic { n_steps } else { n_steps + 1 }) {
        let spectral = spectral_at(path, t)?;
        let mu = path.mu(t);
        let p = spectral.fermi_projection(mu).map_err(|e| match e {
            Error::GaplessFermiLevel { gap_lo, gap_hi, .. } => Error::GapClosed {
                t,
                gap: gap_hi - gap_lo,
                required: 0.0,
            },
            other => other,
        })?;
        let (lo, hi) = spectral.nearest_gap(mu);
        min_gap = min_gap.min(hi - lo);
        projections.push(p);
    }
    if periodic {
        projections.push(projections[0].clone());
    }
    let dots = if periodic {
        let mut d = differentiate_grid(&projections[..n_steps], h, true, false);
        d.push(d[0].clone());
        d
    } else {
        differentiate_grid(&projections, h, false, path.ends() == PathEnds::Flat)
    };
    let dim = path.lattice().dim();
    let lattice = path.lattice().clone();
    let mut delta_p = Vec::with_capacity(dim);
    for axis in 0..dim {
        let integrand: Vec<f64> = (0..=n_steps)
            .map(|k| curvature_integrand(&projections[k], &dots[k], &lattice, window, axis))
            .collect();
        delta_p.push(TWO_PI * simpson(&integrand, h));
    }
    Ok(KvPolarization {
        delta_p,
        min_gap,
        times,
    })
}

/// Pump invariant of a closed loop of projections sampled on a uniform grid.
///
/// `times` and `projections` must include both endpoints of the cycle with
/// `P(first) = P(last)`; the derivative uses wrapped fourth-order stencils and
/// the integral is the periodic trapezoid rule, which is spectrally accurate
/// for smooth loops. Each component is `i·∫ T_w(P[∂ₜP, ∇ⱼP]) dt`, an integer
/// for a gapped loop. Reversing the orientation of the loop negates every
/// sample of the integrand exactly.
pub fn pump_chern(
    times: &[f64],
    projections: &[CMatrix],
    lattice: &Lattice,
    window: &TraceWindow,
) -> Result<Vec<f64>> {
    let n = times.len();
    if n < 9 || projections.len() != n {
        return Err(Error::Config(
            "pump needs matching times and projections, at least 9 nodes".into(),
        ));
    }
    let h = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() {
            return Err(Error::Config("pump grid must be uniform".into()));
        }
    }
    let closure = fro_norm(&(&projections[0] - &projections[n - 1]));
    if closure > 1e-8 {
        return Err(Error::Invariant(format!(
            "pump loop does not close: ‖P(0) − P(T)‖ = {closure:.3e}"
        )));
    }
    for p in projections {
        let defect = fro_norm(&(&matmul(p, p) - p));
        if defect > 1e-8 {
            return Err(Error::Config(format!(
                "pump input is not a projection (defect {defect:.3e})"
            )));
        }
    }
    let loop_nodes = &projections[..n - 1];
    let dots = differentiate_grid(loop_nodes, h, true, false);
    let dim = lattice.dim();
    let mut chern = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut acc = 0.0;
        for (p, dp) in loop_nodes.iter().zip(&dots) {
            acc += curvature_integrand(p, dp, lattice, window, axis);
        }
        chern.push(acc * h);
    }
    Ok(chern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::path::{rice_mele_path, PathEnds, PathTerm, ScalarPath, TimePath};
    use crate::model::{build_hamiltonian, catalog, Disorder, Lattice, MagneticField};

    fn projection_at(path: &TimePath, t: f64) -> CMatrix {
        spectral_at(path, t)
            .unwrap()
            .fermi_projection(path.mu(t))
            .unwrap()
    }

    fn static_rice_mele_path() -> TimePath {
        let lattice = Lattice::torus(1, &[6], 2).unwrap();
        let op = build_hamiltonian(
            &lattice,
            &MagneticField::ZERO,
            &catalog::rice_mele(1.0, 0.3, 0.4).unwrap(),
            &Disorder::clean(),
        )
        .unwrap();
        TimePath::new(
            vec![PathTerm {
                profile: ScalarPath::Constant(1.0),
                operator: op,
            }],
            ScalarPath::Constant(0.0),
            1.0,
            PathEnds::Periodic,
        )
        .unwrap()
    }

    #[test]
    fn static_path_pumps_nothing() {
        let path = static_rice_mele_path();
        let window = TraceWindow::full(path.lattice());
        let kv = polarization_kv(&path, 16, &window).unwrap();
        assert!(kv.delta_p[0].abs() < 1e-12, "kv {}", kv.delta_p[0]);
        let rho0 = projection_at(&path, 0.0);
        let dynamic = polarization_dynamic(&path, &rho0, 0.2, &window).unwrap();
        assert!(dynamic.delta_p[0].abs() < 1e-10, "dyn {}", dynamic.delta_p[0]);
        assert!(dynamic.identity_defect < 1e-10);
    }

    #[test]
    fn pump_loop_carries_one_quantum() {
        // Strong dimerisation keeps the instantaneous projections tightly
        // localised, so sixteen cells already resolve the quantised value.
        let path = rice_mele_path(1.0, 0.8, 0.9, 16, 1.0).unwrap();
        let window = TraceWindow::full(path.lattice());
        let kv = polarization_kv(&path, 96, &window).unwrap();
        let quanta = kv.delta_p[0] / TWO_PI;
        assert!(
            (quanta.abs() - 1.0).abs() < 1e-4,
            "expected one pumped quantum, got {quanta}"
        );
        assert!(kv.min_gap > 1.0);

        // The bare loop invariant is the same integer.
        let n = 96;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let projections: Vec<CMatrix> =
            times.iter().map(|&t| projection_at(&path, t)).collect();
        let ch = pump_chern(&times, &projections, path.lattice(), &window).unwrap();
        assert!((ch[0] - quanta).abs() < 1e-6, "kv/2π = {quanta}, pump = {}", ch[0]);
        assert!((ch[0].abs() - 1.0).abs() < 1e-4);

        // Orientation reversal: every integrand sample negates, so the value
        // flips sign to rounding accuracy.
        let rev_proj: Vec<CMatrix> = (0..=n).map(|k| projections[n - k].clone()).collect();
        let ch_rev = pump_chern(&times, &rev_proj, path.lattice(), &window).unwrap();
        assert!(
            (ch_rev[0] + ch[0]).abs() < 1e-12,
            "forward {} reverse {}",
            ch[0],
            ch_rev[0]
        );
    }

    #[test]
    fn dynamic_polarization_approaches_the_adiabatic_value() {
        // Flattening the drive keeps the transported state exponentially close
        // to the instantaneous spectral projection, whose matrix elements decay
        // fast enough at this gap that forty-eight cells push the wrap-around
        // corrections to the position derivation below rounding scale.
        let path = rice_mele_path(1.0, 0.8, 0.9, 48, 1.0).unwrap().flattened();
        let window = TraceWindow::full(path.lattice());
        let kv = polarization_kv(&path, 64, &window).unwrap();
        let rho0 = projection_at(&path, 0.0);
        let dynamic = polarization_dynamic(&path, &rho0, 0.05, &window).unwrap();
        assert!(dynamic.identity_defect < 1e-6);
        // Direct and commutator quadratures agree to rounding.
        assert!(
            (dynamic.delta_p[0] - dynamic.delta_p_commutator[0]).abs() < 1e-8,
            "{} vs {}",
            dynamic.delta_p[0],
            dynamic.delta_p_commutator[0]
        );
        let err = (dynamic.delta_p[0] - kv.delta_p[0]).abs() / TWO_PI;
        assert!(
            err < 5e-2,
            "dynamic {} kv {} (relative gap {err})",
            dynamic.delta_p[0],
            kv.delta_p[0]
        );
    }

    #[test]
    fn gap_closure_is_reported() {
        // δ₀ = 0 leaves the chain metallic when the stagger vanishes.
        let path = rice_mele_path(1.0, 0.0, 0.5, 6, 1.0).unwrap();
        let window = TraceWindow::full(path.lattice());
        let err = polarization_kv(&path, 16, &window).unwrap_err();
        assert!(matches!(err, Error::GapClosed { .. } | Error::GaplessFermiLevel { .. }));
    }

    #[test]
    fn pump_rejects_open_loops() {
        let path = rice_mele_path(1.0, 0.4, 0.6, 6, 1.0).unwrap();
        let window = TraceWindow::full(path.lattice());
        let n = 16;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * 0.4 / n as f64).collect();
        let projections: Vec<CMatrix> =
            times.iter().map(|&t| projection_at(&path, t)).collect();
        let err = pump_chern(&times, &projections, path.lattice(), &window).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }
}
