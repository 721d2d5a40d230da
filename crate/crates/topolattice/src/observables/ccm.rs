//! Current-current correlation measures, the two-energy thermodynamic
//! kernels built from them, density of states, pressure, particle density
//! and localization-length diagnostics.

use ndarray::Array1;

use crate::algebra::{fermi_fn, pressure_fn, trace_product_per_volume, Spectral, TraceWindow};
use crate::error::{Error, Result};
use crate::linalg::{dagger, matmul, op_norm};
use crate::observables::{window_dof_weights, DiagnosedValue};
use crate::{C64, CMatrix};

/// Default number of energy bins when the caller passes `0`.
pub const DEFAULT_BINS: usize = 200;

// ---------------------------------------------------------------------------
// Two-energy kernels
// ---------------------------------------------------------------------------

/// Derivatives of the Fermi function expressed through `u = f(E)` at the
/// midpoint; `d^n f / dE^n` for the orders used by the series branches.
fn fermi_d2(beta: f64, u: f64) -> f64 {
    beta * beta * u * (1.0 - u) * (1.0 - 2.0 * u)
}

fn fermi_d3(beta: f64, u: f64) -> f64 {
    -beta.powi(3) * u * (1.0 - u) * (1.0 - 6.0 * u + 6.0 * u * u)
}

fn fermi_d4(beta: f64, u: f64) -> f64 {
    beta.powi(4) * u * (1.0 - u) * (1.0 - 14.0 * u + 36.0 * u * u - 24.0 * u.powi(3))
}

fn fermi_d5(beta: f64, u: f64) -> f64 {
    -beta.powi(5)
        * u
        * (1.0 - u)
        * (1.0 - 30.0 * u + 150.0 * u * u - 240.0 * u.powi(3) + 120.0 * u.powi(4))
}

/// Width of the near-diagonal region where the divided differences in
/// [`g_kernel`] are evaluated by their midpoint series instead of directly.
/// At least `1e-6·max(1,|e|,|e'|)`, widened at low temperature so the series
/// takes over before the direct form loses digits to cancellation.
fn series_threshold(e: f64, ep: f64, beta: f64) -> f64 {
    let scale = e.abs().max(ep.abs()).max(1.0);
    (1e-6 * scale).max((0.05 / beta).min(1e-3))
}

/// Smooth antisymmetric two-energy weight that turns the current-current
/// correlation measure into the orbital magnetization at inverse temperature
/// `beta` and chemical potential `mu`:
///
/// `g(e, e') = (f(e) + f(e'))/(2(e'−e)) + (w(e') − w(e))/(e'−e)^2`
///
/// with `f` the Fermi function and `w(e) = (1/β)·ln(1 + exp(−β(e−μ)))`.
/// Total on all inputs: the removable singularity at `e = e'` is filled by a
/// midpoint series, and `beta = ∞` delegates to [`g_kernel_inf`].
pub fn g_kernel(e: f64, ep: f64, beta: f64, mu: f64) -> f64 {
    if beta.is_infinite() {
        return g_kernel_inf(e, ep, mu);
    }
    let s = ep - e;
    if s.abs() < series_threshold(e, ep, beta) {
        // g = −w'''(m)·δ/12 − w⁽⁵⁾(m)·δ³/480 with w''' = −f'', w⁽⁵⁾ = −f⁗.
        let u = fermi_fn(beta, mu, 0.5 * (e + ep));
        return fermi_d2(beta, u) * s / 12.0 + fermi_d4(beta, u) * s.powi(3) / 480.0;
    }
    let f = fermi_fn(beta, mu, e);
    let fp = fermi_fn(beta, mu, ep);
    let w = pressure_fn(beta, mu, e);
    let wp = pressure_fn(beta, mu, ep);
    (f + fp) / (2.0 * s) + (wp - w) / (s * s)
}

/// Zero-temperature limit of [`g_kernel`]: off the diagonal and away from
/// `mu`, `(e + e' − 2μ)·(χ(e−μ) − χ(e'−μ)) / (2(e'−e)^2)` with `χ` the
/// indicator of the negative half line. Zero when both energies sit on the
/// same side of `mu` or coincide.
pub fn g_kernel_inf(e: f64, ep: f64, mu: f64) -> f64 {
    let below = |x: f64| if x < mu { 1.0 } else { 0.0 };
    let chi = below(e) - below(ep);
    if chi == 0.0 || e == ep {
        return 0.0;
    }
    let s = ep - e;
    (e + ep - 2.0 * mu) * chi / (2.0 * s * s)
}

/// Chemical-potential derivative of [`g_kernel`]:
/// `∂μ g = (f(e') − f(e))/(e'−e)^2 − (f'(e) + f'(e'))/(2(e'−e))`,
/// with the same series treatment near the diagonal and the `beta = ∞` limit
/// `−(χ(e−μ) − χ(e'−μ))/(e'−e)^2`.
pub fn g_kernel_dmu(e: f64, ep: f64, beta: f64, mu: f64) -> f64 {
    if beta.is_infinite() {
        let below = |x: f64| if x < mu { 1.0 } else { 0.0 };
        let chi = below(e) - below(ep);
        if chi == 0.0 || e == ep {
            return 0.0;
        }
        let s = ep - e;
        return -chi / (s * s);
    }
    let s = ep - e;
    if s.abs() < series_threshold(e, ep, beta) {
        let u = fermi_fn(beta, mu, 0.5 * (e + ep));
        return -fermi_d3(beta, u) * s / 12.0 - fermi_d5(beta, u) * s.powi(3) / 480.0;
    }
    let f = fermi_fn(beta, mu, e);
    let fp = fermi_fn(beta, mu, ep);
    let df = |x: f64| -beta * fermi_fn(beta, mu, x) * (1.0 - fermi_fn(beta, mu, x));
    (fp - f) / (s * s) - (df(e) + df(ep)) / (2.0 * s)
}

// ---------------------------------------------------------------------------
// Current-current correlation measure
// ---------------------------------------------------------------------------

/// Binned approximation of the two-energy spectral measure behind
/// `T(f(H) ∇ᵢH g(H) ∇ⱼH)`: complex weights `w[i][j][b][b']` on a shared
/// energy grid such that `Σ f(E_b) g(E_{b'}) w[i][j][b][b']` reproduces the
/// windowed trace exactly for bin-constant `f, g`.
#[derive(Debug, Clone)]
pub struct CCMeasure {
    dim: usize,
    edges: Vec<f64>,
    /// Nine `n_bins × n_bins` complex weight matrices, index `i*3 + j`;
    /// axes at or above `dim` are zero.
    weights: Vec<CMatrix>,
    /// Binned trace-part mass `Σᵢ Σ_{b,b'} Re w[i][i][b][b']`.
    total_mass: f64,
    /// The same mass evaluated directly as `Σᵢ T(∇ᵢH · ∇ᵢH)` on the window.
    direct_mass: f64,
}

impl CCMeasure {
    /// Spatial dimension the gradients were supplied for.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Shared bin edges for both energy axes (`n_bins + 1` ascending values).
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn bin_width(&self) -> f64 {
        (self.edges[self.edges.len() - 1] - self.edges[0]) / self.n_bins() as f64
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        0.5 * (self.edges[b] + self.edges[b + 1])
    }

    /// Weight matrix for the axis pair `(i, j)`; zero matrix above `dim`.
    pub fn weight(&self, i: usize, j: usize) -> &CMatrix {
        &self.weights[i * 3 + j]
    }

    /// Binned trace-part mass; equals `Σᵢ T(∇ᵢH·∇ᵢH)` on the window.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// The same mass evaluated without binning, kept for validation.
    pub fn direct_mass(&self) -> f64 {
        self.direct_mass
    }

    /// Real trace-part weight `Σᵢ Re w[i][i][b][b']`.
    pub fn trace_part(&self, b: usize, bp: usize) -> f64 {
        (0..3).map(|i| self.weights[i * 3 + i][[b, bp]].re).sum()
    }

    /// Check the structural invariants: mass agreement between the binned
    /// and direct evaluation, real non-negative same-bin diagonal weights,
    /// and the conjugate-transpose symmetry between `(i,j)` and `(j,i)`.
    /// The last two hold exactly only on full trace windows; proper windows
    /// break them at the level of the window-boundary contribution.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let scale = self.direct_mass.abs().max(1.0);
        if (self.total_mass - self.direct_mass).abs() > tol * scale {
            return Err(Error::Invariant(format!(
                "binned mass {} disagrees with direct mass {}",
                self.total_mass, self.direct_mass
            )));
        }
        let nb = self.n_bins();
        for i in 0..3 {
            let wii = &self.weights[i * 3 + i];
            for b in 0..nb {
                let v = wii[[b, b]];
                if v.im.abs() > tol * scale || v.re < -tol.max(1e-12) * scale {
                    return Err(Error::Invariant(format!(
                        "diagonal weight w[{i}][{i}][{b}][{b}] = {v} is not real non-negative"
                    )));
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let wij = &self.weights[i * 3 + j];
                let wji = &self.weights[j * 3 + i];
                for b in 0..nb {
                    for bp in 0..nb {
                        let defect = (wij[[b, bp]] - wji[[bp, b]].conj()).norm();
                        if defect > tol * scale {
                            return Err(Error::Invariant(format!(
                                "weight symmetry defect {defect:.3e} at axes ({i},{j}) bins ({b},{bp})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Pair the measure with a two-energy kernel: `Σ_{b,b'} kernel(E_b, E_{b'})
    /// · w[i][j][b][b']` evaluated at bin centers.
    pub fn integrate(&self, i: usize, j: usize, kernel: impl Fn(f64, f64) -> f64) -> C64 {
        let w = self.weight(i, j);
        let nb = self.n_bins();
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..nb {
            let eb = self.bin_center(b);
            for bp in 0..nb {
                let v = w[[b, bp]];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                acc += v * kernel(eb, self.bin_center(bp));
            }
        }
        acc
    }
}

/// Locate the bin of `e` in `edges`, clamping to the outermost bins.
fn bin_of(edges: &[f64], e: f64) -> usize {
    let nb = edges.len() - 1;
    if e <= edges[0] {
        return 0;
    }
    if e >= edges[nb] {
        return nb - 1;
    }
    let lo = edges[0];
    let width = (edges[nb] - lo) / nb as f64;
    (((e - lo) / width) as usize).min(nb - 1)
}

/// Uniform bin edges spanning the eigenvalue range with a tiny guard band.
fn spectrum_edges(evals: &Array1<f64>, bins: usize) -> Vec<f64> {
    let (lo, hi) = (evals[0], evals[evals.len() - 1]);
    let width = (hi - lo).max(1e-9);
    let pad = 1e-9 * width.max(1.0) + if hi == lo { 0.5 } else { 0.0 };
    let (lo, hi) = (lo - pad, hi + pad);
    (0..=bins)
        .map(|b| lo + (hi - lo) * b as f64 / bins as f64)
        .collect()
}

/// Build the binned correlation measure from an eigendecomposition and the
/// position-gradient matrices `grad_h[axis] = ∇_axis H`. Weights are
/// eigenpair-exact before binning:
/// `w[i][j][b][b'] = Σ_{a∈b, c∈b'} (V†∇ᵢH V)[a,c] · (V†∇ⱼH Π_w V)[c,a] / |Λ_w|`
/// with `Π_w` the window restriction. `bins = 0` selects [`DEFAULT_BINS`].
pub fn current_current_measure(
    s: &Spectral,
    grad_h: &[CMatrix],
    bins: usize,
    window: &TraceWindow,
) -> Result<CCMeasure> {
    let dim = s.lattice.dim();
    if grad_h.len() != dim {
        return Err(Error::Geometry(format!(
            "expected {dim} gradient matrices, got {}",
            grad_h.len()
        )));
    }
    let n = s.n();
    for (axis, g) in grad_h.iter().enumerate() {
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::Geometry(format!(
                "gradient matrix for axis {axis} has shape {:?}, operator has {n} dofs",
                g.dim()
            )));
        }
    }
    let bins = if bins == 0 { DEFAULT_BINS } else { bins };
    let edges = spectrum_edges(&s.evals, bins);
    let bin_index: Vec<usize> = s.evals.iter().map(|&e| bin_of(&edges, e)).collect();

    let vol = window.n_cells() as f64;
    let internal = s.lattice.internal_dim();
    let vdag = dagger(&s.evecs);

    // G_i = V† ∇ᵢH V and the window-restricted companions
    // Gw_j = V† ∇ⱼH Π_w V / |Λ_w|.
    let mut g_full: Vec<CMatrix> = Vec::with_capacity(dim);
    let mut g_windowed: Vec<CMatrix> = Vec::with_capacity(dim);
    for g in grad_h {
        let left = matmul(&vdag, g);
        g_full.push(matmul(&left, &s.evecs));
        let mut masked = left;
        for cell in 0..s.lattice.n_cells() {
            if !window.contains_cell(cell) {
                for orbital in 0..internal {
                    let dof = s.lattice.dof(cell, orbital);
                    masked.column_mut(dof).fill(C64::new(0.0, 0.0));
                }
            }
        }
        let mut gw = matmul(&masked, &s.evecs);
        gw.mapv_inplace(|z| z / vol);
        g_windowed.push(gw);
    }

    let zero = CMatrix::zeros((bins, bins));
    let mut weights: Vec<CMatrix> = (0..9).map(|_| zero.clone()).collect();
    for a in 0..n {
        let ba = bin_index[a];
        for c in 0..n {
            let bc = bin_index[c];
            for i in 0..dim {
                let gia = g_full[i][[a, c]];
                if gia.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    weights[i * 3 + j][[ba, bc]] += gia * g_windowed[j][[c, a]];
                }
            }
        }
    }

    let total_mass: f64 = (0..3).map(|i| weights[i * 3 + i].sum().re).sum();
    let direct_mass: f64 = grad_h
        .iter()
        .map(|g| trace_product_per_volume(g, g, window).re)
        .sum();

    Ok(CCMeasure {
        dim,
        edges,
        weights,
        total_mass,
        direct_mass,
    })
}

/// Orbital magnetization along the axis completing `pair` to a cyclic triple,
/// via the two-energy kernel route: `i · Σ w[pair.0][pair.1] · g_{β,μ}` at
/// bin centers. The imaginary part is returned as a diagnostic; it vanishes
/// up to window effects because the kernel is antisymmetric and the weights
/// conjugate-symmetric.
pub fn magnetization_ccm(ccm: &CCMeasure, beta: f64, mu: f64, pair: (usize, usize)) -> DiagnosedValue {
    let acc = ccm.integrate(pair.0, pair.1, |e, ep| g_kernel(e, ep, beta, mu));
    let v = C64::new(0.0, 1.0) * acc;
    DiagnosedValue {
        value: v.re,
        imag_defect: v.im.abs(),
    }
}

/// Chemical-potential derivative of [`magnetization_ccm`] using the exact
/// `∂μ` kernel instead of finite differences.
pub fn dmu_magnetization_ccm(
    ccm: &CCMeasure,
    beta: f64,
    mu: f64,
    pair: (usize, usize),
) -> DiagnosedValue {
    let acc = ccm.integrate(pair.0, pair.1, |e, ep| g_kernel_dmu(e, ep, beta, mu));
    let v = C64::new(0.0, 1.0) * acc;
    DiagnosedValue {
        value: v.re,
        imag_defect: v.im.abs(),
    }
}

// ---------------------------------------------------------------------------
// Localization diagnostic
// ---------------------------------------------------------------------------

/// Square localization length of states with energy in a target interval,
/// reported in two regularizations of the near-diagonal divergence.
#[derive(Debug, Clone, Copy)]
pub struct LocalizationLength {
    /// `2 Σ_{b∈Δ, b'} trace-part / (E_b − E_{b'})²` with same-bin pairs
    /// excluded.
    pub excluded: f64,
    /// Softened variant `2 Σ trace-part / ((E_b − E_{b'})² + width²)`
    /// including all pairs.
    pub softened: f64,
}

/// Evaluate the localization diagnostic for bins whose centers lie in
/// `delta = (lo, hi)`.
pub fn localization_length(ccm: &CCMeasure, delta: (f64, f64)) -> LocalizationLength {
    let nb = ccm.n_bins();
    let width = ccm.bin_width();
    let mut excluded = 0.0;
    let mut softened = 0.0;
    for b in 0..nb {
        let eb = ccm.bin_center(b);
        if eb < delta.0 || eb > delta.1 {
            continue;
        }
        for bp in 0..nb {
            let t = ccm.trace_part(b, bp);
            if t == 0.0 {
                continue;
            }
            let de = eb - ccm.bin_center(bp);
            if de.abs() >= 0.5 * width {
                excluded += 2.0 * t / (de * de);
            }
            softened += 2.0 * t / (de * de + width * width);
        }
    }
    LocalizationLength { excluded, softened }
}

// ---------------------------------------------------------------------------
// Density of states, pressure, particle density
// ---------------------------------------------------------------------------

/// Windowed spectral histogram. Masses sum to the internal dimension per
/// cell on any window because each window row of the eigenvector matrix has
/// unit norm.
#[derive(Debug, Clone)]
pub struct DOSHistogram {
    edges: Vec<f64>,
    mass: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DOSHistogram {
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn n_bins(&self) -> usize {
        self.mass.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Cumulative mass up to each right bin edge (integrated density of
    /// states sampled at bin resolution).
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Integrated density of states at `e`: total mass of bins entirely at
    /// or below `e`.
    pub fn ids_at(&self, e: f64) -> f64 {
        let mut acc = 0.0;
        for (b, m) in self.mass.iter().enumerate() {
            if self.edges[b + 1] <= e {
                acc += m;
            }
        }
        acc
    }
}

/// Histogram of the windowed spectral measure: bin mass
/// `Σ_{E_a ∈ bin} Σ_{n ∈ window} |V[n,a]|² / |Λ_w|`.
pub fn dos(s: &Spectral, bins: usize, window: &TraceWindow) -> DOSHistogram {
    let bins = if bins == 0 { DEFAULT_BINS } else { bins };
    let edges = spectrum_edges(&s.evals, bins);
    let (weights, vol) = window_dof_weights(s, window);
    let mut mass = vec![0.0; bins];
    for (a, &e) in s.evals.iter().enumerate() {
        mass[bin_of(&edges, e)] += weights[a] / vol;
    }
    let mut cumulative = Vec::with_capacity(bins);
    let mut acc = 0.0;
    for &m in &mass {
        acc += m;
        cumulative.push(acc);
    }
    DOSHistogram {
        edges,
        mass,
        cumulative,
    }
}

/// Windowed integrated density of states at `mu`: the per-cell count of
/// spectral weight strictly below `mu`.
pub fn integrated_density(s: &Spectral, mu: f64, window: &TraceWindow) -> f64 {
    let (weights, vol) = window_dof_weights(s, window);
    s.evals
        .iter()
        .zip(weights.iter())
        .filter(|(&e, _)| e < mu)
        .map(|(_, &w)| w)
        .sum::<f64>()
        / vol
}

/// Pressure (free energy per cell): `T((1/β)·ln(1 + exp(−β(H−μ))))` on the
/// window; at `beta = ∞` the summand degenerates to `(μ − E)₊`.
pub fn pressure(s: &Spectral, beta: f64, mu: f64, window: &TraceWindow) -> f64 {
    let (weights, vol) = window_dof_weights(s, window);
    s.evals
        .iter()
        .zip(weights.iter())
        .map(|(&e, &w)| pressure_fn(beta, mu, e) * w)
        .sum::<f64>()
        / vol
}

/// Particle number per cell: `T(f_{β,μ}(H))` on the window. Equals `∂μ` of
/// [`pressure`] up to `O(δμ²)` when checked by central differences.
pub fn particle_density(s: &Spectral, beta: f64, mu: f64, window: &TraceWindow) -> f64 {
    let (weights, vol) = window_dof_weights(s, window);
    s.evals
        .iter()
        .zip(weights.iter())
        .map(|(&e, &w)| fermi_fn(beta, mu, e) * w)
        .sum::<f64>()
        / vol
}

/// Operator norm bound constant for the rectangle estimate
/// `|m_{ii}(Δ×Δ')| ≤ ‖∇ᵢH‖² √(N(Δ)·N(Δ'))`.
pub fn gradient_norm_bound(grad_h: &[CMatrix]) -> Vec<f64> {
    grad_h.iter().map(|g| op_norm(g).powi(2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::grad;
    use crate::model::catalog;
    use crate::model::{build_hamiltonian, Disorder, Lattice, MagneticField};

    fn haldane_torus(size: usize) -> (Spectral, Vec<CMatrix>, TraceWindow) {
        let lat = Lattice::torus(2, &[size, size], 2).unwrap();
        let kernel = catalog::haldane(1.0, 0.15, 0.4, 0.2).unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, &Disorder::clean()).unwrap();
        let grads = vec![grad(&h, 0).matrix, grad(&h, 1).matrix];
        let s = Spectral::new(&h).unwrap();
        let w = TraceWindow::full(&lat);
        (s, grads, w)
    }

    #[test]
    fn kernel_is_antisymmetric_and_vanishes_on_diagonal() {
        for &(e, ep) in &[(0.3, 1.7), (-2.0, 0.1), (0.5, 0.5000001)] {
            let a = g_kernel(e, ep, 4.0, 0.2);
            let b = g_kernel(ep, e, 4.0, 0.2);
            assert!((a + b).abs() < 1e-12, "antisymmetry broke: {a} vs {b}");
        }
        assert_eq!(g_kernel(0.7, 0.7, 4.0, 0.2), 0.0);
        assert_eq!(g_kernel_dmu(0.7, 0.7, 4.0, 0.2), 0.0);
    }

    #[test]
    fn kernel_series_branch_is_continuous_with_direct_branch() {
        let beta = 7.0;
        let mu = 0.1;
        for &e in &[-1.0, 0.05, 0.3, 2.0] {
            let t = series_threshold(e, e, beta);
            let just_inside = g_kernel(e, e + 0.99 * t, beta, mu);
            let just_outside = g_kernel(e, e + 1.01 * t, beta, mu);
            let scale = just_outside.abs().max(1e-12);
            assert!(
                (just_inside - just_outside).abs() < 0.05 * scale + 1e-12,
                "branch mismatch at e = {e}: {just_inside} vs {just_outside}"
            );
            let di = g_kernel_dmu(e, e + 0.99 * t, beta, mu);
            let dv = g_kernel_dmu(e, e + 1.01 * t, beta, mu);
            assert!(
                (di - dv).abs() < 0.05 * dv.abs().max(1e-12) + 1e-12,
                "dmu branch mismatch at e = {e}: {di} vs {dv}"
            );
        }
    }

    #[test]
    fn kernel_approaches_zero_temperature_limit() {
        let mu = 0.15;
        for &(e, ep) in &[(-1.2, 0.9), (-0.4, 2.0), (0.5, 1.5), (-2.0, -0.3)] {
            let lim = g_kernel_inf(e, ep, mu);
            let far = g_kernel(e, ep, 400.0, mu);
            assert!(
                (far - lim).abs() < 1e-6,
                "beta→∞ mismatch at ({e},{ep}): {far} vs {lim}"
            );
        }
    }

    #[test]
    fn dmu_kernel_matches_finite_difference_in_mu() {
        let beta = 6.0;
        let dmu = 1e-5;
        for &(e, ep) in &[(0.3, 1.7), (-1.0, -0.2), (0.2, 0.2001)] {
            let fd = (g_kernel(e, ep, beta, 0.4 + dmu) - g_kernel(e, ep, beta, 0.4 - dmu))
                / (2.0 * dmu);
            let exact = g_kernel_dmu(e, ep, beta, 0.4);
            assert!(
                (fd - exact).abs() < 1e-7 * exact.abs().max(1.0),
                "({e},{ep}): fd {fd} vs exact {exact}"
            );
        }
    }

    #[test]
    fn measure_mass_matches_direct_gradient_trace() {
        let (s, grads, w) = haldane_torus(6);
        let ccm = current_current_measure(&s, &grads, 60, &w).unwrap();
        assert!(
            (ccm.total_mass() - ccm.direct_mass()).abs() < 1e-8 * ccm.direct_mass().abs().max(1.0),
            "mass mismatch: {} vs {}",
            ccm.total_mass(),
            ccm.direct_mass()
        );
        ccm.validate(1e-10).unwrap();
    }

    #[test]
    fn measure_reproduces_windowed_trace_for_bin_constant_functions() {
        use crate::linalg::matmul3;
        let (s, grads, w) = haldane_torus(4);
        let ccm = current_current_measure(&s, &grads, 40, &w).unwrap();
        // f = g = 1 on everything: integrate with the constant kernel and
        // compare against the direct operator trace T(∇₀H ∇₁H).
        let acc = ccm.integrate(0, 1, |_, _| 1.0);
        let direct = trace_product_per_volume(&grads[0], &grads[1], &w);
        assert!(
            (acc - direct).norm() < 1e-8,
            "constant-kernel integral {acc} vs direct {direct}"
        );
        // A genuine spectral pairing: f = E below median, g = E² above.
        let median = s.evals[s.n() / 2];
        let f = |e: f64| if e < median { e } else { 0.0 };
        let g = |e: f64| if e < median { 0.0 } else { e * e };
        // Evaluate with eigenvalue-exact weights rather than bin centers by
        // using functions constant on each bin's actual eigenvalue content:
        // compare against the operator product f(H)∇₀H g(H)∇₁H directly.
        let fh = s.apply_function(f);
        let gh = s.apply_function(g);
        let left = matmul3(&fh, &grads[0], &gh);
        let direct = trace_product_per_volume(&left, &grads[1], &w);
        // Bin centers shift each eigenvalue by at most half a bin width, so
        // allow the corresponding Lipschitz slack.
        let acc = ccm.integrate(0, 1, |e, ep| f(e) * g(ep));
        assert!(
            (acc - direct).norm() < 0.4,
            "spectral pairing {acc} vs direct {direct}"
        );
    }

    #[test]
    fn flat_hamiltonian_yields_zero_measure() {
        let lat = Lattice::torus(2, &[4, 4], 1).unwrap();
        let mut kernel = crate::model::HoppingKernel::new(2, 1);
        kernel
            .add_onsite(CMatrix::from_elem((1, 1), C64::new(0.7, 0.0)))
            .unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, &Disorder::clean()).unwrap();
        let grads = vec![grad(&h, 0).matrix, grad(&h, 1).matrix];
        let s = Spectral::new(&h).unwrap();
        let w = TraceWindow::full(&lat);
        let ccm = current_current_measure(&s, &grads, 8, &w).unwrap();
        assert!(ccm.total_mass().abs() < 1e-12);
        let m = magnetization_ccm(&ccm, 3.0, 0.7, (0, 1));
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn rectangle_bound_holds_on_random_bin_rectangles() {
        let (s, grads, w) = haldane_torus(6);
        let ccm = current_current_measure(&s, &grads, 50, &w).unwrap();
        let hist = dos(&s, 50, &w);
        let bounds = gradient_norm_bound(&grads);
        let nb = ccm.n_bins();
        // All contiguous rectangles of a few widths.
        for lo in (0..nb).step_by(7) {
            for len in [3usize, 11, 25] {
                let hi = (lo + len).min(nb);
                for lop in (0..nb).step_by(9) {
                    let hip = (lop + len).min(nb);
                    for i in 0..2 {
                        let m: f64 = (lo..hi)
                            .flat_map(|b| (lop..hip).map(move |bp| (b, bp)))
                            .map(|(b, bp)| ccm.weight(i, i)[[b, bp]].re)
                            .sum();
                        let n1: f64 = hist.mass()[lo..hi].iter().sum();
                        let n2: f64 = hist.mass()[lop..hip].iter().sum();
                        let bound = bounds[i] * (n1 * n2).sqrt();
                        assert!(
                            m.abs() <= bound + 1e-10,
                            "rectangle bound violated: |{m}| > {bound}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dos_mass_equals_internal_dimension_on_any_window() {
        let lat = Lattice::open(2, &[8, 8], 2).unwrap();
        let kernel = catalog::haldane(1.0, 0.1, 0.3, 0.15).unwrap();
        let h = build_hamiltonian(
            &lat,
            &MagneticField::ZERO,
            &kernel,
            &Disorder::uniform(0.5, 3),
        )
        .unwrap();
        let s = Spectral::new(&h).unwrap();
        for w in [
            TraceWindow::full(&lat),
            TraceWindow::with_margin(&lat, 2).unwrap(),
        ] {
            let hist = dos(&s, 64, &w);
            assert!(
                (hist.total_mass() - 2.0).abs() < 1e-10,
                "mass {} ≠ internal dim",
                hist.total_mass()
            );
            let c = hist.cumulative();
            assert!((c[c.len() - 1] - 2.0).abs() < 1e-10);
            assert!(c.windows(2).all(|p| p[1] >= p[0] - 1e-15));
        }
    }

    #[test]
    fn pressure_vanishes_below_spectrum_and_matches_scalar_formula() {
        let lat = Lattice::open(1, &[1], 1).unwrap();
        let mut kernel = crate::model::HoppingKernel::new(1, 1);
        kernel.add_onsite(CMatrix::zeros((1, 1))).unwrap();
        let h = build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, &Disorder::clean()).unwrap();
        let s = Spectral::new(&h).unwrap();
        let w = TraceWindow::full(&lat);
        let beta = 2.3_f64;
        let mu = 0.8_f64;
        let exact = (1.0 + (beta * mu).exp()).ln() / beta;
        assert!((pressure(&s, beta, mu, &w) - exact).abs() < 1e-14);

        // μ far below a gapped spectrum at low temperature: empty band.
        let (s2, _, w2) = haldane_torus(4);
        let below = s2.evals[0] - 3.0;
        assert!(pressure(&s2, f64::INFINITY, below, &w2).abs() < 1e-14);
        assert!(pressure(&s2, 60.0, below, &w2).abs() < 1e-12);
    }

    #[test]
    fn particle_density_is_mu_derivative_of_pressure() {
        let (s, _, w) = haldane_torus(6);
        let beta = 5.0;
        let mu = 0.4;
        let dmu = 1e-4;
        let fd = (pressure(&s, beta, mu + dmu, &w) - pressure(&s, beta, mu - dmu, &w))
            / (2.0 * dmu);
        let direct = particle_density(&s, beta, mu, &w);
        assert!(
            (fd - direct).abs() < 1e-6,
            "∂μp = {fd} vs density {direct}"
        );
    }

    #[test]
    fn localization_diagnostic_is_zero_in_gaps_and_for_flat_models() {
        let (s, grads, w) = haldane_torus(6);
        let ccm = current_current_measure(&s, &grads, 80, &w).unwrap();
        // The Haldane parameters leave a gap around E ≈ 0.2 (mid-gap of the
        // clean model); a thin interval inside it carries no weight.
        let gap = s.nearest_gap(0.2);
        let mid = 0.5 * (gap.0 + gap.1);
        let eps = 0.05 * (gap.1 - gap.0);
        let l = localization_length(&ccm, (mid - eps, mid + eps));
        assert_eq!(l.excluded, 0.0);
        assert_eq!(l.softened, 0.0);

        let lat = Lattice::torus(1, &[8], 1).unwrap();
        let mut kernel = crate::model::HoppingKernel::new(1, 1);
        kernel.add_onsite(CMatrix::zeros((1, 1))).unwrap();
        let h =
            build_hamiltonian(&lat, &MagneticField::ZERO, &kernel, &Disorder::uniform(1.0, 5))
                .unwrap();
        let s = Spectral::new(&h).unwrap();
        let w = TraceWindow::full(&lat);
        let grads = vec![grad(&h, 0).matrix];
        let ccm = current_current_measure(&s, &grads, 16, &w).unwrap();
        let l = localization_length(&ccm, (-2.0, 2.0));
        assert_eq!(l.excluded, 0.0);
        assert_eq!(l.softened, 0.0);
    }

    #[test]
    fn anderson_localization_trend_decreases_with_disorder() {
        // Recorded trend: stronger disorder shortens the localization
        // diagnostic at fixed energy interval.
        let lat = Lattice::torus(1, &[64], 1).unwrap();
        let kernel = catalog::anderson(1, 1.0).unwrap();
        let mut values = Vec::new();
        for &wdis in &[0.5, 4.0] {
            let h = build_hamiltonian(
                &lat,
                &MagneticField::ZERO,
                &kernel,
                &Disorder::uniform(wdis, 11),
            )
            .unwrap();
            let s = Spectral::new(&h).unwrap();
            let w = TraceWindow::full(&lat);
            let grads = vec![grad(&h, 0).matrix];
            let ccm = current_current_measure(&s, &grads, 60, &w).unwrap();
            values.push(localization_length(&ccm, (-1.0, 1.0)).softened);
        }
        assert!(
            values[1] < values[0],
            "localization did not shrink with disorder: {values:?}"
        );
    }
}
