//! Momentum-space band geometry for clean periodic models at zero field:
//! band energies and projectors on a uniform grid over `[0, 2π)^d`, the two
//! band tensors weighting the magnetization, plaquette-quantized band
//! invariants, and a spectrally-resolved magnetization route that bypasses
//! projector derivatives entirely.

use crate::algebra::{fermi_fn, pressure_fn};
use crate::error::{Error, Result};
use crate::linalg::{dagger, eigh, matmul, matmul3};
use crate::model::HoppingKernel;
use crate::observables::ccm::g_kernel;
use crate::{C64, CMatrix};

/// Step used for the gauge-invariant projector finite differences in `k`.
const K_STEP: f64 = 1e-4;

/// Band data on a uniform momentum grid: energies, spectral projectors, and
/// the two antisymmetric band tensors entering the magnetization. Projector
/// derivatives are central finite differences of freshly diagonalized
/// neighbors, so no eigenvector phase ever enters.
#[derive(Debug, Clone)]
pub struct BlochBandData {
    dim: usize,
    n_k: usize,
    n_bands: usize,
    /// `energies[p * n_bands + l]` at grid point `p`.
    energies: Vec<f64>,
    /// `projectors[p * n_bands + l]`, each `n_bands × n_bands`.
    projectors: Vec<CMatrix>,
    /// Curvature tensor `Ω^{(l)}_{ij} = i·Tr(P_l [∂ᵢP_l, ∂ⱼP_l])`,
    /// flattened as `[(p*n_bands + l)*9 + i*3 + j]`.
    omega: Vec<f64>,
    /// Energy-weighted tensor
    /// `R^{(l)}_{ij} = (i/2)(Tr(P_l ∂ᵢP_l (H−E_l) ∂ⱼP_l) − (i ↔ j))`,
    /// same layout.
    rw: Vec<f64>,
    /// Max over the grid of `‖Σ_l P_l − 1‖` (Frobenius).
    pub resolution_defect: f64,
    /// Max imaginary part discarded from the two tensors.
    pub reality_defect: f64,
    /// Smallest gap between consecutive bands seen on the grid.
    pub min_separation: f64,
}

impl BlochBandData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_k(&self) -> usize {
        self.n_k
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn n_points(&self) -> usize {
        self.n_k.pow(self.dim as u32)
    }

    /// Multi-index of grid point `p` (first axis fastest).
    fn grid_index(&self, p: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = p;
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dim) {
            let _ = axis;
            *slot = rest % self.n_k;
            rest /= self.n_k;
        }
        idx
    }

    /// Momentum of grid point `p`.
    pub fn k_at(&self, p: usize) -> [f64; 3] {
        let idx = self.grid_index(p);
        let mut k = [0.0; 3];
        for axis in 0..self.dim {
            k[axis] = 2.0 * std::f64::consts::PI * idx[axis] as f64 / self.n_k as f64;
        }
        k
    }

    /// Grid point reached from `p` by one step along `axis` (periodic).
    fn neighbor(&self, p: usize, axis: usize) -> usize {
        let mut idx = self.grid_index(p);
        idx[axis] = (idx[axis] + 1) % self.n_k;
        let mut out = 0usize;
        for a in (0..self.dim).rev() {
            out = out * self.n_k + idx[a];
        }
        out
    }

    pub fn energy(&self, p: usize, band: usize) -> f64 {
        self.energies[p * self.n_bands + band]
    }

    pub fn projector(&self, p: usize, band: usize) -> &CMatrix {
        &self.projectors[p * self.n_bands + band]
    }

    pub fn omega(&self, p: usize, band: usize, i: usize, j: usize) -> f64 {
        self.omega[(p * self.n_bands + band) * 9 + i * 3 + j]
    }

    pub fn rw(&self, p: usize, band: usize, i: usize, j: usize) -> f64 {
        self.rw[(p * self.n_bands + band) * 9 + i * 3 + j]
    }

    /// Range of one band over the grid.
    pub fn band_range(&self, band: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in 0..self.n_points() {
            let e = self.energy(p, band);
            lo = lo.min(e);
            hi = hi.max(e);
        }
        (lo, hi)
    }

    /// Grid Riemann sum of the curvature over the Brillouin zone divided by
    /// 2π; converges to the same integer as [`Self::band_chern`]. Two
    /// dimensions only.
    pub fn berry_integral(&self, band: usize, pair: (usize, usize)) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::Geometry(format!(
                "curvature integral needs a 2-dimensional grid, got {}",
                self.dim
            )));
        }
        let sum: f64 = (0..self.n_points())
            .map(|p| self.omega(p, band, pair.0, pair.1))
            .sum();
        Ok(sum * 2.0 * std::f64::consts::PI / self.n_points() as f64)
    }

    /// Integer band invariant by the plaquette method: the total argument of
    /// the projector Wilson loops around all grid plaquettes, divided by 2π.
    /// Exactly integral up to rounding whenever every plaquette stays away
    /// from the branch cut. Two dimensions only.
    pub fn band_chern(&self, band: usize, pair: (usize, usize)) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::Geometry(format!(
                "plaquette invariant needs a 2-dimensional grid, got {}",
                self.dim
            )));
        }
        let (i, j) = pair;
        let mut total = 0.0;
        for p in 0..self.n_points() {
            let pi = self.neighbor(p, i);
            let pij = self.neighbor(pi, j);
            let pj = self.neighbor(p, j);
            // Traverse the plaquette `k → k+δⱼ → k+δᵢ+δⱼ → k+δᵢ → k`: with
            // this orientation the accumulated argument matches the sign of
            // the curvature tensor `omega`, hence of the real-space
            // commutator invariant.
            let loop_product = matmul(
                &matmul(self.projector(p, band), self.projector(pj, band)),
                &matmul(self.projector(pij, band), self.projector(pi, band)),
            );
            let c = crate::linalg::trace(&loop_product);
            if c.norm() < 1e-12 {
                return Err(Error::Invariant(format!(
                    "degenerate Wilson loop at grid point {p}: |tr| = {:.3e}",
                    c.norm()
                )));
            }
            total += c.arg();
        }
        Ok(total / (2.0 * std::f64::consts::PI))
    }
}

/// Diagonalize `kernel` on an `n_k^d` momentum grid and attach the band
/// tensors. Refuses grids on which two consecutive bands come closer than
/// `1e-6·max(1, width)` anywhere, reporting the crossing location.
pub fn bloch_bands(kernel: &HoppingKernel, n_k: usize) -> Result<BlochBandData> {
    let dim = kernel.dim();
    let n_bands = kernel.internal_dim();
    if n_k < 2 {
        return Err(Error::Config(format!("grid needs n_k ≥ 2, got {n_k}")));
    }
    let n_points = n_k.pow(dim as u32);

    let mut data = BlochBandData {
        dim,
        n_k,
        n_bands,
        energies: Vec::with_capacity(n_points * n_bands),
        projectors: Vec::with_capacity(n_points * n_bands),
        omega: vec![0.0; n_points * n_bands * 9],
        rw: vec![0.0; n_points * n_bands * 9],
        resolution_defect: 0.0,
        reality_defect: 0.0,
        min_separation: f64::INFINITY,
    };

    let projectors_at = |k: [f64; 3]| -> (Vec<f64>, Vec<CMatrix>, CMatrix) {
        let h = kernel.bloch(k);
        let (evals, evecs) = eigh(&h);
        let mut projs = Vec::with_capacity(n_bands);
        for l in 0..n_bands {
            let col = evecs.column(l);
            let mut p = CMatrix::zeros((n_bands, n_bands));
            for r in 0..n_bands {
                for c in 0..n_bands {
                    p[[r, c]] = col[r] * col[c].conj();
                }
            }
            projs.push(p);
        }
        (evals.to_vec(), projs, h)
    };

    // First pass: spectrum, projectors, crossing detection.
    let mut hamiltonians = Vec::with_capacity(n_points);
    let mut width = 0.0_f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in 0..n_points {
        let k = {
            // Temporary grid math; `data` already knows its layout.
            let mut idx = [0usize; 3];
            let mut rest = p;
            for slot in idx.iter_mut().take(dim) {
                *slot = rest % n_k;
                rest /= n_k;
            }
            let mut k = [0.0; 3];
            for a in 0..dim {
                k[a] = 2.0 * std::f64::consts::PI * idx[a] as f64 / n_k as f64;
            }
            k
        };
        let (evals, projs, h) = projectors_at(k);
        lo = lo.min(evals[0]);
        hi = hi.max(evals[n_bands - 1]);
        width = width.max(hi - lo);
        data.energies.extend_from_slice(&evals);
        data.projectors.extend(projs);
        hamiltonians.push(h);
    }
    let threshold = 1e-6 * width.max(1.0);
    for p in 0..n_points {
        for l in 0..n_bands.saturating_sub(1) {
            let sep = data.energies[p * n_bands + l + 1] - data.energies[p * n_bands + l];
            data.min_separation = data.min_separation.min(sep);
            if sep < threshold {
                let k = data.k_at(p);
                return Err(Error::BandsTouch {
                    lower: l,
                    upper: l + 1,
                    k0: k[0],
                    k1: k[1],
                    k2: k[2],
                    separation: sep,
                    threshold,
                });
            }
        }
    }

    // Second pass: projector finite differences and the band tensors.
    let eye = crate::linalg::eye(n_bands);
    for p in 0..n_points {
        let k = data.k_at(p);
        // dP[axis][band]
        let mut dp: Vec<Vec<CMatrix>> = Vec::with_capacity(dim);
        for axis in 0..dim {
            let mut kp = k;
            let mut km = k;
            kp[axis] += K_STEP;
            km[axis] -= K_STEP;
            let (_, plus, _) = projectors_at(kp);
            let (_, minus, _) = projectors_at(km);
            let per_band: Vec<CMatrix> = (0..n_bands)
                .map(|l| {
                    let mut d = &plus[l] - &minus[l];
                    d.mapv_inplace(|z| z / (2.0 * K_STEP));
                    d
                })
                .collect();
            dp.push(per_band);
        }

        let h = &hamiltonians[p];
        let mut sum = CMatrix::zeros((n_bands, n_bands));
        for l in 0..n_bands {
            sum = sum + data.projector(p, l);
        }
        let defect = crate::linalg::fro_norm(&(&sum - &eye));
        data.resolution_defect = data.resolution_defect.max(defect);

        for l in 0..n_bands {
            let e_l = data.energy(p, l);
            let proj = data.projector(p, l).clone();
            let shifted = h - &(eye.mapv(|z| z * e_l));
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let di = &dp[i][l];
                    let dj = &dp[j][l];
                    // Ω = i·(Tr(P dᵢP dⱼP) − Tr(P dⱼP dᵢP))
                    let t_ij = crate::linalg::trace(&matmul3(&proj, di, dj));
                    let omega = C64::new(0.0, 1.0) * (t_ij - t_ij.conj());
                    // R = (i/2)·(Tr(P dᵢP (H−E) dⱼP) − conj)
                    let z = crate::linalg::trace(&matmul(&matmul3(&proj, di, &shifted), dj));
                    let rw = C64::new(0.0, 0.5) * (z - z.conj());
                    data.reality_defect = data
                        .reality_defect
                        .max(omega.im.abs())
                        .max(rw.im.abs());
                    let base = (p * n_bands + l) * 9;
                    data.omega[base + i * 3 + j] = omega.re;
                    data.omega[base + j * 3 + i] = -omega.re;
                    data.rw[base + i * 3 + j] = rw.re;
                    data.rw[base + j * 3 + i] = -rw.re;
                }
            }
        }
    }
    Ok(data)
}

/// Grid Riemann sum of the band-tensor magnetization along the axis
/// completing `pair` to a cyclic triple:
///
/// `M = (1/N) Σ_{k,l} [ f_{β,μ}(E_l) · R^{(l)} − w_{β,μ}(E_l) · Ω^{(l)} ]`
///
/// with `w(e) = (1/β)·ln(1 + e^{−β(e−μ)})`. The two tensors enter with
/// opposite signs; with this orientation the sum agrees identically with
/// the two-energy kernel route [`magnetization_spectral_pairs`] and, through
/// it, with the real-space routes. Supports `beta = ∞`.
pub fn magnetization_bloch(data: &BlochBandData, beta: f64, mu: f64, pair: (usize, usize)) -> f64 {
    let mut acc = 0.0;
    for p in 0..data.n_points() {
        for l in 0..data.n_bands() {
            let e = data.energy(p, l);
            acc += fermi_fn(beta, mu, e) * data.rw(p, l, pair.0, pair.1)
                - pressure_fn(beta, mu, e) * data.omega(p, l, pair.0, pair.1);
        }
    }
    acc / data.n_points() as f64
}

/// Independent magnetization route that never differentiates projectors:
///
/// `M = (1/N) Σ_k Σ_{l≠n} Re[ i · g_{β,μ}(E_l, E_n) · Tr(P_l ∂ᵢH P_n ∂ⱼH) ]`
///
/// with analytic `∂H` from the hopping kernel and the antisymmetric
/// two-energy kernel `g`. Demands nothing about band isolation: the kernel
/// vanishes smoothly on the diagonal.
pub fn magnetization_spectral_pairs(
    kernel: &HoppingKernel,
    n_k: usize,
    beta: f64,
    mu: f64,
    pair: (usize, usize),
) -> Result<f64> {
    let dim = kernel.dim();
    if pair.0 >= dim || pair.1 >= dim || pair.0 == pair.1 {
        return Err(Error::Geometry(format!(
            "invalid axis pair {pair:?} for dimension {dim}"
        )));
    }
    if n_k < 2 {
        return Err(Error::Config(format!("grid needs n_k ≥ 2, got {n_k}")));
    }
    let n_bands = kernel.internal_dim();
    let n_points = n_k.pow(dim as u32);
    let mut acc = 0.0;
    for p in 0..n_points {
        let mut idx = [0usize; 3];
        let mut rest = p;
        for slot in idx.iter_mut().take(dim) {
            *slot = rest % n_k;
            rest /= n_k;
        }
        let mut k = [0.0; 3];
        for a in 0..dim {
            k[a] = 2.0 * std::f64::consts::PI * idx[a] as f64 / n_k as f64;
        }
        let h = kernel.bloch(k);
        let (evals, evecs) = eigh(&h);
        let vdag = dagger(&evecs);
        let g1 = matmul3(&vdag, &kernel.bloch_derivative(k, pair.0), &evecs);
        let g2 = matmul3(&vdag, &kernel.bloch_derivative(k, pair.1), &evecs);
        for l in 0..n_bands {
            for n in 0..n_bands {
                if l == n {
                    continue;
                }
                let weight = g_kernel(evals[l], evals[n], beta, mu);
                let t = g1[[l, n]] * g2[[n, l]];
                acc += (C64::new(0.0, weight) * t).re;
            }
        }
    }
    Ok(acc / n_points as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;

    /// Two-band model with exact particle-hole symmetry `E₂(k) = −E₁(k)`:
    /// `H(k) = sin k₁ σ₁ + sin k₂ σ₂ + (m − cos k₁ − cos k₂) σ₃`.
    fn chiral_two_band(m: f64) -> HoppingKernel {
        let [s1, s2, s3] = catalog::pauli();
        let mut kernel = HoppingKernel::new(2, 2);
        kernel.add_onsite(s3.mapv(|z| z * m)).unwrap();
        let half_i = C64::new(0.0, 0.5);
        // sin k₁ σ₁ − cos k₁ σ₃ needs T_{e₁} = (i σ₁ − σ₃)/2 under
        // H(k) = Σ T_m e^{−ik·m} with T_{−m} = T_m†.
        kernel
            .add_hop(
                [1, 0, 0],
                s1.mapv(|z| z * half_i) + s3.mapv(|z| z * C64::new(-0.5, 0.0)),
            )
            .unwrap();
        kernel
            .add_hop(
                [0, 1, 0],
                s2.mapv(|z| z * half_i) + s3.mapv(|z| z * C64::new(-0.5, 0.0)),
            )
            .unwrap();
        kernel
    }

    #[test]
    fn chiral_model_bands_are_symmetric_and_gapped() {
        let data = bloch_bands(&chiral_two_band(1.0), 20).unwrap();
        for p in 0..data.n_points() {
            assert!(
                (data.energy(p, 0) + data.energy(p, 1)).abs() < 1e-12,
                "bands not symmetric at point {p}"
            );
        }
        assert!(data.min_separation > 0.5);
        assert!(data.resolution_defect < 1e-10);
        assert!(data.reality_defect < 1e-10);
    }

    #[test]
    fn band_invariants_are_integers_matching_the_curvature_integral() {
        // m = 1: invariant ±1; m = 3: trivial.
        let data = bloch_bands(&chiral_two_band(1.0), 24).unwrap();
        let ch = data.band_chern(0, (0, 1)).unwrap();
        assert!(
            (ch - ch.round()).abs() < 1e-6,
            "plaquette invariant not integral: {ch}"
        );
        assert_eq!(ch.round().abs() as i64, 1, "expected |Ch| = 1, got {ch}");
        let berry = data.berry_integral(0, (0, 1)).unwrap();
        assert!(
            (berry - ch).abs() < 1e-4,
            "curvature integral {berry} vs plaquette {ch}"
        );
        // Band sum is trivial.
        let ch2 = data.band_chern(1, (0, 1)).unwrap();
        assert!((ch + ch2).abs() < 1e-6);

        let trivial = bloch_bands(&chiral_two_band(3.0), 24).unwrap();
        let ch0 = trivial.band_chern(0, (0, 1)).unwrap();
        assert!(ch0.abs() < 1e-6, "trivial phase invariant {ch0}");
    }

    #[test]
    fn haldane_lower_band_carries_unit_invariant() {
        let kernel = catalog::haldane(1.0, 0.3, std::f64::consts::FRAC_PI_2, 0.2).unwrap();
        let data = bloch_bands(&kernel, 24).unwrap();
        let ch = data.band_chern(0, (0, 1)).unwrap();
        assert!((ch - ch.round()).abs() < 1e-6);
        assert_eq!(ch.round().abs() as i64, 1);
        let berry = data.berry_integral(0, (0, 1)).unwrap();
        assert!((berry - ch).abs() < 1e-4);
    }

    #[test]
    fn touching_bands_are_refused_with_location() {
        // Honeycomb with neither chiral hopping nor mass: Dirac points on
        // the grid when n_k is a multiple of 3.
        let kernel = catalog::haldane(1.0, 0.0, 0.0, 0.0).unwrap();
        let err = bloch_bands(&kernel, 24).unwrap_err();
        match err {
            Error::BandsTouch {
                lower,
                upper,
                separation,
                ..
            } => {
                assert_eq!((lower, upper), (0, 1));
                assert!(separation < 1e-8);
            }
            other => panic!("expected touching-band refusal, got {other:?}"),
        }
    }

    #[test]
    fn flat_decoupled_bands_have_no_geometry() {
        let mut kernel = HoppingKernel::new(2, 2);
        let mut onsite = CMatrix::zeros((2, 2));
        onsite[[0, 0]] = C64::new(-0.5, 0.0);
        onsite[[1, 1]] = C64::new(0.8, 0.0);
        kernel.add_onsite(onsite).unwrap();
        let data = bloch_bands(&kernel, 8).unwrap();
        for p in 0..data.n_points() {
            for l in 0..2 {
                assert_eq!(data.omega(p, l, 0, 1), 0.0);
                assert_eq!(data.rw(p, l, 0, 1), 0.0);
            }
        }
        assert_eq!(magnetization_bloch(&data, 5.0, 0.1, (0, 1)), 0.0);
        let pairs = magnetization_spectral_pairs(&kernel, 8, 5.0, 0.1, (0, 1)).unwrap();
        assert_eq!(pairs, 0.0);
    }

    #[test]
    fn band_tensor_route_equals_two_energy_route() {
        // The decisive internal-consistency check for the relative sign of
        // the two band tensors: both routes must produce the same number at
        // any temperature and filling.
        let kernel = chiral_two_band(1.0);
        let data = bloch_bands(&kernel, 20).unwrap();
        for &(beta, mu) in &[(4.0, 0.3), (50.0, 0.0), (f64::INFINITY, 0.2)] {
            let tensor_route = magnetization_bloch(&data, beta, mu, (0, 1));
            let pairs_route =
                magnetization_spectral_pairs(&kernel, 20, beta, mu, (0, 1)).unwrap();
            assert!(
                (tensor_route - pairs_route).abs() < 1e-6,
                "routes diverge at β = {beta}, μ = {mu}: {tensor_route} vs {pairs_route}"
            );
        }
    }

    #[test]
    fn particle_hole_symmetric_filling_has_zero_magnetization() {
        // With E₂ = −E₁ and μ = 0 the energy-weighted tensor reduces to
        // R^{(l)} = −E_l Ω^{(l)} band by band, so the two contributions
        // cancel exactly at zero temperature.
        let kernel = chiral_two_band(1.0);
        let data = bloch_bands(&kernel, 20).unwrap();
        for p in 0..data.n_points() {
            for l in 0..2 {
                let r = data.rw(p, l, 0, 1);
                let expect = -data.energy(p, l) * data.omega(p, l, 0, 1);
                assert!(
                    (r - expect).abs() < 1e-6,
                    "tensor relation broke at ({p},{l}): {r} vs {expect}"
                );
            }
        }
        let m = magnetization_bloch(&data, f64::INFINITY, 0.0, (0, 1));
        assert!(m.abs() < 1e-10, "symmetric-filling magnetization {m}");
        let pairs = magnetization_spectral_pairs(&kernel, 20, f64::INFINITY, 0.0, (0, 1)).unwrap();
        assert!(pairs.abs() < 1e-10);
    }

    #[test]
    fn haldane_routes_agree_at_low_temperature() {
        let kernel = catalog::haldane(1.0, 0.3, std::f64::consts::FRAC_PI_2, 0.2).unwrap();
        let data = bloch_bands(&kernel, 24).unwrap();
        // μ mid-gap: between the band maxima of band 0 and minima of band 1.
        let (_, top0) = data.band_range(0);
        let (bottom1, _) = data.band_range(1);
        let mu = 0.5 * (top0 + bottom1);
        for &beta in &[5.0, 50.0, f64::INFINITY] {
            let tensor_route = magnetization_bloch(&data, beta, mu, (0, 1));
            let pairs_route =
                magnetization_spectral_pairs(&kernel, 24, beta, mu, (0, 1)).unwrap();
            assert!(
                (tensor_route - pairs_route).abs() < 1e-6,
                "β = {beta}: {tensor_route} vs {pairs_route}"
            );
        }
    }
}
