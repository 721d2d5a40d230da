//! Equilibrium observables: Chern markers, Bloch band geometry, correlation
//! measures, density of states, orbital magnetization by three independent
//! routes, and the magnetic/chemical-potential response identities tying
//! them together.

pub mod bloch;
pub mod ccm;
pub mod chern;
pub mod mag;

pub use bloch::{bloch_bands, magnetization_bloch, magnetization_spectral_pairs, BlochBandData};
pub use ccm::{
    current_current_measure, dmu_magnetization_ccm, dos, g_kernel, g_kernel_dmu, g_kernel_inf,
    integrated_density, localization_length, magnetization_ccm, particle_density, pressure,
    CCMeasure, DOSHistogram, LocalizationLength,
};
pub use chern::{chern_number, ChernValue};
pub use mag::{
    dmu_magnetization, magnetization_t0, streda_check, susceptibility_fd, DmuMagnetization,
    MagnetizationT0, StredaCheck,
};

use crate::algebra::{Spectral, TraceWindow};

/// A real result carrying the size of the imaginary part that was discarded;
/// self-adjointness makes the exact quantity real, so the defect measures
/// numerical (window/rounding) contamination.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosedValue {
    pub value: f64,
    pub imag_defect: f64,
}

/// Per-eigenvector window weights `ω_a = Σ_{n ∈ window dofs} |V[n,a]|²`
/// together with the window cell count, so any spectral sum
/// `T_w(φ(H)) = Σ_a φ(E_a) ω_a / |Λ_w|` becomes a dot product.
pub(crate) fn window_dof_weights(s: &Spectral, window: &TraceWindow) -> (Vec<f64>, f64) {
    let internal = s.lattice.internal_dim();
    let n = s.n();
    let mut weights = vec![0.0; n];
    for cell in window.cells() {
        for orbital in 0..internal {
            let dof = s.lattice.dof(cell, orbital);
            let row = s.evecs.row(dof);
            for (a, v) in row.iter().enumerate() {
                weights[a] += v.norm_sqr();
            }
        }
    }
    (weights, window.n_cells() as f64)
}
