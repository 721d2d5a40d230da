//! Driven dynamics: slow time-dependent Hamiltonians, transported charge,
//! and superadiabatic projections.
//!
//! The module is organized around [`TimePath`], an analytic description of a
//! driven Hamiltonian that yields Taylor jets of any order. On top of it:
//! [`evolve_liouville`] transports states with exactly unitary midpoint
//! steps, [`polarization_dynamic`] / [`polarization_kv`] / [`pump_chern`]
//! measure the charge moved per cycle, and [`superadiabatic_construct`]
//! builds the order-`N` expansion whose error norms
//! [`superadiabatic_verify`] fits against the adiabatic parameter.

pub mod jet;
pub mod liouville;
pub mod path;
pub mod polarization;
pub mod superadiabatic;

pub use jet::{EigenFrame, MatrixJet, ScalarJet};
pub use liouville::{
    evolve_liouville, evolve_liouville_with, plan_steps, EvolvedState, LiouvilleStepper,
    DEFAULT_STEP_FACTOR,
};
pub use path::{
    rice_mele_path, two_level_path, PathCheck, PathEnds, PathTerm, ScalarPath, SmoothSwitch,
    TimePath,
};
pub use polarization::{
    polarization_dynamic, polarization_dynamic_with, polarization_kv, pump_chern,
    DynamicPolarization, KvPolarization,
};
pub use superadiabatic::{
    log_log_slope, partial_sum_idempotency_residual, partial_sum_intertwiner_residual,
    series_residuals, superadiabatic_construct, superadiabatic_verify, ScalingReport,
    SeriesResiduals, SuperadiabaticSeries,
};
