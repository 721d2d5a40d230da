//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by model construction, operator algebra and experiments.
#[derive(Debug, Error)]
pub enum Error {
    /// Lattice/operator shape or axis mismatch.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A periodic axis carries a flux incompatible with single-valued phases.
    #[error(
        "flux quantization violated on periodic axis {axis}: extent {extent} requires \
         B[{axis}][{other}]*extent \u{2208} 4\u{03c0}Z, got {got}"
    )]
    FluxQuantization {
        axis: usize,
        other: usize,
        extent: usize,
        got: f64,
    },

    /// A magnetic translation emptied the lattice along an open axis.
    #[error("translation by {shift:?} annihilates the whole lattice on open axis {axis}")]
    EmptyTranslation { shift: [i64; 3], axis: usize },

    /// Chemical potential collides with an eigenvalue.
    #[error(
        "chemical potential {mu} lies within {dist:.3e} of eigenvalue {eigenvalue}; \
         nearest enclosing gap is [{gap_lo}, {gap_hi}]"
    )]
    GaplessFermiLevel {
        mu: f64,
        eigenvalue: f64,
        dist: f64,
        gap_lo: f64,
        gap_hi: f64,
    },

    /// A spectral gap required by the construction closed along the path.
    #[error("spectral gap closed at t = {t}: gap = {gap:.3e} (required > {required:.3e})")]
    GapClosed { t: f64, gap: f64, required: f64 },

    /// Two Bloch bands touch somewhere on the sampled momentum grid.
    #[error(
        "bands {lower} and {upper} touch at k = ({k0:.6}, {k1:.6}, {k2:.6}): \
         separation {separation:.3e} below threshold {threshold:.3e}"
    )]
    BandsTouch {
        lower: usize,
        upper: usize,
        k0: f64,
        k1: f64,
        k2: f64,
        separation: f64,
        threshold: f64,
    },

    /// The super-adiabatic normal form stopped being a near-projection.
    #[error(
        "super-adiabatic series diverged at t = {t}: eigenvalue {lambda:.3e} of the \
         truncated series lies in the forbidden band (0.25, 0.75); reduce epsilon"
    )]
    SeriesDiverged { t: f64, lambda: f64 },

    /// Propagation step control failed.
    #[error("evolution step too coarse: {0}")]
    StepTooCoarse(String),

    /// Configuration parsing / validation failure.
    #[error("config error: {0}")]
    Config(String),

    /// Numerical invariant drifted beyond its tolerance during a run.
    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    /// I/O failure while reading configs or writing results.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
