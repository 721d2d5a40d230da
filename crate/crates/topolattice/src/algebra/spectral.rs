//! Eigendecomposition and functional calculus for Hermitian operators.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::{self, eigh};
use crate::model::{Lattice, MagneticField, Operator};
use crate::{C64, CMatrix};

/// Fermi occupation `1/(1 + e^{β(E−μ)})`, overflow-safe; `β = ∞` gives the
/// sharp step (value `1/2` exactly at `μ`).
pub fn fermi_fn(beta: f64, mu: f64, e: f64) -> f64 {
    if beta.is_infinite() {
        return if e < mu {
            1.0
        } else if e > mu {
            0.0
        } else {
            0.5
        };
    }
    let x = beta * (e - mu);
    if x >= 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Energy derivative of the Fermi occupation, `∂f/∂E = −β f(1−f)`;
/// zero in the `β = ∞` limit (off the Fermi level).
pub fn fermi_deriv_fn(beta: f64, mu: f64, e: f64) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    let f = fermi_fn(beta, mu, e);
    -beta * f * (1.0 - f)
}

/// Free-energy-density weight `(1/β)·ln(1 + e^{−β(E−μ)})`; the grand-canonical
/// pressure is its trace per volume. `β = ∞` gives `max(μ−E, 0)`.
pub fn pressure_fn(beta: f64, mu: f64, e: f64) -> f64 {
    if beta.is_infinite() {
        return (mu - e).max(0.0);
    }
    let x = beta * (e - mu);
    ((-x).max(0.0) + (-x.abs()).exp().ln_1p()) / beta
}

/// Eigendecomposition of a Hermitian operator, carrying the geometry it was
/// computed on. Eigenvalues ascend; column `k` of `evecs` is the eigenvector
/// of `evals[k]`.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub lattice: Lattice,
    pub field: MagneticField,
    pub evals: Array1<f64>,
    pub evecs: CMatrix,
}

impl Spectral {
    /// Diagonalize a Hermitian operator. Rejects matrices whose Hermiticity
    /// defect exceeds `1e-8` of their norm.
    pub fn new(op: &Operator) -> Result<Self> {
        let scale = linalg::fro_norm(&op.matrix).max(1.0);
        let defect = linalg::hermiticity_defect(&op.matrix);
        if defect > 1e-8 * scale {
            return Err(Error::Invariant(format!(
                "matrix is not Hermitian: defect {defect:.3e} on scale {scale:.3e}"
            )));
        }
        let (evals, evecs) = eigh(&op.matrix);
        Ok(Spectral {
            lattice: op.lattice.clone(),
            field: op.field,
            evals,
            evecs,
        })
    }

    pub fn n(&self) -> usize {
        self.evals.len()
    }

    /// Spectral width `E_max − E_min`, the scale used for near-degeneracy
    /// thresholds.
    pub fn width(&self) -> f64 {
        if self.evals.is_empty() {
            0.0
        } else {
            self.evals[self.evals.len() - 1] - self.evals[0]
        }
    }

    /// `V f(Λ) V†` for a real scalar function.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        linalg::matrix_function(&self.evals, &self.evecs, f)
    }

    /// `V f(Λ) V†` with complex weights.
    pub fn apply_function_c(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        linalg::weighted_recompose(&self.evals, &self.evecs, f)
    }

    /// Matrix exponential `e^{zH}`.
    pub fn exponential(&self, z: C64) -> CMatrix {
        self.apply_function_c(|e| (z * e).exp())
    }

    /// `V Λ V†` — rebuilds the source matrix.
    pub fn reconstruct(&self) -> CMatrix {
        self.apply_function(|e| e)
    }

    /// Orthonormality (`‖V†V − 1‖ ≤ 1e-10`) and reconstruction
    /// (`‖VΛV† − H‖ ≤ 1e-10·‖H‖`) checks against the source matrix.
    pub fn verify(&self, source: &CMatrix) -> Result<()> {
        let vdv = linalg::matmul(&linalg::dagger(&self.evecs), &self.evecs);
        let ortho = linalg::fro_norm(&(&vdv - &linalg::eye(self.n())));
        if ortho > 1e-10 {
            return Err(Error::Invariant(format!(
                "eigenvector matrix is not orthonormal: ‖V†V − 1‖ = {ortho:.3e}"
            )));
        }
        let scale = linalg::fro_norm(source).max(1.0);
        let rec = linalg::fro_norm(&(&self.reconstruct() - source));
        if rec > 1e-10 * scale {
            return Err(Error::Invariant(format!(
                "reconstruction drift {rec:.3e} exceeds 1e-10·‖H‖ = {:.3e}",
                1e-10 * scale
            )));
        }
        Ok(())
    }

    /// Spectral projection onto eigenvalues below `mu`.
    ///
    /// `mu` must sit strictly inside a spectral gap: an eigenvalue within
    /// `1e-12` is reported as an error carrying the nearest genuine gap so the
    /// caller can re-center the chemical potential.
    pub fn fermi_projection(&self, mu: f64) -> Result<CMatrix> {
        let mut nearest = (f64::INFINITY, 0usize);
        for (i, &e) in self.evals.iter().enumerate() {
            let d = (e - mu).abs();
            if d < nearest.0 {
                nearest = (d, i);
            }
        }
        if nearest.0 <= 1e-12 {
            let (gap_lo, gap_hi) = self.nearest_gap(mu);
            return Err(Error::GaplessFermiLevel {
                mu,
                eigenvalue: self.evals[nearest.1],
                dist: nearest.0,
                gap_lo,
                gap_hi,
            });
        }
        Ok(self.apply_function(|e| if e < mu { 1.0 } else { 0.0 }))
    }

    /// Thermal occupation matrix `f_{β,μ}(H)`; `β = ∞` reproduces the sharp
    /// projection (without the gap check).
    pub fn fermi_dirac(&self, beta: f64, mu: f64) -> CMatrix {
        self.apply_function(|e| fermi_fn(beta, mu, e))
    }

    /// `|H − μ|`.
    pub fn abs_shift(&self, mu: f64) -> CMatrix {
        self.apply_function(|e| (e - mu).abs())
    }

    /// Free-energy-density weight applied to `H`; see [`pressure_fn`].
    pub fn pressure_weight(&self, beta: f64, mu: f64) -> CMatrix {
        self.apply_function(|e| pressure_fn(beta, mu, e))
    }

    /// Number of eigenvalues strictly below `mu`.
    pub fn count_below(&self, mu: f64) -> usize {
        self.evals.iter().filter(|&&e| e < mu).count()
    }

    /// The eigenvalues bracketing `mu` (largest below, smallest at-or-above),
    /// or `None` when `mu` falls outside the spectrum.
    pub fn bracketing(&self, mu: f64) -> Option<(f64, f64)> {
        let n = self.n();
        if n == 0 || mu <= self.evals[0] || mu > self.evals[n - 1] {
            return None;
        }
        let split = self.evals.iter().position(|&e| e >= mu)?;
        Some((self.evals[split - 1], self.evals[split]))
    }

    /// Edges of the nearest genuine spectral gap to `mu` (break ties towards
    /// the wider gap); used to suggest a better chemical potential.
    pub fn nearest_gap(&self, mu: f64) -> (f64, f64) {
        let n = self.n();
        if n < 2 {
            return (mu, mu);
        }
        let floor = 1e-9 * self.width().max(1.0);
        let mut best: Option<(f64, f64, f64)> = None; // (distance, lo, hi)
        let mut widest = (0.0f64, self.evals[0], self.evals[0]);
        for i in 0..n - 1 {
            let (lo, hi) = (self.evals[i], self.evals[i + 1]);
            let gap = hi - lo;
            if gap > widest.0 {
                widest = (gap, lo, hi);
            }
            if gap <= floor {
                continue;
            }
            let dist = if mu < lo {
                lo - mu
            } else if mu > hi {
                mu - hi
            } else {
                0.0
            };
            let better = match best {
                None => true,
                Some((bd, blo, bhi)) => dist < bd || (dist == bd && gap > bhi - blo),
            };
            if better {
                best = Some((dist, lo, hi));
            }
        }
        match best {
            Some((_, lo, hi)) => (lo, hi),
            None => (widest.1, widest.2),
        }
    }

    /// Wrap a matrix in this decomposition's geometry tags.
    pub fn operator(&self, matrix: CMatrix) -> Operator {
        Operator {
            lattice: self.lattice.clone(),
            field: self.field,
            matrix,
        }
    }
}
