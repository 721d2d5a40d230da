//! Translation-covariant hopping kernels and on-site disorder.

use crate::error::{Error, Result};
use crate::linalg::{dagger, hermiticity_defect};
use crate::model::Lattice;
use crate::{C64, CMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Finite-range hopping kernel `m ↦ T_m` with the Hermiticity constraint
/// `T_{-m} = T_m†`. The Hamiltonian matrix built from it carries the hopping
/// amplitude `T_{n-l}` from cell `l` to cell `n`, dressed by the magnetic
/// phase.
#[derive(Debug, Clone)]
pub struct HoppingKernel {
    dim: usize,
    internal_dim: usize,
    terms: BTreeMap<[i64; 3], CMatrix>,
}

impl HoppingKernel {
    pub fn new(dim: usize, internal_dim: usize) -> Self {
        HoppingKernel {
            dim,
            internal_dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn internal_dim(&self) -> usize {
        self.internal_dim
    }

    /// Add the on-site block `T_0` (must be Hermitian).
    pub fn add_onsite(&mut self, t0: CMatrix) -> Result<&mut Self> {
        self.check_block(&t0)?;
        if hermiticity_defect(&t0) > 1e-12 {
            return Err(Error::Geometry("on-site block must be Hermitian".into()));
        }
        *self
            .terms
            .entry([0, 0, 0])
            .or_insert_with(|| CMatrix::zeros((self.internal_dim, self.internal_dim))) += &t0;
        Ok(self)
    }

    /// Add a hopping block `T_m` for `m ≠ 0`; the partner `T_{-m} = T_m†` is
    /// inserted automatically so the kernel stays Hermitian.
    pub fn add_hop(&mut self, m: [i64; 3], tm: CMatrix) -> Result<&mut Self> {
        self.check_block(&tm)?;
        if m == [0, 0, 0] {
            return Err(Error::Geometry(
                "use add_onsite for the zero displacement".into(),
            ));
        }
        for k in self.dim..3 {
            if m[k] != 0 {
                return Err(Error::Geometry(format!(
                    "hop {m:?} leaves the {}-dimensional lattice",
                    self.dim
                )));
            }
        }
        let td = dagger(&tm);
        *self
            .terms
            .entry(m)
            .or_insert_with(|| CMatrix::zeros((self.internal_dim, self.internal_dim))) += &tm;
        let minus = [-m[0], -m[1], -m[2]];
        *self
            .terms
            .entry(minus)
            .or_insert_with(|| CMatrix::zeros((self.internal_dim, self.internal_dim))) += &td;
        Ok(self)
    }

    fn check_block(&self, t: &CMatrix) -> Result<()> {
        if t.nrows() != self.internal_dim || t.ncols() != self.internal_dim {
            return Err(Error::Geometry(format!(
                "hopping block is {}x{}, expected {}x{}",
                t.nrows(),
                t.ncols(),
                self.internal_dim,
                self.internal_dim
            )));
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64; 3], &CMatrix)> {
        self.terms.iter()
    }

    /// Largest |m_k| over all stored displacements.
    pub fn range(&self) -> i64 {
        self.terms
            .keys()
            .flat_map(|m| m.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Hermiticity defect of the kernel: `max_m ‖T_{-m} - T_m†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (m, t) in &self.terms {
            let minus = [-m[0], -m[1], -m[2]];
            let td = dagger(t);
            let defect = match self.terms.get(&minus) {
                Some(other) => (other - &td).iter().map(|z| z.norm()).fold(0.0, f64::max),
                None => td.iter().map(|z| z.norm()).fold(0.0, f64::max),
            };
            worst = worst.max(defect);
        }
        worst
    }

    /// Bloch symbol `H(k) = Σ_m T_m e^{-i k·m}` (internal-space matrix).
    pub fn bloch(&self, k: [f64; 3]) -> CMatrix {
        let mut h = CMatrix::zeros((self.internal_dim, self.internal_dim));
        for (m, t) in &self.terms {
            let phase = -(k[0] * m[0] as f64 + k[1] * m[1] as f64 + k[2] * m[2] as f64);
            let w = C64::from_polar(1.0, phase);
            h.zip_mut_with(t, |acc, &v| *acc += w * v);
        }
        h
    }

    /// Analytic momentum derivative `∂H/∂k_axis = Σ_m (-i m_axis) T_m e^{-ik·m}`.
    pub fn bloch_derivative(&self, k: [f64; 3], axis: usize) -> CMatrix {
        let mut h = CMatrix::zeros((self.internal_dim, self.internal_dim));
        for (m, t) in &self.terms {
            let phase = -(k[0] * m[0] as f64 + k[1] * m[1] as f64 + k[2] * m[2] as f64);
            let w = C64::from_polar(1.0, phase) * C64::new(0.0, -(m[axis] as f64));
            h.zip_mut_with(t, |acc, &v| *acc += w * v);
        }
        h
    }
}

/// Kind of on-site randomness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisorderKind {
    /// No disorder (clean system).
    Clean,
    /// Independent uniform on-site energies in `[-w/2, w/2]` on every
    /// internal degree of freedom of every cell.
    Uniform { w: f64 },
}

/// On-site disorder: a pure function of `(kind, seed, cell coordinate,
/// orbital)`, so realizations are reproducible and translates of a
/// configuration are obtained by re-centering rather than regeneration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disorder {
    pub kind: DisorderKind,
    pub seed: u64,
    /// Lattice shift of the configuration: the potential seen at cell `n` is
    /// the base realization evaluated at `n - offset`.
    pub offset: [i64; 3],
}

impl Disorder {
    pub fn clean() -> Self {
        Disorder {
            kind: DisorderKind::Clean,
            seed: 0,
            offset: [0; 3],
        }
    }

    pub fn uniform(w: f64, seed: u64) -> Self {
        Disorder {
            kind: DisorderKind::Uniform { w },
            seed,
            offset: [0; 3],
        }
    }

    /// The configuration translated by `a` (covariance partner of the
    /// magnetic translation by `a`).
    pub fn shifted(&self, a: [i64; 3]) -> Self {
        let mut d = *self;
        d.offset = [
            self.offset[0] + a[0],
            self.offset[1] + a[1],
            self.offset[2] + a[2],
        ];
        d
    }

    /// Potential at a cell coordinate / orbital pair.
    pub fn value(&self, lattice: &Lattice, coord: [i64; 3], orbital: usize) -> f64 {
        match self.kind {
            DisorderKind::Clean => 0.0,
            DisorderKind::Uniform { w } => {
                let base = [
                    coord[0] - self.offset[0],
                    coord[1] - self.offset[1],
                    coord[2] - self.offset[2],
                ];
                let c = lattice.canonical(base);
                let key = site_key(self.seed, c, orbital as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                (rng.gen::<f64>() - 0.5) * w
            }
        }
    }

    /// Dense diagonal of the potential on a lattice.
    pub fn diagonal(&self, lattice: &Lattice) -> Vec<f64> {
        let mut v = vec![0.0; lattice.n_dof()];
        if self.kind == DisorderKind::Clean {
            return v;
        }
        for cell in lattice.iter_cells() {
            let coord = lattice.cell_coord(cell);
            for orb in 0..lattice.internal_dim() {
                v[lattice.dof(cell, orb)] = self.value(lattice, coord, orb);
            }
        }
        v
    }
}

/// Stable 64-bit mix of (seed, coordinate, orbital) used to key the per-site
/// stream; the avalanche constants are the SplitMix64 finalizer.
fn site_key(seed: u64, coord: [i64; 3], orbital: u64) -> u64 {
    let mut x = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [coord[0] as u64, coord[1] as u64, coord[2] as u64, orbital] {
        x = x.wrapping_add(v).wrapping_add(0x9E37_79B9_7F4A_7C15);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}
