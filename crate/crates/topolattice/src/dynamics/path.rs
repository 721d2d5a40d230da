//! Time-dependent Hamiltonian paths.
//!
//! A [`TimePath`] is a finite sum `H(t) = Σ_i f_i(t)·A_i` of fixed Hermitian
//! operators with scalar time profiles, together with a chemical-potential
//! profile and an endpoint style. Every consumer of a path (the propagator,
//! polarization integrals, the adiabatic expansion) pulls values and Taylor
//! jets from it, so derivatives of any order are available without finite
//! differencing. An optional reparametrization by a flattening switch makes
//! all time derivatives vanish at the endpoints while traversing the same
//! loop of Hamiltonians.

use super::jet::{MatrixJet, ScalarJet};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, catalog, Disorder, Lattice, MagneticField, Operator};
use crate::{C64, CMatrix};

/// A scalar profile of time with jets of every order.
#[derive(Debug, Clone)]
pub enum ScalarPath {
    Constant(f64),
    /// `amp · cos(omega·t + phase)`.
    Harmonic { amp: f64, omega: f64, phase: f64 },
}

impl ScalarPath {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ScalarPath::Constant(c) => *c,
            ScalarPath::Harmonic { amp, omega, phase } => amp * (omega * t + phase).cos(),
        }
    }

    pub fn jet(&self, t: f64, order: usize) -> ScalarJet {
        match self {
            ScalarPath::Constant(c) => ScalarJet::constant(*c, order),
            ScalarPath::Harmonic { amp, omega, phase } => {
                let mut coeffs = Vec::with_capacity(order + 1);
                let mut fact = 1.0;
                for k in 0..=order {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    coeffs.push(
                        amp * omega.powi(k as i32)
                            * (omega * t + phase + k as f64 * std::f64::consts::FRAC_PI_2).cos()
                            / fact,
                    );
                }
                ScalarJet::new(coeffs)
            }
        }
    }

    /// The profile traversed backwards over a window `[0, period]`.
    pub fn reversed(&self, period: f64) -> ScalarPath {
        match self {
            ScalarPath::Constant(c) => ScalarPath::Constant(*c),
            ScalarPath::Harmonic { amp, omega, phase } => ScalarPath::Harmonic {
                amp: *amp,
                omega: -omega,
                phase: omega * period + phase,
            },
        }
    }
}

/// Infinitely flat reparametrization of `[0, T]` onto itself: `φ(t) = T·w(t/T)`
/// with `w(x) = g(x)/(g(x) + g(1−x))`, `g(x) = e^{−1/x}` for `x > 0`. All
/// derivatives of `φ` vanish at both endpoints and `φ(T−t) = T − φ(t)`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothSwitch {
    period: f64,
}

impl SmoothSwitch {
    pub fn new(period: f64) -> Self {
        assert!(period > 0.0);
        SmoothSwitch { period }
    }

    fn bump_jet(x: &ScalarJet) -> ScalarJet {
        // e^{−1/x}, valid for x.value() > 0.
        let order = x.order();
        let one = ScalarJet::constant(1.0, order);
        one.div(x).scale(-1.0).exp()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet(t, 0).value()
    }

    pub fn jet(&self, t: f64, order: usize) -> ScalarJet {
        let x = t / self.period;
        if x <= 0.0 {
            return ScalarJet::constant(0.0, order);
        }
        if x >= 1.0 {
            return ScalarJet::constant(self.period, order);
        }
        let mut x_jet = ScalarJet::variable(x, order);
        // d/dt of x = 1/period enters through the linear coefficient.
        if order >= 1 {
            x_jet = {
                let mut coeffs: Vec<f64> = (0..=order).map(|k| x_jet.coeff(k)).collect();
                coeffs[1] = 1.0 / self.period;
                ScalarJet::new(coeffs)
            };
        }
        let one_minus = ScalarJet::constant(1.0, order).add(&x_jet.scale(-1.0));
        let g1 = Self::bump_jet(&x_jet);
        let g2 = Self::bump_jet(&one_minus);
        g1.div(&g1.add(&g2)).scale(self.period)
    }
}

/// Endpoint style of a path over its period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathEnds {
    /// The loop closes: `H(0) = H(T)` entrywise.
    Periodic,
    /// All time derivatives vanish at `t = 0` and `t = T`.
    Flat,
}

/// One term `f(t)·A` of a driven Hamiltonian.
#[derive(Debug, Clone)]
pub struct PathTerm {
    pub profile: ScalarPath,
    pub operator: Operator,
}

/// A driven Hamiltonian `H(t) = Σ f_i(t)·A_i` over one period.
#[derive(Debug, Clone)]
pub struct TimePath {
    terms: Vec<PathTerm>,
    mu: ScalarPath,
    period: f64,
    ends: PathEnds,
    switch: Option<SmoothSwitch>,
    /// Position gradients of each term's matrix along each axis, with
    /// minimal-image coordinates on periodic axes.
    term_grads: Vec<Vec<CMatrix>>,
}

impl TimePath {
    pub fn new(
        terms: Vec<PathTerm>,
        mu: ScalarPath,
        period: f64,
        ends: PathEnds,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Config("a path needs at least one term".into()));
        }
        if period <= 0.0 {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        let lattice = terms[0].operator.lattice.clone();
        for term in &terms {
            if term.operator.lattice != lattice {
                return Err(Error::Config(
                    "all path terms must live on the same lattice".into(),
                ));
            }
            if !term.operator.is_hermitian(1e-10) {
                return Err(Error::Config("path terms must be Hermitian".into()));
            }
        }
        let dim = lattice.dim();
        let term_grads = terms
            .iter()
            .map(|term| {
                (0..dim)
                    .map(|axis| crate::algebra::grad_wrapped(&term.operator, axis).matrix)
                    .collect()
            })
            .collect();
        Ok(TimePath {
            terms,
            mu,
            period,
            ends,
            switch: None,
            term_grads,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn ends(&self) -> PathEnds {
        self.ends
    }

    pub fn lattice(&self) -> &Lattice {
        &self.terms[0].operator.lattice
    }

    pub fn n(&self) -> usize {
        self.terms[0].operator.dim()
    }

    /// Replace the clock by an infinitely flat traversal of the same loop.
    /// All time derivatives of the reparametrized path vanish at `0` and `T`.
    pub fn flattened(mut self) -> Self {
        self.switch = Some(SmoothSwitch::new(self.period));
        self.ends = PathEnds::Flat;
        self
    }

    /// The same loop traversed backwards (`t ↦ T − t`). Only available for
    /// paths without a flattening switch.
    pub fn reversed(&self) -> Result<Self> {
        if self.switch.is_some() {
            return Err(Error::Config(
                "reversal of a flattened path is not supported; reverse first".into(),
            ));
        }
        let terms = self
            .terms
            .iter()
            .map(|term| PathTerm {
                profile: term.profile.reversed(self.period),
                operator: term.operator.clone(),
            })
            .collect();
        Ok(TimePath {
            terms,
            mu: self.mu.reversed(self.period),
            period: self.period,
            ends: self.ends,
            switch: None,
            term_grads: self.term_grads.clone(),
        })
    }

    fn clock_jet(&self, t: f64, order: usize) -> ScalarJet {
        match &self.switch {
            None => ScalarJet::variable(t, order),
            Some(sw) => sw.jet(t, order),
        }
    }

    fn profile_jet(&self, profile: &ScalarPath, t: f64, order: usize) -> ScalarJet {
        let clock = self.clock_jet(t, order);
        let outer = profile.jet(clock.value(), order);
        ScalarJet::compose(&outer, &clock)
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.profile_jet(&self.mu, t, 0).value()
    }

    pub fn hamiltonian(&self, t: f64) -> CMatrix {
        self.hamiltonian_jet(t, 0).value().clone()
    }

    pub fn hamiltonian_jet(&self, t: f64, order: usize) -> MatrixJet {
        let mut jet = MatrixJet::zeros(self.n(), order);
        for term in &self.terms {
            let f = self.profile_jet(&term.profile, t, order);
            jet = jet.add(&MatrixJet::from_profile(&f, &term.operator.matrix));
        }
        jet
    }

    /// `∂H/∂t` at `t`.
    pub fn hamiltonian_dot(&self, t: f64) -> CMatrix {
        self.hamiltonian_jet(t, 1).derivative().value().clone()
    }

    /// Position gradient `∇_axis H(t)` (minimal-image on periodic axes).
    pub fn hamiltonian_grad(&self, t: f64, axis: usize) -> CMatrix {
        let n = self.n();
        let mut acc = CMatrix::zeros((n, n));
        for (term, grads) in self.terms.iter().zip(&self.term_grads) {
            let f = self.profile_jet(&term.profile, t, 0).value();
            acc += &grads[axis].mapv(|z| z * f);
        }
        acc
    }

    /// Check the declared endpoint style and Hermiticity on a sample grid.
    pub fn verify(&self, n_samples: usize, jet_order: usize) -> Result<PathCheck> {
        let mut hermiticity: f64 = 0.0;
        for k in 0..=n_samples {
            let t = self.period * k as f64 / n_samples as f64;
            let h = self.hamiltonian(t);
            hermiticity = hermiticity.max(crate::linalg::hermiticity_defect(&h));
        }
        let endpoint_defect = match self.ends {
            PathEnds::Periodic => {
                let d = &self.hamiltonian(0.0) - &self.hamiltonian(self.period);
                crate::linalg::fro_norm(&d)
            }
            PathEnds::Flat => {
                let mut worst: f64 = 0.0;
                for &t in &[0.0, self.period] {
                    let jet = self.hamiltonian_jet(t, jet_order);
                    for k in 1..=jet_order {
                        worst = worst.max(crate::linalg::fro_norm(jet.coeff(k)));
                    }
                }
                worst
            }
        };
        Ok(PathCheck {
            hermiticity,
            endpoint_defect,
        })
    }
}

/// Result of [`TimePath::verify`].
#[derive(Debug, Clone, Copy)]
pub struct PathCheck {
    pub hermiticity: f64,
    pub endpoint_defect: f64,
}

/// Charge-pump loop on a periodic dimerized chain: hopping `t + δ(t)·(−1)`
/// alternation with `δ(t) = δ₀·cos(2πt/T)` and staggered potential
/// `Δ(t) = Δ₀·sin(2πt/T)`. The loop encircles the metallic point, so the
/// spectral gap at `μ = 0` stays open for all `t` whenever `δ₀, Δ₀ > 0`.
pub fn rice_mele_path(
    t_hop: f64,
    delta0: f64,
    stagger0: f64,
    cells: usize,
    period: f64,
) -> Result<TimePath> {
    let lattice = Lattice::torus(1, &[cells], 2)?;
    let field = MagneticField::ZERO;
    let clean = Disorder::clean();
    let [kernel_t, kernel_delta, kernel_stagger] = catalog::rice_mele_components()?;
    let omega = 2.0 * std::f64::consts::PI / period;
    let terms = vec![
        PathTerm {
            profile: ScalarPath::Constant(t_hop),
            operator: build_hamiltonian(&lattice, &field, &kernel_t, &clean)?,
        },
        PathTerm {
            profile: ScalarPath::Harmonic {
                amp: delta0,
                omega,
                phase: 0.0,
            },
            operator: build_hamiltonian(&lattice, &field, &kernel_delta, &clean)?,
        },
        PathTerm {
            profile: ScalarPath::Harmonic {
                amp: stagger0,
                omega,
                phase: -std::f64::consts::FRAC_PI_2,
            },
            operator: build_hamiltonian(&lattice, &field, &kernel_stagger, &clean)?,
        },
    ];
    TimePath::new(terms, ScalarPath::Constant(0.0), period, PathEnds::Periodic)
}

/// Two-level avoided crossing: `H(t) = (v/2)σ₁ + (Δ(t)/2)σ₃` with
/// `Δ(t) = Δ₀·cos(2πt/T)`. The gap is bounded below by `v`.
pub fn two_level_path(v: f64, delta0: f64, period: f64) -> Result<TimePath> {
    let lattice = Lattice::open(1, &[1], 2)?;
    let [s1, _, s3] = catalog::pauli();
    let half = C64::new(0.5, 0.0);
    let op1 = Operator::new(lattice.clone(), MagneticField::ZERO, s1.mapv(|z| z * half))?;
    let op3 = Operator::new(lattice, MagneticField::ZERO, s3.mapv(|z| z * half))?;
    let omega = 2.0 * std::f64::consts::PI / period;
    let terms = vec![
        PathTerm {
            profile: ScalarPath::Constant(v),
            operator: op1,
        },
        PathTerm {
            profile: ScalarPath::Harmonic {
                amp: delta0,
                omega,
                phase: 0.0,
            },
            operator: op3,
        },
    ];
    TimePath::new(terms, ScalarPath::Constant(0.0), period, PathEnds::Periodic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro_norm;

    #[test]
    fn switch_is_flat_and_symmetric() {
        let sw = SmoothSwitch::new(2.0);
        // Endpoint jets are exactly constant.
        for &t in &[0.0, 2.0] {
            let jet = sw.jet(t, 6);
            for k in 1..=6 {
                assert_eq!(jet.coeff(k), 0.0, "t = {t}, k = {k}");
            }
        }
        assert_eq!(sw.value(0.0), 0.0);
        assert_eq!(sw.value(2.0), 2.0);
        // Midpoint symmetry φ(T−t) = T − φ(t).
        for &t in &[0.3, 0.7, 1.1] {
            assert!((sw.value(2.0 - t) + sw.value(t) - 2.0).abs() < 1e-12);
        }
        // Near (not at) the ends the derivatives fall off faster than any
        // power; at x = t/T = 0.01 they are already below 1e-20.
        let jet = sw.jet(0.02, 4);
        for k in 1..=4 {
            assert!(jet.coeff(k).abs() < 1e-20, "k = {k}: {}", jet.coeff(k));
        }
        // Jet derivative matches a finite difference in the interior.
        let h = 1e-5;
        let fd = (sw.value(1.0 + h) - sw.value(1.0 - h)) / (2.0 * h);
        assert!((sw.jet(1.0, 1).derivative(1) - fd).abs() < 1e-8);
    }

    #[test]
    fn pump_path_matches_the_static_builder() {
        let path = rice_mele_path(1.0, 0.3, 0.4, 6, 1.0).unwrap();
        for &t in &[0.0, 0.2, 0.55] {
            let omega = 2.0 * std::f64::consts::PI;
            let delta = 0.3 * (omega * t).cos();
            let stagger = 0.4 * (omega * t).sin();
            let kernel = catalog::rice_mele(1.0, delta, stagger).unwrap();
            let lattice = Lattice::torus(1, &[6], 2).unwrap();
            let expected = build_hamiltonian(
                &lattice,
                &MagneticField::ZERO,
                &kernel,
                &Disorder::clean(),
            )
            .unwrap();
            let got = path.hamiltonian(t);
            assert!(
                fro_norm(&(&got - &expected.matrix)) < 1e-12,
                "t = {t}"
            );
        }
        let check = path.verify(16, 4).unwrap();
        assert!(check.hermiticity < 1e-12);
        assert!(check.endpoint_defect < 1e-12, "loop should close");
    }

    #[test]
    fn jets_match_finite_differences() {
        let path = rice_mele_path(1.0, 0.3, 0.4, 4, 1.0).unwrap();
        let t = 0.31;
        let jet = path.hamiltonian_jet(t, 2);
        let h = 1e-4;
        let fd1 = (&path.hamiltonian(t + h) - &path.hamiltonian(t - h)).mapv(|z| z / (2.0 * h));
        assert!(fro_norm(&(&fd1 - jet.derivative().value())) < 1e-6);
        let fd2 = (&(&path.hamiltonian(t + h) + &path.hamiltonian(t - h))
            - &path.hamiltonian(t).mapv(|z| z * 2.0))
            .mapv(|z| z / (h * h));
        let second = jet.coeff(2).mapv(|z| z * 2.0);
        assert!(fro_norm(&(&fd2 - &second)) < 1e-4);
    }

    #[test]
    fn flattened_path_is_flat_but_traverses_the_same_loop() {
        let path = rice_mele_path(1.0, 0.3, 0.4, 4, 1.0).unwrap().flattened();
        let check = path.verify(8, 4).unwrap();
        assert!(check.endpoint_defect < 1e-10, "{}", check.endpoint_defect);
        // Midpoint of the flat clock is the midpoint of the loop.
        let base = rice_mele_path(1.0, 0.3, 0.4, 4, 1.0).unwrap();
        let d = &path.hamiltonian(0.5) - &base.hamiltonian(0.5);
        assert!(fro_norm(&d) < 1e-12);
    }

    #[test]
    fn reversal_runs_the_loop_backwards() {
        let path = rice_mele_path(1.0, 0.3, 0.4, 4, 1.0).unwrap();
        let rev = path.reversed().unwrap();
        for &t in &[0.0, 0.2, 0.9] {
            let d = &rev.hamiltonian(t) - &path.hamiltonian(1.0 - t);
            assert!(fro_norm(&d) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn two_level_gap_stays_open() {
        let path = two_level_path(0.5, 1.0, 1.0).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let (evals, _) = crate::linalg::eigh(&path.hamiltonian(t));
            assert!(evals[1] - evals[0] >= 0.5 - 1e-12, "t = {t}");
        }
    }
}
