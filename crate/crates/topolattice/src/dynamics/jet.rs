//! Truncated Taylor ("jet") arithmetic in the time variable.
//!
//! A jet of order `K` at an instant `t` stores the Taylor coefficients
//! `c_k = ∂ᵏf(t)/k!`, so `f(t+s) = Σ_k c_k sᵏ + O(s^{K+1})`. Scalar jets feed
//! the time profiles of driven Hamiltonians; matrix jets carry operator-valued
//! paths. On top of the arithmetic, this module solves two structured jet
//! equations in the instantaneous eigenbasis of `H(t)`: the jet of a spectral
//! projection, and purely off-diagonal solutions of commutator (Sylvester)
//! equations. Both avoid dividing by energy differences inside a spectral
//! block, so near-degenerate levels on the same side of the gap are harmless.

use crate::error::{Error, Result};
use crate::linalg::{dagger, eigh, matmul};
use crate::{C64, CMatrix};

/// Taylor coefficients of a scalar function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    coeffs: Vec<f64>,
}

impl ScalarJet {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least the value");
        ScalarJet { coeffs }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        ScalarJet { coeffs }
    }

    /// The identity function `s ↦ t + s` as a jet at `t`.
    pub fn variable(t: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = t;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        ScalarJet { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// `k`-th derivative value (`k! · c_k`).
    pub fn derivative(&self, k: usize) -> f64 {
        (1..=k).map(|j| j as f64).product::<f64>() * self.coeff(k)
    }

    pub fn scale(&self, a: f64) -> Self {
        ScalarJet::new(self.coeffs.iter().map(|c| c * a).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        ScalarJet::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = vec![0.0; order + 1];
        for (k, slot) in out.iter_mut().enumerate() {
            for j in 0..=k {
                *slot += self.coeff(j) * other.coeff(k - j);
            }
        }
        ScalarJet::new(out)
    }

    /// Quotient jet; the denominator value must be nonzero.
    pub fn div(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let b0 = other.coeff(0);
        assert!(b0 != 0.0, "division by a jet with zero value");
        let mut q = vec![0.0; order + 1];
        for k in 0..=order {
            let mut acc = self.coeff(k);
            for j in 0..k {
                acc -= q[j] * other.coeff(k - j);
            }
            q[k] = acc / b0;
        }
        ScalarJet::new(q)
    }

    /// Exponential of a jet (standard recurrence `k e_k = Σ j a_j e_{k-j}`).
    pub fn exp(&self) -> Self {
        let order = self.order();
        let mut e = vec![0.0; order + 1];
        e[0] = self.coeff(0).exp();
        for k in 1..=order {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.coeff(j) * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        ScalarJet::new(e)
    }

    /// Composition `outer ∘ inner`, where `outer` is expanded at
    /// `inner.value()`. Horner evaluation on the shifted inner jet.
    pub fn compose(outer: &Self, inner: &Self) -> Self {
        let order = outer.order().min(inner.order());
        let mut shifted = inner.clone();
        shifted.coeffs.truncate(order + 1);
        shifted.coeffs[0] = 0.0;
        let mut result = ScalarJet::constant(outer.coeff(order), order);
        for j in (0..order).rev() {
            result = result.mul(&shifted);
            result.coeffs[0] += outer.coeff(j);
        }
        result
    }
}

/// Taylor coefficients of a matrix-valued function of time.
#[derive(Debug, Clone)]
pub struct MatrixJet {
    coeffs: Vec<CMatrix>,
}

impl MatrixJet {
    pub fn new(coeffs: Vec<CMatrix>) -> Self {
        assert!(!coeffs.is_empty());
        MatrixJet { coeffs }
    }

    pub fn zeros(n: usize, order: usize) -> Self {
        MatrixJet {
            coeffs: (0..=order).map(|_| CMatrix::zeros((n, n))).collect(),
        }
    }

    /// Jet of `f(t)·A` for a fixed matrix `A`.
    pub fn from_profile(profile: &ScalarJet, matrix: &CMatrix) -> Self {
        MatrixJet {
            coeffs: (0..=profile.order())
                .map(|k| matrix.mapv(|z| z * profile.coeff(k)))
                .collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn n(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn value(&self) -> &CMatrix {
        &self.coeffs[0]
    }

    pub fn coeff(&self, k: usize) -> &CMatrix {
        &self.coeffs[k]
    }

    pub fn truncated(&self, order: usize) -> Self {
        let order = order.min(self.order());
        MatrixJet {
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    /// Jet of the time derivative, one order lower.
    pub fn derivative(&self) -> Self {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        MatrixJet {
            coeffs: (1..=self.order())
                .map(|k| self.coeffs[k].mapv(|z| z * k as f64))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        MatrixJet {
            coeffs: (0..=order)
                .map(|k| &self.coeffs[k] + &other.coeffs[k])
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        MatrixJet {
            coeffs: (0..=order)
                .map(|k| &self.coeffs[k] - &other.coeffs[k])
                .collect(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        MatrixJet {
            coeffs: self.coeffs.iter().map(|c| c.mapv(|w| w * z)).collect(),
        }
    }

    /// Truncated Cauchy product.
    pub fn mul_trunc(&self, other: &Self, order: usize) -> Self {
        let order = order.min(self.order()).min(other.order());
        let n = self.n();
        let mut out = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut acc = CMatrix::zeros((n, n));
            for j in 0..=k {
                acc += &matmul(&self.coeffs[j], &other.coeffs[k - j]);
            }
            out.push(acc);
        }
        MatrixJet { coeffs: out }
    }

    /// Truncated jet of the commutator `[self, other]`.
    pub fn commutator_trunc(&self, other: &Self, order: usize) -> Self {
        self.mul_trunc(other, order)
            .sub(&other.mul_trunc(self, order))
    }

    /// Evaluate the polynomial at offset `s`.
    pub fn eval(&self, s: f64) -> CMatrix {
        let mut acc = self.coeffs[self.order()].clone();
        for k in (0..self.order()).rev() {
            acc = acc.mapv(|z| z * s) + &self.coeffs[k];
        }
        acc
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(crate::linalg::fro_norm)
            .fold(0.0, f64::max)
    }
}

/// Instantaneous eigendecomposition of a gapped Hamiltonian together with the
/// partition of its levels below/above the chemical potential.
#[derive(Debug, Clone)]
pub struct EigenFrame {
    pub energies: Vec<f64>,
    /// Columns are eigenvectors.
    pub basis: CMatrix,
    /// Levels strictly below the chemical potential.
    pub inside: Vec<bool>,
    /// Smallest distance between a level below and a level above.
    pub gap: f64,
}

impl EigenFrame {
    /// Diagonalize `h` and split its spectrum at `mu`. Fails when `mu` sits
    /// within `min_gap` of a level.
    pub fn new(h: &CMatrix, mu: f64, min_gap: f64) -> Result<Self> {
        let (evals, basis) = eigh(h);
        let energies: Vec<f64> = evals.to_vec();
        let inside: Vec<bool> = energies.iter().map(|&e| e < mu).collect();
        let mut nearest = f64::INFINITY;
        let mut nearest_e = f64::NAN;
        for &e in &energies {
            if (e - mu).abs() < nearest {
                nearest = (e - mu).abs();
                nearest_e = e;
            }
        }
        if nearest < min_gap {
            let below = energies
                .iter()
                .copied()
                .filter(|&e| e < mu)
                .fold(f64::NEG_INFINITY, f64::max);
            let above = energies
                .iter()
                .copied()
                .filter(|&e| e >= mu)
                .fold(f64::INFINITY, f64::min);
            return Err(Error::GaplessFermiLevel {
                mu,
                eigenvalue: nearest_e,
                dist: nearest,
                gap_lo: below,
                gap_hi: above,
            });
        }
        let mut gap = f64::INFINITY;
        for (a, &ea) in energies.iter().enumerate() {
            for (b, &eb) in energies.iter().enumerate() {
                if inside[a] && !inside[b] {
                    gap = gap.min((ea - eb).abs());
                }
                let _ = b;
            }
        }
        Ok(EigenFrame {
            energies,
            basis,
            inside,
            gap,
        })
    }

    pub fn n(&self) -> usize {
        self.energies.len()
    }

    /// Rotate a matrix into the eigenbasis: `V† M V`.
    pub fn rotate_in(&self, m: &CMatrix) -> CMatrix {
        matmul(&matmul(&dagger(&self.basis), m), &self.basis)
    }

    /// Rotate a matrix back to the original basis: `V M V†`.
    pub fn rotate_out(&self, m: &CMatrix) -> CMatrix {
        matmul(&matmul(&self.basis, m), &dagger(&self.basis))
    }

    pub fn rotate_in_jet(&self, jet: &MatrixJet) -> MatrixJet {
        MatrixJet::new((0..=jet.order()).map(|k| self.rotate_in(jet.coeff(k))).collect())
    }

    pub fn rotate_out_jet(&self, jet: &MatrixJet) -> MatrixJet {
        MatrixJet::new((0..=jet.order()).map(|k| self.rotate_out(jet.coeff(k))).collect())
    }

    /// Split into the block-diagonal and block-off-diagonal parts with
    /// respect to the inside/outside partition of the frame.
    #[cfg(test)]
    fn split_blocks(&self, m: &CMatrix) -> (CMatrix, CMatrix) {
        let n = self.n();
        let mut same = CMatrix::zeros((n, n));
        let mut cross = CMatrix::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                if self.inside[a] == self.inside[b] {
                    same[[a, b]] = m[[a, b]];
                } else {
                    cross[[a, b]] = m[[a, b]];
                }
            }
        }
        (same, cross)
    }
}

/// Jet of the spectral projection onto the levels below the chemical
/// potential along a Hamiltonian path, expressed in the frame's eigenbasis.
///
/// Order `k` is assembled from two exact conditions: entries across the gap
/// come from `[H(s), P(s)] = 0`, entries within a block from
/// `P(s)² = P(s)`. No energy denominator smaller than the gap ever appears.
pub fn projection_jet(frame: &EigenFrame, h_hat: &MatrixJet, order: usize) -> MatrixJet {
    let n = frame.n();
    assert!(h_hat.order() >= order, "Hamiltonian jet order too low");
    let mut p: Vec<CMatrix> = Vec::with_capacity(order + 1);
    let mut p0 = CMatrix::zeros((n, n));
    for a in 0..n {
        if frame.inside[a] {
            p0[[a, a]] = C64::new(1.0, 0.0);
        }
    }
    p.push(p0);
    for k in 1..=order {
        // Commutator condition: [H₀, P_k] = −Σ_{j=1..k} [H_j, P_{k−j}].
        let mut y = CMatrix::zeros((n, n));
        for j in 1..=k {
            let hj = h_hat.coeff(j);
            y -= &(&matmul(hj, &p[k - j]) - &matmul(&p[k - j], hj));
        }
        // Idempotency condition: P₀P_k + P_kP₀ − P_k = −Σ_{i=1..k−1} P_iP_{k−i}.
        let mut s = CMatrix::zeros((n, n));
        for i in 1..k {
            s -= &matmul(&p[i], &p[k - i]);
        }
        let mut pk = CMatrix::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                if frame.inside[a] != frame.inside[b] {
                    pk[[a, b]] = y[[a, b]] / (frame.energies[a] - frame.energies[b]);
                } else if frame.inside[a] {
                    pk[[a, b]] = s[[a, b]];
                } else {
                    pk[[a, b]] = -s[[a, b]];
                }
            }
        }
        p.push(pk);
    }
    MatrixJet::new(p)
}

/// Jet of the unique operator `X(s)` that is purely off-diagonal with respect
/// to the moving projection (`P(s)X(s)P(s) = 0 = Q(s)X(s)Q(s)`) and solves the
/// commutator equation `[H(s), X(s)] = W(s)` across the gap. All inputs are in
/// the frame's eigenbasis; `p_jet` is the projection jet of the same path.
pub fn sylvester_offdiag_jet(
    frame: &EigenFrame,
    h_hat: &MatrixJet,
    p_jet: &MatrixJet,
    w_jet: &MatrixJet,
    order: usize,
) -> MatrixJet {
    let n = frame.n();
    assert!(h_hat.order() >= order && p_jet.order() >= order && w_jet.order() >= order);
    let eye = crate::linalg::eye(n);
    // Q(s) = 1 − P(s) as a jet.
    let q: Vec<CMatrix> = (0..=order)
        .map(|k| {
            if k == 0 {
                &eye - p_jet.coeff(0)
            } else {
                p_jet.coeff(k).mapv(|z| -z)
            }
        })
        .collect();
    let mut x: Vec<CMatrix> = Vec::with_capacity(order + 1);
    for k in 0..=order {
        // Across-gap entries from [H₀, X_k] = W_k − Σ_{j=1..k} [H_j, X_{k−j}].
        let mut y = w_jet.coeff(k).clone();
        for j in 1..=k {
            let hj = h_hat.coeff(j);
            y -= &(&matmul(hj, &x[k - j]) - &matmul(&x[k - j], hj));
        }
        // Same-block entries from the two orthogonality conditions at order k:
        // Σ_{i+j+l=k} P_i X_j P_l = 0 (and likewise with Q), solved for the
        // (i,l) = (0,0) term.
        let mut in_in = CMatrix::zeros((n, n));
        let mut out_out = CMatrix::zeros((n, n));
        for i in 0..=k {
            for l in 0..=(k - i) {
                let j = k - i - l;
                if j == k {
                    continue; // the unknown X_k itself
                }
                in_in -= &matmul(&matmul(p_jet.coeff(i), &x[j]), p_jet.coeff(l));
                out_out -= &matmul(&matmul(&q[i], &x[j]), &q[l]);
            }
        }
        let mut xk = CMatrix::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                if frame.inside[a] != frame.inside[b] {
                    xk[[a, b]] = y[[a, b]] / (frame.energies[a] - frame.energies[b]);
                } else if frame.inside[a] {
                    xk[[a, b]] = in_in[[a, b]];
                } else {
                    xk[[a, b]] = out_out[[a, b]];
                }
            }
        }
        x.push(xk);
    }
    MatrixJet::new(x)
}

/// Derivative of a spectral projection from the derivative of its parent
/// operator, by residues of the resolvent representation: across-gap entries
/// `(χ_a − χ_b)·Ḋ_{ab}/(λ_a − λ_b)`, zero within blocks. Everything is in the
/// eigenbasis described by `(values, inside)`.
pub fn projection_derivative(values: &[f64], inside: &[bool], d_dot: &CMatrix) -> CMatrix {
    let n = values.len();
    let mut out = CMatrix::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            if inside[a] != inside[b] {
                let chi = if inside[a] { 1.0 } else { -1.0 };
                out[[a, b]] = d_dot[[a, b]] * chi / (values[a] - values[b]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro_norm;
    use crate::model::catalog;

    fn harmonic_jet(amp: f64, omega: f64, phase: f64, t: f64, order: usize) -> ScalarJet {
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

    /// A two-term Hermitian trig path on the two-level space.
    fn test_path_jet(t: f64, order: usize) -> MatrixJet {
        let [s1, _, s3] = catalog::pauli();
        let a = harmonic_jet(0.8, 1.3, 0.0, t, order);
        let b = harmonic_jet(0.5, 0.7, 0.4, t, order);
        MatrixJet::from_profile(&a, &s3).add(&MatrixJet::from_profile(
            &b.add(&ScalarJet::constant(1.1, order)),
            &s1,
        ))
    }

    #[test]
    fn scalar_arithmetic_matches_closed_forms() {
        let t = 0.37;
        let order = 5;
        let f = harmonic_jet(1.0, 2.0, 0.1, t, order);
        let g = harmonic_jet(0.6, 1.1, -0.3, t, order);
        // Product rule at first order.
        let fg = f.mul(&g);
        assert!((fg.value() - f.value() * g.value()).abs() < 1e-14);
        assert!(
            (fg.derivative(1) - (f.derivative(1) * g.value() + f.value() * g.derivative(1))).abs()
                < 1e-12
        );
        // Quotient times denominator restores the numerator.
        let q = f.div(&g);
        let back = q.mul(&g);
        for k in 0..=order {
            assert!((back.coeff(k) - f.coeff(k)).abs() < 1e-10, "k = {k}");
        }
        // exp of a jet vs analytic derivative of e^{f}.
        let e = f.exp();
        assert!((e.value() - f.value().exp()).abs() < 1e-12);
        assert!((e.derivative(1) - f.derivative(1) * f.value().exp()).abs() < 1e-10);
    }

    #[test]
    fn composition_matches_direct_expansion() {
        let t = 0.25;
        let order = 4;
        // cos(2 sin-ish inner): outer expanded at inner.value().
        let inner = harmonic_jet(0.9, 1.7, 0.2, t, order);
        let outer = harmonic_jet(1.0, 2.0, 0.0, inner.value(), order);
        // outer(x) = cos(2x); composition = cos(2·inner(t+s)).
        let comp = ScalarJet::compose(&outer, &inner);
        // Compare against small-offset evaluation.
        for &s in &[1e-3, -2e-3] {
            let exact = (2.0 * (0.9 * (1.7 * (t + s) + 0.2).cos())).cos();
            let mut poly = 0.0;
            for k in (0..=order).rev() {
                poly = poly * s + comp.coeff(k);
            }
            assert!((poly - exact).abs() < 1e-11, "offset {s}");
        }
    }

    #[test]
    fn projection_jet_reproduces_the_moving_projection() {
        let t = 0.4;
        let order = 3;
        let h = test_path_jet(t, order);
        let frame = EigenFrame::new(h.value(), 0.0, 1e-9).unwrap();
        let h_hat = frame.rotate_in_jet(&h);
        let p = projection_jet(&frame, &h_hat, order);

        // Jet coefficients satisfy idempotency and commutation identically.
        let pp = p.mul_trunc(&p, order).sub(&p);
        assert!(pp.max_coeff_norm() < 1e-11, "idempotency defect");
        let hp = h_hat.commutator_trunc(&p, order);
        assert!(hp.max_coeff_norm() < 1e-10, "commutation defect");

        // Polynomial evaluation approaches the exactly recomputed projection
        // at fourth order in the offset.
        let mut errs = Vec::new();
        for &s in &[2e-2, 1e-2] {
            let h_s = test_path_jet(t + s, 0);
            let frame_s = EigenFrame::new(h_s.value(), 0.0, 1e-9).unwrap();
            let mut exact = CMatrix::zeros((2, 2));
            for a in 0..2 {
                if frame_s.inside[a] {
                    let col = frame_s.basis.column(a);
                    for r in 0..2 {
                        for c in 0..2 {
                            exact[[r, c]] += col[r] * col[c].conj();
                        }
                    }
                }
            }
            let approx = frame.rotate_out(&p.eval(s));
            errs.push(fro_norm(&(&approx - &exact)));
        }
        assert!(errs[0] < 1e-6, "absolute jet error {:.3e}", errs[0]);
        let ratio = errs[0] / errs[1].max(1e-300);
        assert!(
            ratio > 10.0,
            "expected ~16× shrink for an order-3 jet, got {ratio}"
        );
    }

    #[test]
    fn sylvester_jet_solves_its_defining_relations() {
        let t = 0.15;
        let order = 2;
        let h = test_path_jet(t, order + 1);
        let frame = EigenFrame::new(h.value(), 0.0, 1e-9).unwrap();
        let h_hat = frame.rotate_in_jet(&h);
        let p = projection_jet(&frame, &h_hat, order + 1);
        // Right-hand side: i·(time derivative of the projection), the shape
        // that appears in the adiabatic recursion.
        let w = p.derivative().scale(C64::new(0.0, 1.0)).truncated(order);
        let x = sylvester_offdiag_jet(&frame, &h_hat, &p.truncated(order), &w, order);

        // Orthogonality: P X P and Q X Q vanish as jets.
        let pxp = p
            .truncated(order)
            .mul_trunc(&x, order)
            .mul_trunc(&p.truncated(order), order);
        assert!(pxp.max_coeff_norm() < 1e-11);
        // Across-gap part of [H, X] − W vanishes order by order.
        let defect = h_hat.commutator_trunc(&x, order).sub(&w);
        for k in 0..=order {
            let (_, cross) = frame.split_blocks(defect.coeff(k));
            assert!(fro_norm(&cross) < 1e-11, "order {k}");
        }
    }

    #[test]
    fn frame_reports_the_spectral_split() {
        let [_, _, s3] = catalog::pauli();
        let frame = EigenFrame::new(&s3.mapv(|z| z * 2.0), 0.0, 1e-9).unwrap();
        assert_eq!(frame.inside.iter().filter(|&&b| b).count(), 1);
        assert!((frame.gap - 4.0).abs() < 1e-12);
        let err = EigenFrame::new(&s3, 1.0, 1e-6).unwrap_err();
        assert!(matches!(err, Error::GaplessFermiLevel { .. }));
    }
}
