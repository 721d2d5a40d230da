//! Derivatives of operator families with respect to the magnetic field.
//!
//! The field derivative acts on the phase-stripped hopping data: dressing
//! phases are removed at the shifted fields, the kernels are differenced, and
//! the result is re-dressed at the base field. For exponentials of a
//! field-independent kernel the same derivative has a closed eigenbasis form
//! built from second divided differences of `E ↦ e^{zE}`.

use crate::algebra::spectral::Spectral;
use crate::error::{Error, Result};
use crate::linalg::{dagger, matmul3};
use crate::model::{dress_phase, strip_phase, Lattice, MagneticField, Operator};
use crate::{C64, CMatrix};

/// Default central-difference step for field derivatives.
pub const DEFAULT_FIELD_STEP: f64 = 1e-4;

/// Central finite difference `dress(strip(A(B+h·e_axis)) − strip(A(B−h·e_axis)))/2h`
/// evaluated at the base field. `build` must be deterministic in the field
/// (fixed disorder, fixed downstream function).
pub fn ito_derivative_fd<F>(
    build: F,
    lattice: &Lattice,
    field: &MagneticField,
    axis: usize,
    h: f64,
) -> Result<Operator>
where
    F: Fn(&MagneticField) -> Result<Operator>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!(
            "field-derivative step must be positive, got {h}"
        )));
    }
    if axis >= 3 {
        return Err(Error::Geometry(format!(
            "field component {axis} out of range (0..3)"
        )));
    }
    let plus = build(&field.shifted(axis, h))?;
    let minus = build(&field.shifted(axis, -h))?;
    let kp = strip_phase(&plus);
    let km = strip_phase(&minus);
    let dk = (&kp - &km).mapv(|z| z / (2.0 * h));
    Ok(dress_phase(lattice, field, &dk))
}

/// Richardson refinement `(4·D(h/2) − D(h))/3` of [`ito_derivative_fd`],
/// cancelling the leading `h²` truncation term.
pub fn ito_derivative_richardson<F>(
    build: F,
    lattice: &Lattice,
    field: &MagneticField,
    axis: usize,
    h: f64,
) -> Result<Operator>
where
    F: Fn(&MagneticField) -> Result<Operator>,
{
    let coarse = ito_derivative_fd(&build, lattice, field, axis, h)?;
    let fine = ito_derivative_fd(&build, lattice, field, axis, h / 2.0)?;
    let m = &fine.matrix.mapv(|z| z * (4.0 / 3.0)) - &coarse.matrix.mapv(|z| z / 3.0);
    Ok(coarse.with_matrix(m))
}

/// `sinh(w)/w`, with a series branch near zero.
fn sinch(w: C64) -> C64 {
    if w.norm() < 1e-4 {
        let w2 = w * w;
        C64::new(1.0, 0.0) + w2 / 6.0 + w2 * w2 / 120.0
    } else {
        w.sinh() / w
    }
}

/// First divided difference of `E ↦ e^{zE}`: `(e^{za} − e^{zb})/(a − b)`,
/// continued to `z·e^{za}` on the diagonal.
pub fn exp_div_diff1(z: C64, a: f64, b: f64) -> C64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (a - b);
    (z * mid).exp() * z * sinch(z * half)
}

/// Factorials `(j+2)!` for the Taylor branch below.
const FACT_SHIFT2: [f64; 11] = [
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
];

/// Second divided difference of `E ↦ e^{zE}` over three nodes, stable under
/// near-degeneracy: below node spacing `1e-6·scale` (or when `|z|·span` is
/// small enough for fast convergence) it switches to a Taylor expansion about
/// the centroid using complete homogeneous symmetric polynomials.
pub fn exp_div_diff2(z: C64, nodes: [f64; 3], scale: f64) -> C64 {
    let mut s = nodes;
    s.sort_by(f64::total_cmp);
    let span = s[2] - s[0];
    if z.norm() * span < 1e-3 || span <= 1e-6 * scale.max(1e-300) {
        let mid = (s[0] + s[1] + s[2]) / 3.0;
        let d = [s[0] - mid, s[1] - mid, s[2] - mid];
        let mut hom = [0.0f64; 11];
        hom[0] = 1.0;
        for &x in &d {
            for j in 1..hom.len() {
                hom[j] += x * hom[j - 1];
            }
        }
        let mut sum = C64::new(0.0, 0.0);
        let mut zj = C64::new(1.0, 0.0);
        for j in 0..hom.len() {
            sum += zj * (hom[j] / FACT_SHIFT2[j]);
            zj *= z;
        }
        (z * mid).exp() * z * z * sum
    } else {
        (exp_div_diff1(z, s[0], s[1]) - exp_div_diff1(z, s[1], s[2])) / (s[0] - s[2])
    }
}

/// Field derivative of `e^{zH}` along component `axis`, for a Hamiltonian
/// whose stripped kernel is field-independent.
///
/// In the eigenbasis the matrix elements are second divided differences of
/// `E ↦ e^{zE}` contracted with the two position gradients of `H`
/// antisymmetrized in the companion axes: with `G_i = V†(∇_iH)V`,
///
/// `⟨a|δ e^{zH}|c⟩ = (i/2) Σ_b dd2(E_a,E_b,E_c)(G₁_{ab}G₂_{bc} − G₂_{ab}G₁_{bc})`,
///
/// where `G₁, G₂` are the gradients along `axis+1` and `axis+2` (mod 3).
pub fn ito_exponential(s: &Spectral, grad_pair: (&CMatrix, &CMatrix), z: C64) -> CMatrix {
    let n = s.n();
    let vd = dagger(&s.evecs);
    let g1 = matmul3(&vd, grad_pair.0, &s.evecs);
    let g2 = matmul3(&vd, grad_pair.1, &s.evecs);
    let scale = s.width();
    let e = &s.evals;
    let half_i = C64::new(0.0, 0.5);
    let mut m = CMatrix::zeros((n, n));
    for a in 0..n {
        for c in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..n {
                let w = exp_div_diff2(z, [e[a], e[b], e[c]], scale);
                acc += w * (g1[[a, b]] * g2[[b, c]] - g2[[a, b]] * g1[[b, c]]);
            }
            m[[a, c]] = half_i * acc;
        }
    }
    matmul3(&s.evecs, &m, &vd)
}
