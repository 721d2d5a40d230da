//! Dense complex linear algebra helpers.
//!
//! `ndarray` is the working representation everywhere in the crate; the
//! heavy kernels (Hermitian eigendecomposition, matrix products, singular
//! values) are delegated to `faer`, converting views without copies.

use crate::{C64, CMatrix};
use faer_ext::{IntoFaerComplex, IntoNdarrayComplex};
use ndarray::Array1;

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary of column eigenvectors.
pub fn eigh(h: &CMatrix) -> (Array1<f64>, CMatrix) {
    assert_eq!(h.nrows(), h.ncols(), "eigh expects a square matrix");
    let f = h.view().into_faer_complex();
    let evd = f.selfadjoint_eigendecomposition(faer::Side::Lower);
    let vals: Array1<f64> = evd
        .s()
        .column_vector()
        .iter()
        .map(|c| c.re)
        .collect::<Vec<_>>()
        .into();
    let vecs = evd.u().into_ndarray_complex().to_owned();
    (vals, vecs)
}

/// Eigenvalues of a Hermitian matrix in ascending order, skipping the
/// eigenvector accumulation (noticeably cheaper on large operators).
pub fn eigh_values(h: &CMatrix) -> Array1<f64> {
    assert_eq!(h.nrows(), h.ncols(), "eigh_values expects a square matrix");
    let f = h.view().into_faer_complex();
    let mut vals = f.selfadjoint_eigenvalues(faer::Side::Lower);
    vals.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues must be ordered"));
    vals.into()
}

/// Matrix product `a * b` via faer's blocked multiply.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let fa = a.view().into_faer_complex();
    let fb = b.view().into_faer_complex();
    (fa * fb).as_ref().into_ndarray_complex().to_owned()
}

/// `a * b * c` evaluated left to right.
pub fn matmul3(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> CMatrix {
    matmul(&matmul(a, b), c)
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    let mut out = a.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &matmul(a, b) - &matmul(b, a)
}

/// Operator (spectral) norm = largest singular value.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let f = a.view().into_faer_complex();
    let svd = f.singular_values();
    svd.first().copied().unwrap_or(0.0)
}

/// Frobenius norm.
pub fn fro_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max-abs deviation from Hermiticity.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[[i, j]] - a[[j, i]].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Full (unnormalized) trace.
pub fn trace(a: &CMatrix) -> C64 {
    a.diag().sum()
}

/// Identity matrix of dimension `n`.
pub fn eye(n: usize) -> CMatrix {
    CMatrix::eye(n)
}

/// Apply a real scalar function to a Hermitian matrix through its
/// eigendecomposition: `f(H) = V f(Λ) V†`.
pub fn matrix_function(evals: &Array1<f64>, evecs: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    weighted_recompose(evals, evecs, |e| C64::new(f(e), 0.0))
}

/// Same as [`matrix_function`] but with complex weights (e.g. `e^{itE}`).
pub fn weighted_recompose(
    evals: &Array1<f64>,
    evecs: &CMatrix,
    f: impl Fn(f64) -> C64,
) -> CMatrix {
    let n = evecs.nrows();
    let mut scaled = evecs.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let w = f(evals[k]);
        col.mapv_inplace(|z| z * w);
    }
    // scaled * evecs† ; faer handles the big product.
    let vd = dagger(evecs);
    debug_assert_eq!(vd.nrows(), n);
    matmul(&scaled, &vd)
}
