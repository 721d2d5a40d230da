//! Superadiabatic projections: the order-`N` asymptotic expansion of the
//! spectral projection along a slowly driven gapped Hamiltonian, resummed and
//! re-projected into an exactly idempotent family that the Liouville flow
//! follows to `O(ε^{N+1})`.
//!
//! The coefficients `P_n(t)` are determined recursively. Across the spectral
//! gap, `P_{n}` solves the commutator equation `[H, P_n] = iṖ_{n-1}`; within
//! the spectral blocks its components are fixed by idempotency through the
//! auxiliary `G_n = Σ_{l=1}^{n-1} P_l P_{n-l}`: the lower block is
//! `−P₀G_nP₀`, the upper `+Q₀G_nQ₀`. Every coefficient and its time
//! derivative is computed from analytic Taylor jets of the Hamiltonian in the
//! instantaneous eigenbasis — no finite differencing, and no division by
//! energy separations smaller than the gap.

use super::jet::{projection_derivative, projection_jet, sylvester_offdiag_jet, EigenFrame, MatrixJet};
use super::liouville::evolve_liouville_with;
use super::path::TimePath;
use crate::error::{Error, Result};
use crate::linalg::{dagger, eigh, eye, fro_norm, hermiticity_defect, matmul, op_norm};
use crate::{C64, CMatrix};

/// The expansion on a time grid, together with its resummation at a fixed `ε`.
#[derive(Debug, Clone)]
pub struct SuperadiabaticSeries {
    pub order: usize,
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// `hamiltonians[k]` = `H(t_k)`.
    pub hamiltonians: Vec<CMatrix>,
    /// `coeffs[k][n]` = `P_n(t_k)`, `n = 0..=order`.
    pub coeffs: Vec<Vec<CMatrix>>,
    /// `coeff_dots[k][n]` = `Ṗ_n(t_k)`.
    pub coeff_dots: Vec<Vec<CMatrix>>,
    /// `g_terms[k][m]` = `G_{m+1}(t_k)`, `m = 0..=order` (the first is zero).
    pub g_terms: Vec<Vec<CMatrix>>,
    /// Truncated series `P̃(t_k) = Σ εⁿ P_n(t_k)` and its time derivative.
    pub tilde: Vec<CMatrix>,
    pub tilde_dot: Vec<CMatrix>,
    /// Exactly idempotent projections obtained from `P̃` by spectral cutoff
    /// at `1/2`, and their time derivatives.
    pub projections: Vec<CMatrix>,
    pub projection_dots: Vec<CMatrix>,
    /// `max_t ‖P̃² − P̃‖ / ε^{order+1}` and the resulting validity threshold
    /// `ε_N = (4·c_N)^{−1/(order+1)}`.
    pub c_n: f64,
    pub eps_n: f64,
}

/// Build the order-`N` superadiabatic family at `epsilon` on a uniform grid
/// of `n_steps` intervals over the path's period.
///
/// Fails when the gap at `μ(t)` closes, when the resummed series has spectrum
/// inside the forbidden band `(1/4, 3/4)` at some node, or when `epsilon`
/// exceeds the validity threshold `ε_N`.
pub fn superadiabatic_construct(
    path: &TimePath,
    order: usize,
    epsilon: f64,
    n_steps: usize,
) -> Result<SuperadiabaticSeries> {
    if epsilon <= 0.0 {
        return Err(Error::Config(format!(
            "adiabatic parameter must be positive, got {epsilon}"
        )));
    }
    if n_steps < 2 {
        return Err(Error::Config("superadiabatic grid needs at least 2 intervals".into()));
    }
    let period = path.period();
    let times: Vec<f64> = (0..=n_steps)
        .map(|k| period * k as f64 / n_steps as f64)
        .collect();
    let jet_order = order + 1;
    let n = path.n();
    let identity = eye(n);

    let mut hamiltonians = Vec::with_capacity(times.len());
    let mut coeffs = Vec::with_capacity(times.len());
    let mut coeff_dots = Vec::with_capacity(times.len());
    let mut g_terms = Vec::with_capacity(times.len());
    let mut tilde = Vec::with_capacity(times.len());
    let mut tilde_dot = Vec::with_capacity(times.len());
    let mut projections = Vec::with_capacity(times.len());
    let mut projection_dots = Vec::with_capacity(times.len());
    let mut worst_defect = 0.0f64;
    let mut worst_node = 0usize;

    for (node, &t) in times.iter().enumerate() {
        let h_jet = path.hamiltonian_jet(t, jet_order);
        let frame = EigenFrame::new(h_jet.value(), path.mu(t), 1e-9).map_err(|e| match e {
            Error::GaplessFermiLevel { gap_lo, gap_hi, .. } => Error::GapClosed {
                t,
                gap: gap_hi - gap_lo,
                required: 1e-9,
            },
            other => other,
        })?;
        let h_hat = frame.rotate_in_jet(&h_jet);

        // Coefficient jets in the instantaneous eigenbasis. `p_jets[n]` has
        // jet order `jet_order − n`, just enough to read off Ṗ_n.
        let mut p_jets: Vec<MatrixJet> = vec![projection_jet(&frame, &h_hat, jet_order)];
        for m in 1..=order {
            let target = jet_order - m;
            let mut g_jet = MatrixJet::zeros(n, target);
            for l in 1..m {
                g_jet = g_jet.add(&p_jets[l].mul_trunc(&p_jets[m - l], target));
            }
            let p0 = p_jets[0].truncated(target);
            let q0 = MatrixJet::new(
                (0..=target)
                    .map(|k| {
                        if k == 0 {
                            &identity - p0.coeff(0)
                        } else {
                            p0.coeff(k).mapv(|z| -z)
                        }
                    })
                    .collect(),
            );
            let d_jet = q0
                .mul_trunc(&g_jet, target)
                .mul_trunc(&q0, target)
                .sub(&p0.mul_trunc(&g_jet, target).mul_trunc(&p0, target));
            let w_jet = p_jets[m - 1]
                .derivative()
                .scale(C64::new(0.0, 1.0))
                .truncated(target)
                .sub(&h_hat.commutator_trunc(&d_jet, target));
            let x_jet = sylvester_offdiag_jet(&frame, &h_hat, &p0, &w_jet, target);
            p_jets.push(d_jet.add(&x_jet));
        }

        // Rotate values and first derivatives back to the lattice basis.
        let values: Vec<CMatrix> = p_jets.iter().map(|j| frame.rotate_out(j.coeff(0))).collect();
        let dots: Vec<CMatrix> = p_jets.iter().map(|j| frame.rotate_out(j.coeff(1))).collect();
        let mut g_values = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let mut g = CMatrix::zeros((n, n));
            for l in 1..=m {
                g += &matmul(&values[l], &values[m + 1 - l]);
            }
            g_values.push(g);
        }
        let mut tilde_t = CMatrix::zeros((n, n));
        let mut tilde_dot_t = CMatrix::zeros((n, n));
        let mut scale = 1.0;
        for m in 0..=order {
            tilde_t += &values[m].mapv(|z| z * scale);
            tilde_dot_t += &dots[m].mapv(|z| z * scale);
            scale *= epsilon;
        }
        let herm = hermiticity_defect(&tilde_t);
        if herm > 1e-8 {
            return Err(Error::Invariant(format!(
                "resummed series lost Hermiticity at t = {t}: defect {herm:.3e}"
            )));
        }

        // Spectral cutoff at 1/2: the resummation must keep its spectrum out
        // of the middle band for the cutoff to be stable.
        let (lambdas, basis) = eigh(&tilde_t);
        for &lambda in lambdas.iter() {
            if lambda > 0.25 && lambda < 0.75 {
                return Err(Error::SeriesDiverged { t, lambda });
            }
        }
        let inside: Vec<bool> = lambdas.iter().map(|&l| l > 0.5).collect();
        let mut riesz_hat = CMatrix::zeros((n, n));
        for a in 0..n {
            if inside[a] {
                riesz_hat[[a, a]] = C64::new(1.0, 0.0);
            }
        }
        let rotate_out = |m: &CMatrix| matmul(&matmul(&basis, m), &dagger(&basis));
        let riesz = rotate_out(&riesz_hat);
        let tilde_dot_hat = matmul(&matmul(&dagger(&basis), &tilde_dot_t), &basis);
        let lambda_vec: Vec<f64> = lambdas.to_vec();
        let riesz_dot = rotate_out(&projection_derivative(&lambda_vec, &inside, &tilde_dot_hat));

        let defect = op_norm(&(&matmul(&tilde_t, &tilde_t) - &tilde_t));
        if defect > worst_defect {
            worst_defect = defect;
            worst_node = node;
        }

        hamiltonians.push(h_jet.value().clone());
        coeffs.push(values);
        coeff_dots.push(dots);
        g_terms.push(g_values);
        tilde.push(tilde_t);
        tilde_dot.push(tilde_dot_t);
        projections.push(riesz);
        projection_dots.push(riesz_dot);
    }

    let c_n = worst_defect / epsilon.powi(order as i32 + 1);
    let eps_n = if c_n > 0.0 {
        (4.0 * c_n).powf(-1.0 / (order as f64 + 1.0))
    } else {
        f64::INFINITY
    };
    if epsilon > eps_n {
        let (evals, _) = eigh(&tilde[worst_node]);
        let lambda = evals
            .iter()
            .copied()
            .min_by(|a, b| (a - 0.5).abs().partial_cmp(&(b - 0.5).abs()).unwrap())
            .unwrap_or(0.5);
        return Err(Error::SeriesDiverged {
            t: times[worst_node],
            lambda,
        });
    }
    Ok(SuperadiabaticSeries {
        order,
        epsilon,
        times,
        hamiltonians,
        coeffs,
        coeff_dots,
        g_terms,
        tilde,
        tilde_dot,
        projections,
        projection_dots,
        c_n,
        eps_n,
    })
}

/// Residuals of the defining identities of the expansion, maximized over the
/// grid. All of these are `ε`-independent statements about the coefficients.
#[derive(Debug, Clone)]
pub struct SeriesResiduals {
    /// `k = 1..=N`: `max_t ‖Σ_{i+j=k} P_iP_j − P_k‖` (idempotency order by order).
    pub product: Vec<f64>,
    /// `k = 1..=N`: `max_t ‖iṖ_{k−1} − [H, P_k]‖` (the intertwining relation).
    pub commutator: Vec<f64>,
    /// `m = 0..=N`: `max_t ‖[P₀, G_{m+1}]‖`.
    pub g_commuting: Vec<f64>,
    /// `m = 0..=N`: block-diagonal derivative identity
    /// `P₀Ṗ_mP₀ = i·P₀[H,G_{m+1}]P₀` (and its complement with opposite sign).
    pub block_derivative: Vec<f64>,
    /// Worst Hermiticity defect among all coefficients.
    pub hermiticity: f64,
    /// `max_t ‖P₀² − P₀‖` and `max_t ‖(P_N^ε)² − P_N^ε‖`.
    pub base_idempotency: f64,
    pub riesz_idempotency: f64,
}

pub fn series_residuals(series: &SuperadiabaticSeries) -> SeriesResiduals {
    let order = series.order;
    let n_nodes = series.times.len();
    let mut product = vec![0.0f64; order];
    let mut commutator = vec![0.0f64; order];
    let mut g_commuting = vec![0.0f64; order + 1];
    let mut block_derivative = vec![0.0f64; order + 1];
    let mut hermiticity = 0.0f64;
    let mut base_idempotency = 0.0f64;
    let mut riesz_idempotency = 0.0f64;
    for node in 0..n_nodes {
        let p = &series.coeffs[node];
        let p_dot = &series.coeff_dots[node];
        let h = &series.hamiltonians[node];
        let q0 = &eye(p[0].nrows()) - &p[0];
        for k in 1..=order {
            let mut sum = CMatrix::zeros(p[0].raw_dim());
            for i in 0..=k {
                sum += &matmul(&p[i], &p[k - i]);
            }
            product[k - 1] = product[k - 1].max(fro_norm(&(&sum - &p[k])));
            let lhs = p_dot[k - 1].mapv(|z| z * C64::new(0.0, 1.0));
            let rhs = &matmul(h, &p[k]) - &matmul(&p[k], h);
            commutator[k - 1] = commutator[k - 1].max(fro_norm(&(&lhs - &rhs)));
        }
        for m in 0..=order {
            let g = &series.g_terms[node][m];
            let comm_pg = &matmul(&p[0], g) - &matmul(g, &p[0]);
            g_commuting[m] = g_commuting[m].max(fro_norm(&comm_pg));
            let hg = (&matmul(h, g) - &matmul(g, h)).mapv(|z| z * C64::new(0.0, 1.0));
            let low = &matmul(&matmul(&p[0], &p_dot[m]), &p[0])
                - &matmul(&matmul(&p[0], &hg), &p[0]);
            let high = &matmul(&matmul(&q0, &p_dot[m]), &q0)
                + &matmul(&matmul(&q0, &hg), &q0);
            block_derivative[m] = block_derivative[m].max(fro_norm(&low)).max(fro_norm(&high));
        }
        for pm in p {
            hermiticity = hermiticity.max(hermiticity_defect(pm));
        }
        base_idempotency =
            base_idempotency.max(fro_norm(&(&matmul(&p[0], &p[0]) - &p[0])));
        let r = &series.projections[node];
        riesz_idempotency = riesz_idempotency.max(fro_norm(&(&matmul(r, r) - r)));
    }
    SeriesResiduals {
        product,
        commutator,
        g_commuting,
        block_derivative,
        hermiticity,
        base_idempotency,
        riesz_idempotency,
    }
}

fn assemble(coeffs: &[CMatrix], upto: usize, epsilon: f64) -> CMatrix {
    let mut acc = CMatrix::zeros(coeffs[0].raw_dim());
    let mut scale = 1.0;
    for c in coeffs.iter().take(upto + 1) {
        acc += &c.mapv(|z| z * scale);
        scale *= epsilon;
    }
    acc
}

/// `max_t ‖P̃_m² − P̃_m − ε^{m+1}G_{m+1}‖` for the order-`m` partial sum,
/// evaluated at an arbitrary `ε` (the coefficients don't depend on `ε`).
pub fn partial_sum_idempotency_residual(
    series: &SuperadiabaticSeries,
    m: usize,
    epsilon: f64,
) -> f64 {
    let mut worst = 0.0f64;
    let lead = epsilon.powi(m as i32 + 1);
    for node in 0..series.times.len() {
        let tilde_m = assemble(&series.coeffs[node], m, epsilon);
        let g = &series.g_terms[node][m];
        let res = &(&matmul(&tilde_m, &tilde_m) - &tilde_m) - &g.mapv(|z| z * lead);
        worst = worst.max(fro_norm(&res));
    }
    worst
}

/// `max_t ‖[iε∂ₜ − H, P̃_m] − iε^{m+1}Ṗ_m‖` for the order-`m` partial sum.
pub fn partial_sum_intertwiner_residual(
    series: &SuperadiabaticSeries,
    m: usize,
    epsilon: f64,
) -> f64 {
    let mut worst = 0.0f64;
    let lead = C64::new(0.0, epsilon.powi(m as i32 + 1));
    for node in 0..series.times.len() {
        let tilde_m = assemble(&series.coeffs[node], m, epsilon);
        let tilde_m_dot = assemble(&series.coeff_dots[node], m, epsilon);
        let h = &series.hamiltonians[node];
        let res = &(&tilde_m_dot.mapv(|z| z * C64::new(0.0, epsilon))
            - &(&matmul(h, &tilde_m) - &matmul(&tilde_m, h)))
            - &series.coeff_dots[node][m].mapv(|z| z * lead);
        worst = worst.max(fro_norm(&res));
    }
    worst
}

/// Scaling of the superadiabatic error norms across a list of `ε` values.
#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub order: usize,
    pub epsilons: Vec<f64>,
    /// `max_t ‖P_N^ε − P₀‖` — expected slope 1.
    pub norm_distance: Vec<f64>,
    /// `max_t ‖[iε∂ₜ − H, P_N^ε]‖` — expected slope `N+1`.
    pub norm_commutator: Vec<f64>,
    /// `max_t ‖ρ(t) − P_N^ε(t)‖` with `ρ₀ = P_N^ε(0)` — expected slope ≥ `N`.
    pub norm_tracking: Vec<f64>,
    pub slope_distance: f64,
    pub slope_commutator: f64,
    pub slope_tracking: f64,
}

impl ScalingReport {
    /// CSV emission for offline slope plots.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,order,norm_distance,norm_commutator,norm_tracking\n");
        for (i, eps) in self.epsilons.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.6e},{:.6e},{:.6e}\n",
                eps, self.order, self.norm_distance[i], self.norm_commutator[i], self.norm_tracking[i]
            ));
        }
        out
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (x.ln(), y.max(1e-300).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Construct the series at each `ε`, measure the three error norms, and fit
/// their slopes on a log–log scale.
pub fn superadiabatic_verify(
    path: &TimePath,
    order: usize,
    epsilons: &[f64],
    n_steps: usize,
    step_factor: f64,
) -> Result<ScalingReport> {
    let mut norm_distance = Vec::with_capacity(epsilons.len());
    let mut norm_commutator = Vec::with_capacity(epsilons.len());
    let mut norm_tracking = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let series = superadiabatic_construct(path, order, eps, n_steps)?;
        let mut d53 = 0.0f64;
        let mut d54 = 0.0f64;
        for node in 0..series.times.len() {
            let p_eps = &series.projections[node];
            d53 = d53.max(op_norm(&(p_eps - &series.coeffs[node][0])));
            let h = &series.hamiltonians[node];
            let comm = &series.projection_dots[node].mapv(|z| z * C64::new(0.0, eps))
                - &(&matmul(h, p_eps) - &matmul(p_eps, h));
            d54 = d54.max(op_norm(&comm));
        }
        let evolved = evolve_liouville_with(
            path,
            &series.projections[0],
            eps,
            &series.times,
            step_factor,
            1e-7,
        )?;
        let mut track = 0.0f64;
        for (state, target) in evolved.states.iter().zip(&series.projections) {
            track = track.max(op_norm(&(state - target)));
        }
        norm_distance.push(d53);
        norm_commutator.push(d54);
        norm_tracking.push(track);
    }
    Ok(ScalingReport {
        order,
        epsilons: epsilons.to_vec(),
        slope_distance: log_log_slope(epsilons, &norm_distance),
        slope_commutator: log_log_slope(epsilons, &norm_commutator),
        slope_tracking: log_log_slope(epsilons, &norm_tracking),
        norm_distance,
        norm_commutator,
        norm_tracking,
    })
}
