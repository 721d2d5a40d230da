//! Experiment implementations: each takes a validated config, fans the
//! independent (parameter, seed) work units over the thread pool, and folds
//! the outcomes into ordered [`ResultRecord`]s plus optional CSV tables.

use super::config::ExperimentConfig;
use super::record::{ResultRecord, RunOutput};
use crate::algebra::{grad, Spectral, TraceWindow};
use crate::dynamics::{
    polarization_dynamic_with, polarization_kv, rice_mele_path, superadiabatic_verify,
    two_level_path, TimePath,
};
use crate::edge::{edge_current, restrict_half_space, BumpFunction};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, catalog, Disorder, HoppingKernel, Lattice, MagneticField};
use crate::observables::{
    chern_number, current_current_measure, dmu_magnetization, localization_length,
    magnetization_ccm, magnetization_spectral_pairs, magnetization_t0, streda_check,
    susceptibility_fd, window_dof_weights,
};
use crate::CMatrix;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Immutable context shared by every record of one run.
pub(crate) struct Frame<'a> {
    pub config: &'a ExperimentConfig,
    pub resolved: serde_json::Value,
    pub fingerprint: String,
}

impl<'a> Frame<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        Frame {
            resolved: config.resolved(),
            fingerprint: config.fingerprint(),
            config,
        }
    }

    fn record(&self, params: BTreeMap<String, f64>) -> ResultRecord {
        ResultRecord::new(
            &self.config.experiment,
            &self.fingerprint,
            &self.resolved,
            params,
        )
    }
}

/// Dispatch a validated config to its experiment.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let frame = Frame::new(config);
    match config.experiment.as_str() {
        "spectrum" => spectrum(&frame),
        "dos" => dos_histogram(&frame),
        "chern" => chern(&frame),
        "magnetization" => magnetization(&frame),
        "streda" => streda(&frame),
        "ccmeasure" => ccmeasure(&frame),
        "pump" => pump(&frame),
        "superadiabatic" => superadiabatic(&frame),
        "edge" => edge(&frame),
        "susceptibility" => susceptibility(&frame),
        "localization" => localization(&frame),
        other => Err(Error::Config(format!("unknown experiment {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn kernel_for(config: &ExperimentConfig) -> Result<HoppingKernel> {
    let m = &config.model;
    match m.name.as_str() {
        "haldane" => catalog::haldane(m.param("t1"), m.param("t2"), m.param("phi"), m.param("m")),
        "hofstadter" => catalog::hofstadter(m.param("t")),
        "rice_mele" => catalog::rice_mele(m.param("t"), m.param("delta"), m.param("stagger")),
        "anderson" => catalog::anderson(config.lattice.extents.len(), m.param("t")),
        other => Err(Error::Config(format!("model {other:?} has no static kernel"))),
    }
}

fn lattice_for(config: &ExperimentConfig, kernel: &HoppingKernel) -> Result<Lattice> {
    config.lattice.build(kernel.internal_dim())
}

fn disorder_for(config: &ExperimentConfig, seed: u64) -> Disorder {
    match config.ensemble.disorder.kind.as_str() {
        "uniform" => Disorder::uniform(config.ensemble.disorder.strength, seed),
        _ => Disorder::clean(),
    }
}

fn is_clean(config: &ExperimentConfig) -> bool {
    config.ensemble.disorder.kind == "none"
}

type SeedOutcome = std::result::Result<(f64, BTreeMap<String, f64>), String>;

/// Run `compute` over every (parameter point, seed) pair in parallel and fold
/// the outcomes into one aggregated record per point, both in declaration
/// order, so the output is independent of scheduling.
fn ensemble_records<P: Sync>(
    frame: &Frame,
    points: Vec<(BTreeMap<String, f64>, P)>,
    seeds: &[u64],
    compute: impl Fn(&P, u64) -> Result<(f64, BTreeMap<String, f64>)> + Sync,
) -> Vec<ResultRecord> {
    let mut units: Vec<(usize, u64)> = Vec::with_capacity(points.len() * seeds.len());
    for pi in 0..points.len() {
        for &seed in seeds {
            units.push((pi, seed));
        }
    }
    let outcomes: Vec<SeedOutcome> = units
        .par_iter()
        .map(|&(pi, seed)| compute(&points[pi].1, seed).map_err(|e| e.to_string()))
        .collect();

    let mut records: Vec<ResultRecord> = points
        .into_iter()
        .map(|(params, _)| frame.record(params))
        .collect();
    for ((pi, seed), outcome) in units.into_iter().zip(outcomes) {
        records[pi].push_seed(seed, outcome);
    }
    for r in &mut records {
        r.aggregate();
    }
    records
}

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Build a CSV with one row per parameter point per seed: the given param
/// columns come from each record, the value column from the seed's primary
/// scalar, and the remaining columns from its named extras.
fn seed_csv(
    records: &[ResultRecord],
    param_cols: &[&str],
    value_col: &str,
    extra_cols: &[&str],
) -> String {
    let mut out = String::from("seed");
    for c in param_cols {
        out.push(',');
        out.push_str(c);
    }
    out.push(',');
    out.push_str(value_col);
    for c in extra_cols {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for record in records {
        for sv in &record.per_seed {
            out.push_str(&sv.seed.to_string());
            for c in param_cols {
                out.push(',');
                out.push_str(&csv_field(record.params.get(*c).copied()));
            }
            out.push(',');
            out.push_str(&csv_field(sv.value));
            for c in extra_cols {
                out.push(',');
                out.push_str(&csv_field(sv.extra.get(*c).copied()));
            }
            out.push('\n');
        }
    }
    out
}

fn params2(a: (&str, f64), b: (&str, f64)) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert(a.0.to_string(), a.1);
    m.insert(b.0.to_string(), b.1);
    m
}

fn params3(a: (&str, f64), b: (&str, f64), c: (&str, f64)) -> BTreeMap<String, f64> {
    let mut m = params2(a, b);
    m.insert(c.0.to_string(), c.1);
    m
}

/// Spectral projection below `mu` from a dense Hermitian matrix.
fn projection_below(h: &CMatrix, mu: f64) -> CMatrix {
    let (vals, vecs) = crate::linalg::eigh(h);
    let n = h.nrows();
    let mut p = CMatrix::zeros((n, n));
    for (a, &e) in vals.iter().enumerate() {
        if e < mu {
            let col = vecs.column(a);
            for r in 0..n {
                for c in 0..n {
                    p[[r, c]] += col[r] * col[c].conj();
                }
            }
        }
    }
    p
}

fn drive_path(config: &ExperimentConfig) -> Result<TimePath> {
    let drive = config.drive();
    let m = &config.model;
    let path = match m.name.as_str() {
        "rice_mele" => rice_mele_path(
            m.param("t"),
            m.param("delta"),
            m.param("stagger"),
            config.lattice.extents[0],
            drive.period,
        )?,
        "two_level" => two_level_path(m.param("v"), m.param("delta0"), drive.period)?,
        other => {
            return Err(Error::Config(format!(
                "model {other:?} has no driven cycle"
            )))
        }
    };
    Ok(if drive.flatten { path.flattened() } else { path })
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

fn spectrum(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let mu0 = config.mus()[0];
    let seeds = config.ensemble.seeds();

    let points: Vec<(BTreeMap<String, f64>, f64)> = config
        .field
        .values()
        .into_iter()
        .map(|b| (params2(("b", b), ("mu", mu0)), b))
        .collect();

    // Pre-compute the eigenvalue vectors so the per-record payload can keep
    // the first realization's spectrum alongside the scalar statistics.
    let mut units: Vec<(usize, u64)> = Vec::new();
    for pi in 0..points.len() {
        for &seed in &seeds {
            units.push((pi, seed));
        }
    }
    let outcomes: Vec<std::result::Result<Vec<f64>, String>> = units
        .par_iter()
        .map(|&(pi, seed)| {
            let field = MagneticField::perpendicular(points[pi].1);
            let h = build_hamiltonian(&lattice, &field, &kernel, &disorder_for(config, seed))?;
            Ok(crate::linalg::eigh_values(&h.matrix).to_vec())
        })
        .map(|r: Result<Vec<f64>>| r.map_err(|e| e.to_string()))
        .collect();

    let mut records: Vec<ResultRecord> = points
        .iter()
        .map(|(params, _)| frame.record(params.clone()))
        .collect();
    for ((pi, seed), outcome) in units.into_iter().zip(outcomes) {
        match outcome {
            Ok(evals) => {
                let lo = evals[0];
                let hi = evals[evals.len() - 1];
                let below = evals.iter().rev().find(|&&e| e < mu0).copied();
                let above = evals.iter().find(|&&e| e > mu0).copied();
                let mut extra = BTreeMap::new();
                extra.insert("e_min".into(), lo);
                extra.insert("e_max".into(), hi);
                if let (Some(g0), Some(g1)) = (below, above) {
                    extra.insert("gap_lo".into(), g0);
                    extra.insert("gap_hi".into(), g1);
                }
                if !records[pi].vectors.contains_key("eigenvalues") {
                    records[pi].vectors.insert("eigenvalues".into(), evals);
                }
                records[pi].push_seed(seed, Ok((hi - lo, extra)));
            }
            Err(e) => records[pi].push_seed(seed, Err(e)),
        }
    }
    for r in &mut records {
        r.aggregate();
    }
    Ok(RunOutput {
        records,
        csv: None,
    })
}

// ---------------------------------------------------------------------------
// dos
// ---------------------------------------------------------------------------

fn dos_histogram(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let window = TraceWindow::with_margin(&lattice, config.numerics.window_margin)?;
    let bins = config.numerics.bins;
    let seeds = config.ensemble.seeds();
    let bs = config.field.values();

    type SeedSpectrum = (Vec<f64>, Vec<f64>, f64); // evals, per-eigenvector window weights, volume
    let mut units: Vec<(usize, u64)> = Vec::new();
    for pi in 0..bs.len() {
        for &seed in &seeds {
            units.push((pi, seed));
        }
    }
    let outcomes: Vec<std::result::Result<SeedSpectrum, String>> = units
        .par_iter()
        .map(|&(pi, seed)| -> Result<SeedSpectrum> {
            let field = MagneticField::perpendicular(bs[pi]);
            let h = build_hamiltonian(&lattice, &field, &kernel, &disorder_for(config, seed))?;
            let s = Spectral::new(&h)?;
            let (weights, vol) = window_dof_weights(&s, &window);
            Ok((s.evals.to_vec(), weights, vol))
        })
        .map(|r| r.map_err(|e| e.to_string()))
        .collect();

    let mut records = Vec::with_capacity(bs.len());
    let mut csv = String::from("b,bin_lo,bin_hi,mass,cumulative\n");
    for (pi, &b) in bs.iter().enumerate() {
        let mut record = frame.record(params2(("b", b), ("mu", config.mus()[0])));
        let mine: Vec<(u64, &std::result::Result<SeedSpectrum, String>)> = units
            .iter()
            .zip(&outcomes)
            .filter(|((p, _), _)| *p == pi)
            .map(|(&(_, seed), outcome)| (seed, outcome))
            .collect();

        // Common bin edges across the ensemble so masses can be averaged.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, outcome) in &mine {
            if let Ok((evals, _, _)) = outcome {
                lo = lo.min(evals[0]);
                hi = hi.max(evals[evals.len() - 1]);
            }
        }
        let have_spectrum = lo.is_finite() && hi.is_finite();
        let pad = if have_spectrum {
            1e-9 * (hi - lo).max(1.0) + if hi == lo { 0.5 } else { 0.0 }
        } else {
            0.0
        };
        let (lo, hi) = (lo - pad, hi + pad);
        let edges: Vec<f64> = (0..=bins)
            .map(|k| lo + (hi - lo) * k as f64 / bins as f64)
            .collect();
        let bin_of = |e: f64| -> usize {
            let raw = ((e - lo) / (hi - lo) * bins as f64).floor();
            (raw.max(0.0) as usize).min(bins - 1)
        };

        let mut masses: Vec<Vec<f64>> = Vec::new();
        for (seed, outcome) in &mine {
            match outcome {
                Ok((evals, weights, vol)) => {
                    let mut mass = vec![0.0; bins];
                    for (a, &e) in evals.iter().enumerate() {
                        mass[bin_of(e)] += weights[a] / vol;
                    }
                    let total: f64 = mass.iter().sum();
                    let mut extra = BTreeMap::new();
                    extra.insert("e_min".into(), evals[0]);
                    extra.insert("e_max".into(), evals[evals.len() - 1]);
                    record.push_seed(*seed, Ok((total, extra)));
                    masses.push(mass);
                }
                Err(e) => record.push_seed(*seed, Err(e.clone())),
            }
        }

        if have_spectrum && !masses.is_empty() {
            let n = masses.len() as f64;
            let mean: Vec<f64> = (0..bins)
                .map(|k| masses.iter().map(|m| m[k]).sum::<f64>() / n)
                .collect();
            let mut cumulative = Vec::with_capacity(bins);
            let mut acc = 0.0;
            for &m in &mean {
                acc += m;
                cumulative.push(acc);
            }
            for k in 0..bins {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    b,
                    edges[k],
                    edges[k + 1],
                    mean[k],
                    cumulative[k]
                ));
            }
            record.vectors.insert("edges".into(), edges);
            record.vectors.insert("mass".into(), mean);
            record.vectors.insert("cumulative".into(), cumulative);
        }
        record.aggregate();
        records.push(record);
    }
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// chern
// ---------------------------------------------------------------------------

fn chern(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let window = TraceWindow::with_margin(&lattice, config.numerics.window_margin)?;
    let seeds = config.ensemble.seeds();

    let mut points = Vec::new();
    for b in config.field.values() {
        for mu in config.mus() {
            points.push((params2(("b", b), ("mu", mu)), (b, mu)));
        }
    }
    let mut records = ensemble_records(frame, points, &seeds, |&(b, mu), seed| {
        let field = MagneticField::perpendicular(b);
        let h = build_hamiltonian(&lattice, &field, &kernel, &disorder_for(config, seed))?;
        let s = Spectral::new(&h)?;
        let p = s.fermi_projection(mu)?;
        let ch = chern_number(&s.operator(p), (0, 1), &window)?;
        let mut extra = BTreeMap::new();
        extra.insert("imag_defect".into(), ch.imag_defect);
        extra.insert("sensitivity".into(), ch.sensitivity);
        Ok((ch.value, extra))
    });
    for r in &mut records {
        for key in ["imag_defect", "sensitivity"] {
            if let Some(v) = r.max_extra(key) {
                r.diagnostics.insert(format!("max_{key}"), v);
            }
        }
    }
    let csv = seed_csv(&records, &["b", "mu"], "chern", &["imag_defect", "sensitivity"]);
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// magnetization
// ---------------------------------------------------------------------------

fn magnetization(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let window = TraceWindow::with_margin(&lattice, config.numerics.window_margin)?;
    let bins = config.numerics.bins;
    let n_k = config.numerics.n_k;
    let clean = is_clean(config);
    let all_periodic = config.lattice.boundary.iter().all(|m| m == "periodic");
    let seeds = config.ensemble.seeds();

    let mut points = Vec::new();
    for b in config.field.values() {
        for beta in config.betas() {
            for mu in config.mus() {
                points.push((
                    params3(("b", b), ("beta", beta), ("mu", mu)),
                    (b, beta, mu),
                ));
            }
        }
    }
    let records = ensemble_records(frame, points, &seeds, |&(b, beta, mu), seed| {
        let field = MagneticField::perpendicular(b);
        let h = build_hamiltonian(&lattice, &field, &kernel, &disorder_for(config, seed))?;
        let s = Spectral::new(&h)?;
        let grads: Vec<CMatrix> = (0..lattice.dim()).map(|a| grad(&h, a).matrix).collect();
        let ccm = current_current_measure(&s, &grads, bins, &window)?;
        let m = magnetization_ccm(&ccm, beta, mu, (0, 1));
        let t0 = magnetization_t0(&s, mu, (0, 1), &window)?;
        let mut extra = BTreeMap::new();
        extra.insert("m_t0".into(), t0.value);
        extra.insert("ccm_imag_defect".into(), m.imag_defect);
        extra.insert("t0_imag_defect".into(), t0.imag_defect);
        if clean && all_periodic && b == 0.0 {
            let pairs = magnetization_spectral_pairs(&kernel, n_k, beta, mu, (0, 1))?;
            extra.insert("m_pairs".into(), pairs);
        }
        Ok((m.value, extra))
    });
    let csv = seed_csv(
        &records,
        &["b", "beta", "mu"],
        "m_ccm",
        &["m_t0", "m_pairs"],
    );
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// streda
// ---------------------------------------------------------------------------

fn streda(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let window = TraceWindow::with_margin(&lattice, config.numerics.window_margin)?;
    let h_b = config.numerics.fd_step;
    let seeds = config.ensemble.seeds();

    let mut points = Vec::new();
    for b in config.field.values() {
        for mu in config.mus() {
            points.push((params2(("b", b), ("mu", mu)), (b, mu)));
        }
    }
    let mut records = ensemble_records(frame, points, &seeds, |&(b, mu), seed| {
        let disorder = disorder_for(config, seed);
        let build = |field: &MagneticField| build_hamiltonian(&lattice, field, &kernel, &disorder);
        let base = MagneticField::perpendicular(b);
        let sc = streda_check(build, &base, 2, mu, h_b, &window)?;
        let s = Spectral::new(&build(&base)?)?;
        let dm = dmu_magnetization(&s, mu, h_b, (0, 1), &window)?;
        let spread = (sc.lhs - sc.rhs)
            .abs()
            .max((sc.lhs - dm.slope).abs())
            .max((sc.rhs - dm.slope).abs());
        let mut extra = BTreeMap::new();
        extra.insert("ids_slope".into(), sc.lhs);
        extra.insert("chern_form".into(), sc.rhs);
        extra.insert("dmu_slope".into(), dm.slope);
        extra.insert("dmu_commutator".into(), dm.commutator);
        extra.insert("route_spread".into(), spread);
        Ok((sc.rhs, extra))
    });
    for r in &mut records {
        if let Some(v) = r.max_extra("route_spread") {
            r.diagnostics.insert("max_route_spread".into(), v);
        }
    }
    let csv = seed_csv(
        &records,
        &["b", "mu"],
        "chern_form",
        &["ids_slope", "dmu_slope", "route_spread"],
    );
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// ccmeasure
// ---------------------------------------------------------------------------

fn ccmeasure(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let window = TraceWindow::with_margin(&lattice, config.numerics.window_margin)?;
    let bins = config.numerics.bins;
    let tol = config.numerics.tolerance("ccm_validate", 1e-8);
    let seeds = config.ensemble.seeds();

    let points: Vec<(BTreeMap<String, f64>, f64)> = config
        .field
        .values()
        .into_iter()
        .map(|b| (params2(("b", b), ("mu", config.mus()[0])), b))
        .collect();
    let records = ensemble_records(frame, points, &seeds, |&b, seed| {
        let field = MagneticField::perpendicular(b);
        let h = build_hamiltonian(&lattice, &field, &kernel, &disorder_for(config, seed))?;
        let s = Spectral::new(&h)?;
        let grads: Vec<CMatrix> = (0..lattice.dim()).map(|a| grad(&h, a).matrix).collect();
        let ccm = current_current_measure(&s, &grads, bins, &window)?;
        ccm.validate(tol)?;
        let total = ccm.total_mass();
        let direct = ccm.direct_mass();
        let mut extra = BTreeMap::new();
        extra.insert("direct_mass".into(), direct);
        extra.insert("mass_defect".into(), (total - direct).abs());
        Ok((total, extra))
    });
    let csv = seed_csv(&records, &["b"], "total_mass", &["direct_mass", "mass_defect"]);
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// pump
// ---------------------------------------------------------------------------

fn pump(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let drive = config.drive();
    let path = drive_path(config)?;
    let window = TraceWindow::full(path.lattice());
    let steps = config.numerics.steps;
    let seed = config.ensemble.base_seed;

    let kv = polarization_kv(&path, steps, &window)?;
    let period = path.period();
    let times: Vec<f64> = (0..=steps).map(|i| period * i as f64 / steps as f64).collect();
    let projections: Vec<CMatrix> = times
        .iter()
        .map(|&t| projection_below(&path.hamiltonian(t), path.mu(t)))
        .collect();
    let quanta = crate::dynamics::pump_chern(&times, &projections, path.lattice(), &window)?;

    // Transported-state runs per epsilon are independent parameter units.
    let rho0 = projections[0].clone();
    let identity_tol = config.numerics.tolerance("identity", 1e-6);
    let step_factor = config.numerics.solver_step;
    let rows: Vec<std::result::Result<(f64, f64, usize), String>> = drive
        .epsilons
        .par_iter()
        .map(|&eps| {
            polarization_dynamic_with(&path, &rho0, eps, &window, step_factor, identity_tol)
                .map(|d| (d.delta_p[0], d.identity_defect, d.steps))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut csv = String::from("epsilon,delta_p_dynamic,delta_p_adiabatic,identity_defect,steps\n");
    let mut record = frame.record(BTreeMap::new());
    let mut eps_col = Vec::new();
    let mut dyn_col = Vec::new();
    for (&eps, row) in drive.epsilons.iter().zip(&rows) {
        match row {
            Ok((dp, defect, n)) => {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    eps, dp, kv.delta_p[0], defect, n
                ));
                eps_col.push(eps);
                dyn_col.push(*dp);
            }
            Err(e) => {
                csv.push_str(&format!("{eps},,,,\n"));
                record.errors.push(format!("epsilon {eps}: {e}"));
            }
        }
    }

    let quantum = quanta[0];
    let mut extra = BTreeMap::new();
    extra.insert("kv_delta_p".into(), kv.delta_p[0]);
    extra.insert("min_gap".into(), kv.min_gap);
    extra.insert(
        "quantization_defect".into(),
        (quantum - quantum.round()).abs(),
    );
    record.push_seed(seed, Ok((quantum, extra)));
    record.vectors.insert("epsilons".into(), eps_col);
    record.vectors.insert("delta_p_dynamic".into(), dyn_col);
    record.aggregate();
    Ok(RunOutput {
        records: vec![record],
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// superadiabatic
// ---------------------------------------------------------------------------

fn superadiabatic(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let drive = config.drive();
    let path = drive_path(config)?;
    let steps = config.numerics.steps;
    let step_factor = config.numerics.solver_step;
    let seed = config.ensemble.base_seed;

    let reports: Vec<std::result::Result<crate::dynamics::ScalingReport, String>> = drive
        .orders
        .par_iter()
        .map(|&order| {
            superadiabatic_verify(&path, order, &drive.epsilons, steps, step_factor)
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut csv = String::from("epsilon,order,norm_distance,norm_commutator,norm_tracking\n");
    let mut records = Vec::new();
    for (&order, report) in drive.orders.iter().zip(&reports) {
        let mut record = frame.record({
            let mut m = BTreeMap::new();
            m.insert("order".into(), order as f64);
            m
        });
        match report {
            Ok(rep) => {
                for (i, &eps) in rep.epsilons.iter().enumerate() {
                    csv.push_str(&format!(
                        "{},{},{:.6e},{:.6e},{:.6e}\n",
                        eps, order, rep.norm_distance[i], rep.norm_commutator[i], rep.norm_tracking[i]
                    ));
                }
                let mut extra = BTreeMap::new();
                extra.insert("slope_distance".into(), rep.slope_distance);
                extra.insert("slope_tracking".into(), rep.slope_tracking);
                record.push_seed(seed, Ok((rep.slope_commutator, extra)));
                record.vectors.insert("epsilons".into(), rep.epsilons.clone());
                record.vectors.insert("norm_distance".into(), rep.norm_distance.clone());
                record
                    .vectors
                    .insert("norm_commutator".into(), rep.norm_commutator.clone());
                record.vectors.insert("norm_tracking".into(), rep.norm_tracking.clone());
            }
            Err(e) => record.push_seed(seed, Err(e.clone())),
        }
        record.aggregate();
        records.push(record);
    }
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// edge
// ---------------------------------------------------------------------------

fn edge(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let seeds = config.ensemble.seeds();

    let mut points = Vec::new();
    for b in config.field.values() {
        for mu in config.mus() {
            points.push((params2(("b", b), ("mu", mu)), (b, mu)));
        }
    }
    let mut records = ensemble_records(frame, points, &seeds, |&(b, mu), seed| {
        let field = MagneticField::perpendicular(b);
        let bulk = build_hamiltonian(&lattice, &field, &kernel, &disorder_for(config, seed))?;
        let half = restrict_half_space(&bulk, 1)?;
        let below = half
            .bulk_evals
            .iter()
            .copied()
            .filter(|&e| e < mu)
            .fold(f64::NEG_INFINITY, f64::max);
        let above = half
            .bulk_evals
            .iter()
            .copied()
            .filter(|&e| e > mu)
            .fold(f64::INFINITY, f64::min);
        if !below.is_finite() || !above.is_finite() {
            return Err(Error::Invariant(format!(
                "chemical potential {mu} is outside the bulk spectrum"
            )));
        }
        let bump = BumpFunction::centered_in(below, above)?;
        let depth = config.numerics.edge_depth.unwrap_or(half.depth);
        let current = edge_current(&half, &bump, 0, depth)?;
        let mut extra = BTreeMap::new();
        extra.insert("opposite".into(), current.opposite);
        extra.insert("imbalance".into(), current.imbalance);
        extra.insert("imag_defect".into(), current.imag_defect);
        extra.insert("used_bloch".into(), if current.used_bloch { 1.0 } else { 0.0 });
        extra.insert("gap_lo".into(), below);
        extra.insert("gap_hi".into(), above);
        Ok((current.value, extra))
    });
    for r in &mut records {
        for key in ["imbalance", "imag_defect"] {
            if let Some(v) = r.max_extra(key) {
                r.diagnostics.insert(format!("max_{key}"), v.abs());
            }
        }
    }
    let csv = seed_csv(
        &records,
        &["b", "mu"],
        "current",
        &["opposite", "imbalance", "imag_defect"],
    );
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// susceptibility
// ---------------------------------------------------------------------------

fn susceptibility(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let window = TraceWindow::with_margin(&lattice, config.numerics.window_margin)?;
    let bins = config.numerics.bins;
    let h_b = config.numerics.fd_step;
    let seeds = config.ensemble.seeds();

    let mut points = Vec::new();
    for b in config.field.values() {
        for beta in config.betas() {
            for mu in config.mus() {
                points.push((
                    params3(("b", b), ("beta", beta), ("mu", mu)),
                    (b, beta, mu),
                ));
            }
        }
    }
    let records = ensemble_records(frame, points, &seeds, |&(b, beta, mu), seed| {
        let disorder = disorder_for(config, seed);
        let build = |field: &MagneticField| build_hamiltonian(&lattice, field, &kernel, &disorder);
        let base = MagneticField::perpendicular(b);
        let chi = susceptibility_fd(build, &base, 2, 2, beta, mu, bins, h_b, &window)?;
        Ok((chi, BTreeMap::new()))
    });
    let csv = seed_csv(&records, &["b", "beta", "mu"], "chi", &[]);
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}

// ---------------------------------------------------------------------------
// localization
// ---------------------------------------------------------------------------

fn localization(frame: &Frame) -> Result<RunOutput> {
    let config = frame.config;
    let kernel = kernel_for(config)?;
    let lattice = lattice_for(config, &kernel)?;
    let window = TraceWindow::with_margin(&lattice, config.numerics.window_margin)?;
    let bins = config.numerics.bins;
    let mus = config.mus();
    let delta = (
        mus.iter().copied().fold(f64::INFINITY, f64::min),
        mus.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let seeds = config.ensemble.seeds();

    let points: Vec<(BTreeMap<String, f64>, f64)> = config
        .field
        .values()
        .into_iter()
        .map(|b| {
            (
                params3(("b", b), ("delta_lo", delta.0), ("delta_hi", delta.1)),
                b,
            )
        })
        .collect();
    let records = ensemble_records(frame, points, &seeds, |&b, seed| {
        let field = MagneticField::perpendicular(b);
        let h = build_hamiltonian(&lattice, &field, &kernel, &disorder_for(config, seed))?;
        let s = Spectral::new(&h)?;
        let grads: Vec<CMatrix> = (0..lattice.dim()).map(|a| grad(&h, a).matrix).collect();
        let ccm = current_current_measure(&s, &grads, bins, &window)?;
        let ll = localization_length(&ccm, delta);
        let mut extra = BTreeMap::new();
        extra.insert("excluded".into(), ll.excluded);
        Ok((ll.softened, extra))
    });
    let csv = seed_csv(
        &records,
        &["b", "delta_lo", "delta_hi"],
        "softened",
        &["excluded"],
    );
    Ok(RunOutput {
        records,
        csv: Some(csv),
    })
}
