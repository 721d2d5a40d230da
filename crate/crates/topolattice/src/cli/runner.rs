//! Top-level orchestration: load and validate a config, size the worker
//! pool, run the experiment, and write deterministic JSON/CSV outputs.

use super::args::{Cli, Command, RunArgs};
use super::config::{model_info, validate_str, ExperimentConfig, MODELS};
use super::experiments;
use super::record::RunOutput;
use crate::error::{Error, Result};
use std::path::Path;
use std::time::Instant;

/// Run a validated config on the current thread pool.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    experiments::run(config)
}

/// Run on a dedicated pool of `workers` threads (current pool if `None`).
/// Work is split only across independent (parameter, seed) units and folded
/// back in declaration order, so the thread count never changes the output.
pub fn run_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutput> {
    match workers {
        Some(n) if n >= 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            pool.install(|| experiments::run(config))
        }
        _ => experiments::run(config),
    }
}

/// Parse, validate, and run a raw JSON config (convenience for tests).
pub fn run_str(raw: &str) -> Result<RunOutput> {
    let (config, report) = validate_str(raw);
    match config {
        Some(config) if report.ok() => run(&config),
        _ => Err(Error::Config(report.to_string())),
    }
}

/// Human-readable table of every model builder and experiment.
pub fn catalog() -> String {
    let mut out = String::from("models:\n");
    for m in &MODELS {
        let params: Vec<String> = m
            .params
            .iter()
            .map(|(name, default)| format!("{name}={default}"))
            .collect();
        out.push_str(&format!(
            "  {:<12} dim {}  internal {}  params: {}\n               {}\n",
            m.name,
            m.dims.0,
            m.internal_dim,
            params.join(", "),
            m.note,
        ));
    }
    out.push_str("\nexperiments:\n");
    for (name, summary) in EXPERIMENT_SUMMARIES {
        out.push_str(&format!("  {name:<16} {summary}\n"));
    }
    out
}

const EXPERIMENT_SUMMARIES: [(&str, &str); 11] = [
    ("spectrum", "eigenvalues, spectral width, and the gap around mu"),
    ("dos", "windowed density-of-states histogram and its integral"),
    ("chern", "real-space Chern marker of the Fermi projection"),
    (
        "magnetization",
        "orbital magnetization via the correlation measure, with zero-temperature and band-pair cross-checks",
    ),
    (
        "streda",
        "field-derivative of the integrated density of states against the Chern form and the mu-derivative of magnetization",
    ),
    ("ccmeasure", "current-current correlation measure and its mass sum rules"),
    ("pump", "charge transported per driving cycle: quantized marker, adiabatic-curvature and transported-state routes"),
    ("superadiabatic", "error-norm scaling of the order-N superadiabatic projection"),
    ("edge", "spectrally weighted boundary current on a half-space restriction"),
    ("susceptibility", "second field-derivative of the grand potential density"),
    ("localization", "current-weighted inverse-square energy sums over a spectral interval"),
];

/// Entry point behind `main`: returns the process exit code.
///
/// 0 = success, 2 = the config failed validation, 3 = the run finished but
/// some (parameter, seed) units failed numerically, 1 = internal error.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Catalog => {
            print!("{}", catalog());
            0
        }
        Command::Validate { config } => {
            let raw = match std::fs::read_to_string(&config) {
                Ok(raw) => raw,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", config.display());
                    return 2;
                }
            };
            let (parsed, report) = validate_str(&raw);
            print!("{report}");
            if report.ok() {
                if let Some(cfg) = parsed {
                    println!("fingerprint: {}", cfg.fingerprint());
                }
                0
            } else {
                2
            }
        }
        command => {
            let name = command.experiment_name();
            let args = command
                .run_args()
                .expect("experiment subcommands carry run arguments");
            execute_experiment(name, args)
        }
    }
}

fn execute_experiment(name: &str, args: RunArgs) -> i32 {
    let raw = match std::fs::read_to_string(&args.config) {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return 2;
        }
    };
    let (parsed, mut report) = validate_str(&raw);
    let Some(mut config) = parsed else {
        eprint!("{report}");
        return 2;
    };
    if config.experiment != name {
        report.issues.push(super::config::ValidationIssue {
            path: "experiment".into(),
            message: format!(
                "config declares experiment {:?} but the {name:?} subcommand was invoked",
                config.experiment
            ),
        });
    }
    if !report.ok() {
        eprint!("{report}");
        return 2;
    }
    if let Some(seed) = args.seed_override {
        // Folded in before the fingerprint is taken, so identical effective
        // configurations keep identical fingerprints.
        config.ensemble.base_seed = seed;
    }

    let started = Instant::now();
    let mut output = match run_with_workers(&config, args.workers) {
        Ok(output) => output,
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            return 2;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if args.timing {
        let elapsed = started.elapsed().as_secs_f64() * 1e3;
        for record in &mut output.records {
            record.wall_time_ms = Some(elapsed);
        }
    }

    let dir = args
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(std::path::PathBuf::from));
    match dir {
        Some(dir) => {
            if let Err(e) = write_outputs(&dir, name, &output) {
                eprintln!("cannot write outputs: {e}");
                return 1;
            }
            let n = output.records.len();
            println!("wrote {} record(s) to {}", n, dir.display());
        }
        None => print!("{}", output.to_json()),
    }
    for err in output
        .records
        .iter()
        .flat_map(|r| r.errors.iter())
    {
        eprintln!("numeric failure: {err}");
    }
    if output.any_errors() {
        3
    } else {
        0
    }
}

fn write_outputs(dir: &Path, name: &str, output: &RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{name}.json")), output.to_json())?;
    if let Some(csv) = &output.csv {
        std::fs::write(dir.join(format!("{name}.csv")), csv)?;
    }
    Ok(())
}

/// The model catalog exposes every builder the config schema accepts.
pub fn catalog_covers(name: &str) -> bool {
    model_info(name).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::EXPERIMENTS;

    #[test]
    fn catalog_lists_every_model_and_experiment() {
        let text = catalog();
        for m in &MODELS {
            assert!(text.contains(m.name), "catalog misses model {}", m.name);
        }
        for e in EXPERIMENTS {
            assert!(text.contains(e), "catalog misses experiment {e}");
        }
        assert_eq!(EXPERIMENT_SUMMARIES.len(), EXPERIMENTS.len());
        for ((a, _), b) in EXPERIMENT_SUMMARIES.iter().zip(EXPERIMENTS) {
            assert_eq!(*a, b, "summary order must match the experiment list");
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let raw = r#"{
            "schema": 1,
            "experiment": "spectrum",
            "model": {"name": "anderson", "params": {"t": 1.0}},
            "lattice": {"extents": [12], "boundary": ["periodic"]},
            "ensemble": {"n_seeds": 3, "base_seed": 7,
                         "disorder": {"kind": "uniform", "strength": 0.5}}
        }"#;
        let (config, report) = validate_str(raw);
        assert!(report.ok(), "{report}");
        let config = config.unwrap();
        let one = run_with_workers(&config, Some(1)).unwrap().to_json();
        let four = run_with_workers(&config, Some(4)).unwrap().to_json();
        assert_eq!(one, four);
    }
}
