//! Command-line surface: one subcommand per experiment plus `validate` and
//! `catalog`, each experiment taking the same run arguments.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

const CSV_HELP: &str = "\
CSV columns written next to the JSON records (one row per parameter point per seed):
  spectrum        (none; eigenvalues are embedded in the JSON record)
  dos             b,bin_lo,bin_hi,mass,cumulative            (one row per energy bin)
  chern           seed,b,mu,chern,imag_defect,sensitivity
  magnetization   seed,b,beta,mu,m_ccm,m_t0,m_pairs          (m_pairs only for clean periodic runs at b=0)
  streda          seed,b,mu,chern_form,ids_slope,dmu_slope,route_spread
  ccmeasure       seed,b,total_mass,direct_mass,mass_defect
  pump            epsilon,delta_p_dynamic,delta_p_adiabatic,identity_defect,steps
  superadiabatic  epsilon,order,norm_distance,norm_commutator,norm_tracking
  edge            seed,b,mu,current,opposite,imbalance,imag_defect
  susceptibility  seed,b,beta,mu,chi
  localization    seed,b,delta_lo,delta_hi,softened,excluded

Exit codes: 0 success, 2 validation failure, 3 run finished with numeric
failures carried in the records, 1 internal error.";

/// Numerical laboratory for disordered magnetic lattice models.
#[derive(Debug, Parser)]
#[command(name = "topolattice", version, after_long_help = CSV_HELP, after_help = CSV_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Arguments shared by every experiment subcommand.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,

    /// Directory for <experiment>.json and <experiment>.csv; stdout if absent
    /// and the config names no output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads for the (parameter, seed) fan-out; results are folded
    /// in declaration order, so this never changes the output.
    #[arg(long)]
    pub workers: Option<usize>,

    /// Replace the ensemble base seed before running (and before the config
    /// fingerprint is taken).
    #[arg(long)]
    pub seed_override: Option<u64>,

    /// Stamp wall-clock time onto the records. Off by default so that
    /// identical configurations produce byte-identical outputs.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, spectral width, and the gap around the chemical potential.
    Spectrum(RunArgs),
    /// Windowed density-of-states histogram and its cumulative integral.
    Dos(RunArgs),
    /// Real-space Chern marker of the Fermi projection.
    Chern(RunArgs),
    /// Orbital magnetization with independent cross-check routes.
    Magnetization(RunArgs),
    /// Field- and mu-derivative identities for the density of states.
    Streda(RunArgs),
    /// Current-current correlation measure and its mass sum rules.
    Ccmeasure(RunArgs),
    /// Charge transported per driving cycle over a pumping path.
    Pump(RunArgs),
    /// Error-norm scaling of the superadiabatic projection series.
    Superadiabatic(RunArgs),
    /// Spectrally weighted boundary current on a half-space restriction.
    Edge(RunArgs),
    /// Second field-derivative of the grand potential density.
    Susceptibility(RunArgs),
    /// Current-weighted inverse-square energy sums over an interval.
    Localization(RunArgs),
    /// Check a configuration file and list every problem found.
    Validate {
        /// Path to the JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// List every model builder and experiment the runner knows.
    Catalog,
}

impl Command {
    /// The experiment name an experiment subcommand corresponds to.
    pub fn experiment_name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Dos(_) => "dos",
            Command::Chern(_) => "chern",
            Command::Magnetization(_) => "magnetization",
            Command::Streda(_) => "streda",
            Command::Ccmeasure(_) => "ccmeasure",
            Command::Pump(_) => "pump",
            Command::Superadiabatic(_) => "superadiabatic",
            Command::Edge(_) => "edge",
            Command::Susceptibility(_) => "susceptibility",
            Command::Localization(_) => "localization",
            Command::Validate { .. } => "validate",
            Command::Catalog => "catalog",
        }
    }

    /// Run arguments, if this is an experiment subcommand.
    pub fn run_args(self) -> Option<RunArgs> {
        match self {
            Command::Spectrum(a)
            | Command::Dos(a)
            | Command::Chern(a)
            | Command::Magnetization(a)
            | Command::Streda(a)
            | Command::Ccmeasure(a)
            | Command::Pump(a)
            | Command::Superadiabatic(a)
            | Command::Edge(a)
            | Command::Susceptibility(a)
            | Command::Localization(a) => Some(a),
            Command::Validate { .. } | Command::Catalog => None,
        }
    }
}
