use clap::Parser;
use topolattice::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
