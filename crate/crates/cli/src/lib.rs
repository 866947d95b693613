//! Command-line orchestration for the pauligw solver: instance generation, solving,
//! rounding, sparsification, certificates and benchmark sweeps.
//!
//! Exit codes: 0 on success, 1 when an instance (or other input) cannot be built or
//! read, 2 when the solver fails.

pub mod args;
pub mod bench;
pub mod commands;
pub mod constraints;

pub use args::{Cli, Command};
pub use bench::BenchRow;
pub use commands::RunReport;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Instance(anyhow::Error),
    Solver(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Instance(_) => 1,
            Failure::Solver(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Instance(e) | Failure::Solver(e) => e,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Gen(a) => commands::run_gen(a),
        Command::Solve(a) => commands::run_solve(a),
        Command::Round(a) => commands::run_round(a),
        Command::Sparsify(a) => commands::run_sparsify(a),
        Command::Certify(a) => commands::run_certify(a),
        Command::Bench(a) => bench::run_bench(a),
    }
}
