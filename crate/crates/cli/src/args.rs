use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pauligw::gibbs::{BackendConfig, BackendKind};
use pauligw::hu::{HUPolicy, StepMode};

use crate::constraints::ConstraintMode;

#[derive(Parser, Debug)]
#[command(name = "pauligw", version, about = "Relaxed Goemans-Williamson bounds for Pauli-sparse QUBO matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an instance file (or a Kronecker spec file).
    Gen(GenArgs),
    /// Bracket the relaxed GW value of an instance.
    Solve(SolveArgs),
    /// Round a solved instance to a ±1 vector and report its energy.
    Round(RoundArgs),
    /// Importance-sample a Pauli-sparse approximation of an instance.
    Sparsify(SparsifyArgs),
    /// Compute certificates and diagnostics.
    Certify(CertifyArgs),
    /// Run a benchmark sweep and write one CSV row per (instance, constraint mode).
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Cluster1d,
    Hypercube,
    Hamming,
    Complete,
    Commuting4,
    Random,
    Kronecker,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Cluster1d => "cluster1d",
            Model::Hypercube => "hypercube",
            Model::Hamming => "hamming",
            Model::Complete => "complete",
            Model::Commuting4 => "commuting4",
            Model::Random => "random",
            Model::Kronecker => "kronecker",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// Number of qubits (ignored by commuting4 and kronecker).
    #[arg(long)]
    pub n: Option<usize>,
    /// Hamming distance, or Kronecker repetitions of the 4×4 initiator.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Number of terms of a random instance.
    #[arg(long, default_value_t = 8)]
    pub terms: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Options shared by every command that runs the solver.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// auto | dense | stochastic | commuting1d
    #[arg(long, default_value = "auto")]
    pub backend: BackendKind,
    /// Seeds the stochastic probes and the rounding.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial number of stochastic trace probes.
    #[arg(long, default_value_t = 64)]
    pub probes: usize,
    /// Largest number of states on any cut of the commuting 1D contraction.
    #[arg(long, default_value_t = 64)]
    pub bond_cap: usize,
    /// fixed | adaptive
    #[arg(long, default_value = "fixed")]
    pub policy: StepMode,
    /// Leave wall-clock times out of the output so it is byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

impl SolverArgs {
    pub fn backend_config(&self) -> BackendConfig {
        let mut cfg = BackendConfig { kind: self.backend, ..Default::default() };
        cfg.stochastic.num_probes = self.probes;
        cfg.stochastic.max_probes = cfg.stochastic.max_probes.max(self.probes);
        cfg.stochastic.seed = self.seed;
        cfg.commuting.bond_cap = self.bond_cap;
        cfg
    }

    pub fn policy(&self) -> HUPolicy {
        HUPolicy { step_mode: self.policy, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoundingChoice {
    /// Explicit for dense-sized instances, Monte Carlo otherwise.
    Auto,
    Explicit,
    Mc,
}

#[derive(Args, Debug, Clone)]
pub struct RoundOpts {
    /// Accuracy of the Monte Carlo energy estimate.
    #[arg(long, default_value_t = 0.5)]
    pub round_eps: f64,
    /// Failure probability of the Monte Carlo estimate.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub rounding: RoundingChoice,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// auto | none | krylov:K | file:PATH
    #[arg(long, default_value = "auto")]
    pub constraints: ConstraintMode,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also round the solution and attach the sandwich certificate.
    #[arg(long)]
    pub round: bool,
    #[command(flatten)]
    pub rounding: RoundOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RoundArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Report written by `solve`; the instance is solved first when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    pub constraints: ConstraintMode,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub rounding: RoundOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SparsifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Target operator-norm error; sets the sample count.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Explicit sample count, overriding `--eps`.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CertKind {
    /// Ξ linear program for the chosen constraint set.
    Xi,
    /// Scaling diagnostic for the rank of the diagonal group.
    Stability,
    /// Purity test for a unique leading eigenvector.
    Purity,
    /// Exact QUBO value by enumeration (n ≤ 4).
    Qubo,
    /// Rounded/relaxed bracket; needs a report with a rounding.
    Sandwich,
}

#[derive(Args, Debug, Clone)]
pub struct CertifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub kind: Vec<CertKind>,
    #[arg(long, default_value = "auto")]
    pub constraints: ConstraintMode,
    /// Right-hand side of the Ξ program.
    #[arg(long, default_value_t = 1.0)]
    pub v: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Report from `solve`/`round`; certificates are appended to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Multiplier scales for the purity test.
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// Qubit counts (Kronecker repetitions for kronecker), as `7..12` (inclusive) or `7,9,11`.
    #[arg(long)]
    pub sizes: String,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Constraint modes run on every instance.
    #[arg(long, value_delimiter = ',', default_value = "auto,none")]
    pub modes: Vec<ConstraintMode>,
    /// Hamming distance for the hamming model.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Number of terms of random instances.
    #[arg(long, default_value_t = 8)]
    pub terms: usize,
    /// Sparsification accuracy for Kronecker instances.
    #[arg(long, default_value_t = 0.5)]
    pub sparsify_eps: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub rounding: RoundOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
