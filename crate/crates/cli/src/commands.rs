use std::io::{ErrorKind, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use pauligw::certify::{
    purity_uniqueness, qubo_certificate, sandwich_report, stability_certificate, xi_certificate, Certificate,
    CertificatePayload,
};
use pauligw::dense::DENSE_MAX_N;
use pauligw::gibbs::{build_backend, BackendConfig, GibbsParams, GibbsProblem};
use pauligw::hu::{solve, SolveReport};
use pauligw::instances::{
    gen_cluster1d, gen_commuting4, gen_hamming_family, gen_kronecker, gen_random_sparse, instance_from_json,
    instance_to_json, default_initiator, HammingMode, Instance, KroneckerSpec,
};
use pauligw::pauli::{diagonal_group, ConstraintSet};
use pauligw::rounding::{energy_density_mc, round_explicit, sample_rotation, RoundedSolution};
use pauligw::sparsifier::{sample_count, sparsify_instance};

use crate::args::{CertKind, CertifyArgs, GenArgs, Model, RoundArgs, RoundOpts, RoundingChoice, SolveArgs, SolverArgs, SparsifyArgs};
use crate::constraints::{constraints_from_labels, resolve, ConstraintMode};
use crate::Failure;

/// Largest term count accepted when a Kronecker instance is expanded for solving.
pub const KRONECKER_EXPAND_CAP: usize = 1 << 16;

/// Everything `solve`, `round` and `certify` write.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_id: String,
    pub model: String,
    pub seed: u64,
    pub constraint_mode: String,
    pub solve: SolveReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<RoundedSolution>,
    #[serde(default)]
    pub certificates: Vec<Certificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutput {
    pub instance_id: String,
    pub certificates: Vec<Certificate>,
}

/// Write to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
            r => r.context("writing to stdout"),
        },
    }
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Build an instance as `gen` would; Kronecker models return the implicit instance.
pub fn generate(model: Model, n: Option<usize>, k: usize, terms: usize, seed: u64) -> anyhow::Result<Instance> {
    let need_n = || n.ok_or_else(|| anyhow!("model {} needs --n", model.name()));
    Ok(match model {
        Model::Cluster1d => gen_cluster1d(need_n()?, seed)?,
        Model::Hypercube => gen_hamming_family(need_n()?, 1, HammingMode::Hypercube)?,
        Model::Hamming => gen_hamming_family(need_n()?, k, HammingMode::HammingK)?,
        Model::Complete => gen_hamming_family(need_n()?, 1, HammingMode::Complete)?,
        Model::Commuting4 => gen_commuting4(),
        Model::Random => gen_random_sparse(need_n()?, terms, seed)?,
        Model::Kronecker => gen_kronecker(KroneckerSpec::new(vec![default_initiator()], k)?),
    })
}

/// JSON for an instance: the instance schema, or the factor spec for implicit Kronecker
/// instances.
pub fn instance_text(inst: &Instance) -> anyhow::Result<String> {
    Ok(match &inst.kronecker {
        Some(spec) if inst.is_implicit() => spec.to_json()? + "\n",
        _ => instance_to_json(inst)? + "\n",
    })
}

/// Load an instance file or a Kronecker spec file, telling them apart by their keys.
pub fn load_any(path: &Path) -> anyhow::Result<(String, Instance)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inst = if value.get("factors").is_some() {
        gen_kronecker(KroneckerSpec::from_json(&text)?)
    } else {
        instance_from_json(&text).with_context(|| format!("loading {}", path.display()))?
    };
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into());
    Ok((id, inst))
}

/// Expand an implicit Kronecker instance into explicit terms; explicit instances pass through.
pub fn explicit(inst: Instance) -> anyhow::Result<Instance> {
    let Some(spec) = inst.kronecker.as_ref().filter(|_| inst.is_implicit()) else {
        return Ok(inst);
    };
    let mut op = spec.explicit_operator(KRONECKER_EXPAND_CAP)?;
    op.set_norm_upper_bound(Some(spec.pauli_l1()))?;
    let mut out = Instance::from_operator(op);
    out.metadata = inst.metadata.clone();
    Ok(out)
}

/// Backend config as used by the solver, so rounding sees the same Gibbs states.
fn effective_config(solver: &SolverArgs) -> BackendConfig {
    let mut cfg = solver.backend_config();
    cfg.stochastic.target_stderr = Some(solver.eps / 4.0);
    cfg
}

pub fn solve_with(inst: &Instance, set: ConstraintSet, solver: &SolverArgs) -> anyhow::Result<SolveReport> {
    let mut report = solve(inst, set, solver.eps, &solver.backend_config(), &solver.policy())?;
    if solver.no_timing {
        report.wall_time_s = None;
    }
    Ok(report)
}

/// Round `report.lambda_star` on the instance it came from.
pub fn round_with(
    inst: &Instance,
    set: ConstraintSet,
    report: &SolveReport,
    solver: &SolverArgs,
    opts: &RoundOpts,
) -> anyhow::Result<RoundedSolution> {
    let n = inst.num_qubits();
    let mut cfg = effective_config(solver);
    cfg.kind = report.backend_kind;
    let backend = build_backend(GibbsProblem::new(inst, set)?, &cfg)?;
    let rot = sample_rotation(n, solver.seed);
    let explicit = match opts.rounding {
        RoundingChoice::Auto => n <= DENSE_MAX_N,
        RoundingChoice::Explicit => true,
        RoundingChoice::Mc => false,
    };
    Ok(if explicit {
        round_explicit(backend.as_ref(), &report.lambda_star, &rot)?
    } else {
        energy_density_mc(backend.as_ref(), &report.lambda_star, &rot, opts.round_eps, opts.delta, solver.seed)?
    })
}

pub fn run_gen(args: &GenArgs) -> Result<(), Failure> {
    let inst = generate(args.model, args.n, args.k, args.terms, args.seed).map_err(Failure::Instance)?;
    let text = instance_text(&inst).map_err(Failure::Instance)?;
    emit(args.out.as_deref(), &text).map_err(Failure::Instance)
}

fn load_explicit(path: &Path) -> Result<(String, Instance), Failure> {
    let (id, inst) = load_any(path).map_err(Failure::Instance)?;
    Ok((id, explicit(inst).map_err(Failure::Instance)?))
}

pub fn run_solve(args: &SolveArgs) -> Result<(), Failure> {
    let (id, inst) = load_explicit(&args.instance)?;
    let report = solve_run(id, &inst, &args.constraints, &args.solver, args.round.then_some(&args.rounding))
        .map_err(Failure::Solver)?;
    emit(args.out.as_deref(), &to_json(&report).map_err(Failure::Solver)?).map_err(Failure::Solver)
}

/// Solve, and optionally round, one instance.
pub fn solve_run(
    id: String,
    inst: &Instance,
    mode: &ConstraintMode,
    solver: &SolverArgs,
    rounding: Option<&RoundOpts>,
) -> anyhow::Result<RunReport> {
    let set = resolve(inst, mode)?;
    let solve = solve_with(inst, set.clone(), solver)?;
    let mut report = RunReport {
        instance_id: id,
        model: inst.model().to_string(),
        seed: solver.seed,
        constraint_mode: mode.to_string(),
        solve,
        rounding: None,
        certificates: Vec::new(),
    };
    if let Some(opts) = rounding {
        attach_rounding(&mut report, inst, set, solver, opts)?;
    }
    Ok(report)
}

fn attach_rounding(
    report: &mut RunReport,
    inst: &Instance,
    set: ConstraintSet,
    solver: &SolverArgs,
    opts: &RoundOpts,
) -> anyhow::Result<()> {
    let rounded = round_with(inst, set, &report.solve, solver, opts)?;
    report.certificates.push(sandwich_report(&report.solve, &rounded)?);
    report.rounding = Some(rounded);
    Ok(())
}

fn read_report(path: &Path) -> anyhow::Result<RunReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing report {}", path.display()))
}

pub fn run_round(args: &RoundArgs) -> Result<(), Failure> {
    let (id, inst) = load_explicit(&args.instance)?;
    let report = (|| -> anyhow::Result<RunReport> {
        match &args.report {
            Some(p) => {
                let mut report = read_report(p)?;
                if report.solve.n != inst.num_qubits() {
                    bail!("report is for {} qubits, instance has {}", report.solve.n, inst.num_qubits());
                }
                let set = constraints_from_labels(report.solve.n, &report.solve.constraints)?;
                report.certificates.retain(|c| !matches!(c.payload, CertificatePayload::Sandwich { .. }));
                attach_rounding(&mut report, &inst, set, &args.solver, &args.rounding)?;
                Ok(report)
            }
            None => solve_run(id, &inst, &args.constraints, &args.solver, Some(&args.rounding)),
        }
    })()
    .map_err(Failure::Solver)?;
    emit(args.out.as_deref(), &to_json(&report).map_err(Failure::Solver)?).map_err(Failure::Solver)
}

pub fn run_sparsify(args: &SparsifyArgs) -> Result<(), Failure> {
    let (_, inst) = load_any(&args.instance).map_err(Failure::Instance)?;
    let text = (|| -> anyhow::Result<String> {
        let m = match args.samples {
            Some(m) => m,
            None => sample_count(inst.num_qubits(), inst.pauli_l1(), args.eps)?,
        };
        let out = sparsify_instance(&inst, m, args.seed)?;
        log::info!("sparsified with {m} samples into {} terms", out.op.len());
        instance_text(&out)
    })()
    .map_err(Failure::Solver)?;
    emit(args.out.as_deref(), &text).map_err(Failure::Solver)
}

pub fn run_certify(args: &CertifyArgs) -> Result<(), Failure> {
    let (id, inst) = load_explicit(&args.instance)?;
    let prior = match &args.report {
        Some(p) => Some(read_report(p).map_err(Failure::Instance)?),
        None => None,
    };
    let certs = certificates(&inst, args, prior.as_ref()).map_err(Failure::Solver)?;
    let text = match prior {
        Some(mut report) => {
            report.certificates.extend(certs);
            to_json(&report)
        }
        None => to_json(&CertifyOutput { instance_id: id, certificates: certs }),
    }
    .map_err(Failure::Solver)?;
    emit(args.out.as_deref(), &text).map_err(Failure::Solver)
}

fn certificates(inst: &Instance, args: &CertifyArgs, report: Option<&RunReport>) -> anyhow::Result<Vec<Certificate>> {
    let n = inst.num_qubits();
    let mut out = Vec::new();
    for kind in &args.kind {
        match kind {
            CertKind::Xi => out.push(xi_certificate(&resolve(inst, &args.constraints)?, args.v)?),
            CertKind::Stability => {
                let rank = diagonal_group(&inst.op).rank() as u32;
                out.push(stability_certificate(rank, args.eps, inst.norm_bound()));
            }
            CertKind::Purity => {
                let (set, lambda) = match report {
                    Some(r) => (constraints_from_labels(n, &r.solve.constraints)?, r.solve.lambda_star.clone()),
                    None => {
                        let set = ConstraintSet::empty(n);
                        let mut l = GibbsParams::zeros(0);
                        l.lambda_c = 1.0;
                        (set, l)
                    }
                };
                let backend = build_backend(GibbsProblem::new(inst, set)?, &BackendConfig::default())?;
                out.push(purity_uniqueness(backend.as_ref(), &lambda, &args.scales, args.delta)?);
            }
            CertKind::Qubo => out.push(qubo_certificate(&inst.op, inst.norm_bound())?),
            CertKind::Sandwich => {
                let r = report.ok_or_else(|| anyhow!("the sandwich certificate needs --report"))?;
                let rounded = r.rounding.as_ref().ok_or_else(|| anyhow!("the report has no rounding; run `round` first"))?;
                out.push(sandwich_report(&r.solve, rounded)?);
            }
        }
    }
    Ok(out)
}
