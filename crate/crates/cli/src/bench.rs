use std::time::Instant;

use anyhow::{bail, Context};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pauligw::instances::Instance;
use pauligw::sparsifier::{sample_count, sparsify_instance};

use crate::args::{BenchArgs, Model, SolverArgs};
use crate::commands::{emit, explicit, generate, solve_run};
use crate::constraints::ConstraintMode;
use crate::Failure;

/// One CSV row. Columns appear in field order; `status` is `ok` or the error message,
/// in which case the result columns are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub n: usize,
    #[serde(rename = "D")]
    pub d: u128,
    pub model: String,
    pub seed: u64,
    pub constraint_mode: String,
    pub constraint_count: Option<usize>,
    pub eps: f64,
    pub gw_lower: Option<f64>,
    pub gw_upper: Option<f64>,
    pub rounded_value: Option<f64>,
    pub rounded_stderr: Option<f64>,
    pub ratio: Option<f64>,
    pub backend: Option<String>,
    pub iterations: Option<u64>,
    pub oracle_calls: Option<u64>,
    pub wall_time_s: Option<f64>,
    pub status: String,
}

/// Parse `7..12` (inclusive) or `7,9,11`.
pub fn parse_sizes(s: &str) -> anyhow::Result<Vec<usize>> {
    let s = s.trim();
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().with_context(|| format!("bad range start in {s:?}"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().with_context(|| format!("bad range end in {s:?}"))?;
        (a..=b).collect()
    } else {
        s.split(',').map(|v| v.trim().parse().with_context(|| format!("bad size {v:?}"))).collect::<anyhow::Result<_>>()?
    };
    if out.is_empty() {
        bail!("empty size list {s:?}");
    }
    Ok(out)
}

/// Seed of repetition `rep` at size `size`: the first word of ChaCha8 stream
/// `size·2³² + rep` under the master seed.
pub fn row_seed(master: u64, size: usize, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((size as u64) << 32) | rep as u64);
    rng.next_u64()
}

struct BenchInstance {
    id: String,
    seed: u64,
    inst: anyhow::Result<Instance>,
}

fn build_instance(args: &BenchArgs, size: usize, seed: u64) -> anyhow::Result<Instance> {
    if args.model == Model::Kronecker {
        let implicit = generate(Model::Kronecker, None, size, 0, seed)?;
        let m = sample_count(implicit.num_qubits(), implicit.pauli_l1(), args.sparsify_eps)?;
        return Ok(sparsify_instance(&implicit, m, seed)?);
    }
    explicit(generate(args.model, Some(size), args.k, args.terms, seed)?)
}

fn run_row(b: &BenchInstance, mode: &ConstraintMode, args: &BenchArgs) -> BenchRow {
    let n = b.inst.as_ref().map(Instance::num_qubits).unwrap_or(0);
    let mut row = BenchRow {
        instance_id: b.id.clone(),
        n,
        d: 1u128 << n,
        model: args.model.name().to_string(),
        seed: b.seed,
        constraint_mode: mode.to_string(),
        constraint_count: None,
        eps: args.solver.eps,
        gw_lower: None,
        gw_upper: None,
        rounded_value: None,
        rounded_stderr: None,
        ratio: None,
        backend: None,
        iterations: None,
        oracle_calls: None,
        wall_time_s: None,
        status: "ok".into(),
    };
    let inst = match &b.inst {
        Ok(i) => i,
        Err(e) => {
            row.status = format!("instance error: {e:#}");
            return row;
        }
    };
    let solver = SolverArgs { seed: b.seed, ..args.solver.clone() };
    let start = Instant::now();
    match solve_run(b.id.clone(), inst, mode, &solver, Some(&args.rounding)) {
        Ok(r) => {
            let s = &r.solve;
            let rounded = r.rounding.as_ref().expect("rounding requested");
            row.constraint_count = Some(s.constraint_count);
            row.gw_lower = Some(s.gw_lower);
            row.gw_upper = Some(s.gw_upper);
            row.rounded_value = Some(rounded.energy_density);
            row.rounded_stderr = Some(rounded.energy_stderr);
            row.ratio = (s.gw_upper != 0.0).then(|| rounded.energy_density / s.gw_upper);
            row.backend = Some(s.backend_kind.to_string());
            row.iterations = Some(s.total_iterations);
            row.oracle_calls = Some(s.oracle_calls);
            if !args.solver.no_timing {
                row.wall_time_s = Some(start.elapsed().as_secs_f64());
            }
        }
        Err(e) => row.status = format!("solver error: {e:#}"),
    }
    row
}

/// All rows of a sweep, in (size, repetition, mode) order.
pub fn bench_rows(args: &BenchArgs) -> anyhow::Result<Vec<BenchRow>> {
    let sizes = parse_sizes(&args.sizes)?;
    if args.modes.is_empty() || args.reps == 0 {
        bail!("a sweep needs at least one constraint mode and one repetition");
    }
    let label = if args.model == Model::Kronecker { "k" } else { "n" };
    let instances: Vec<BenchInstance> = sizes
        .iter()
        .flat_map(|&size| (0..args.reps).map(move |rep| (size, rep)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(size, rep)| {
            let seed = row_seed(args.solver.seed, size, rep);
            BenchInstance {
                id: format!("{}_{label}{size}_r{rep}", args.model.name()),
                seed,
                inst: build_instance(args, size, seed),
            }
        })
        .collect();
    let jobs: Vec<(&BenchInstance, &ConstraintMode)> =
        instances.iter().flat_map(|b| args.modes.iter().map(move |m| (b, m))).collect();
    Ok(jobs.into_par_iter().map(|(b, m)| run_row(b, m, args)).collect())
}

pub fn to_csv(rows: &[BenchRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn run_bench(args: &BenchArgs) -> Result<(), Failure> {
    let rows = bench_rows(args).map_err(Failure::Instance)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        log::warn!("{failed} of {} bench rows failed", rows.len());
    }
    let text = to_csv(&rows).map_err(Failure::Solver)?;
    emit(args.out.as_deref(), &text).map_err(Failure::Solver)
}
