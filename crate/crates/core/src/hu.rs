//! Hamiltonian Updates: a feasibility loop over Gibbs states and the bisection driver
//! that brackets the relaxed GW value.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{
    build_backend, BackendConfig, BackendKind, ExpectationResult, GibbsBackend, GibbsParams, GibbsProblem,
};
use crate::instances::Instance;
use crate::pauli::ConstraintSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Move one multiplier by `eta`.
    Fixed,
    /// Move by the size of the violation.
    Adaptive,
}

impl FromStr for StepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(StepMode::Fixed),
            "adaptive" => Ok(StepMode::Adaptive),
            _ => Err(Error::InvalidArgument(format!("unknown step policy {s:?} (fixed|adaptive)"))),
        }
    }
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepMode::Fixed => "fixed",
            StepMode::Adaptive => "adaptive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Every update costs one unit of `T`.
    Iterations,
    /// Every update costs the square of its step.
    SquaredDecrement,
}

/// Step and budget rules of the feasibility loop. The objective is always checked
/// first; among violated constraints the largest `|μ_A|` wins, ties going to the
/// earliest constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HUPolicy {
    pub step_mode: StepMode,
    /// Fixed step; `None` means `ε/4`.
    pub eta: Option<f64>,
    pub budget_mode: BudgetMode,
    /// Budget `T`; `None` means `⌈16·n/ε²⌉`.
    pub max_iterations: Option<u64>,
}

impl Default for HUPolicy {
    fn default() -> Self {
        HUPolicy { step_mode: StepMode::Fixed, eta: None, budget_mode: BudgetMode::Iterations, max_iterations: None }
    }
}

impl HUPolicy {
    pub fn eta(&self, eps: f64) -> f64 {
        self.eta.unwrap_or(eps / 4.0)
    }

    pub fn budget(&self, n: usize, eps: f64) -> u64 {
        self.max_iterations.unwrap_or_else(|| (16.0 * n as f64 / (eps * eps)).ceil() as u64).max(1)
    }

    fn validate(&self, n: usize, eps: f64) -> Result<()> {
        if !(self.eta(eps) > 0.0) {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        if self.budget(n, eps) == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Feasible,
    Infeasible,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HUOutcome {
    pub status: Status,
    /// Multipliers at termination (the certificate when feasible).
    pub lambda: GibbsParams,
    pub final_expectations: ExpectationResult,
    pub iterations_used: u64,
    pub oracle_calls: u64,
    /// Evaluations whose standard error stayed above `ε/4`.
    pub tolerance_misses: u64,
}

/// Run the feasibility loop for target `mu`.
pub fn hu_feasibility(backend: &dyn GibbsBackend, eps: f64, mu: f64, policy: &HUPolicy) -> Result<HUOutcome> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("mu must be finite, got {mu}")));
    }
    let problem = backend.problem();
    policy.validate(problem.n, eps)?;
    let eta = policy.eta(eps);
    let total = policy.budget(problem.n, eps);
    let observables = problem.standard_observables();
    let mut lambda = GibbsParams::zeros(problem.num_constraints());
    let mut budget = total as f64;
    let mut iterations = 0u64;
    let mut oracle_calls = 0u64;
    let mut misses = 0u64;
    loop {
        let r = backend.expectations(&lambda, &observables)?;
        oracle_calls += 1;
        if let Some(bad) = r.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite expectation for observable {bad} at iteration {iterations}, λ_C = {}, |λ|_1 = {}",
                lambda.lambda_c,
                lambda.l1()
            )));
        }
        if r.max_stderr() > eps / 4.0 {
            misses += 1;
            log::warn!("expectation stderr {:.3e} above eps/4 at iteration {iterations}", r.max_stderr());
        }
        let mu_c = r.values[0];
        let worst = r.values[1..]
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > eps)
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, b)) if b.abs() >= v.abs() => best,
                _ => Some((i, v)),
            });
        if mu_c >= mu - eps && worst.is_none() {
            return Ok(HUOutcome {
                status: Status::Feasible,
                lambda,
                final_expectations: r,
                iterations_used: iterations,
                oracle_calls,
                tolerance_misses: misses,
            });
        }
        if budget <= 0.0 {
            return Ok(HUOutcome {
                status: Status::Infeasible,
                lambda,
                final_expectations: r,
                iterations_used: iterations,
                oracle_calls,
                tolerance_misses: misses,
            });
        }
        let step = if mu_c < mu - eps {
            let y = match policy.step_mode {
                StepMode::Fixed => eta,
                StepMode::Adaptive => mu - mu_c,
            };
            lambda.lambda_c += y;
            y
        } else {
            let (i, v) = worst.expect("a constraint is violated");
            let y = match policy.step_mode {
                StepMode::Fixed => eta,
                StepMode::Adaptive => v.abs(),
            };
            lambda.lambda_a[i] -= y * v.signum();
            y
        };
        iterations += 1;
        budget -= match policy.budget_mode {
            BudgetMode::Iterations => 1.0,
            BudgetMode::SquaredDecrement => step * step,
        };
    }
}

/// One bisection step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub mu: f64,
    pub status: Status,
    pub iterations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub eps: f64,
    /// Largest target certified feasible (or −1).
    pub gw_lower: f64,
    /// Smallest target found infeasible (or 1).
    pub gw_upper: f64,
    /// Multipliers of the last feasible run.
    pub lambda_star: GibbsParams,
    pub search_trace: Vec<SearchStep>,
    pub backend_kind: BackendKind,
    pub constraint_count: usize,
    pub constraints: Vec<String>,
    pub norm_c: f64,
    pub total_iterations: u64,
    pub oracle_calls: u64,
    pub tolerance_misses: u64,
    pub policy: HUPolicy,
    pub notes: Vec<String>,
    /// Omitted when reports must be reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
}

/// Bisect on `[-1, 1]` until the bracket is no wider than `eps`.
pub fn gw_binary_search(backend: &dyn GibbsBackend, eps: f64, policy: &HUPolicy) -> Result<SolveReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let start = Instant::now();
    let problem = backend.problem();
    let (mut lower, mut upper) = (-1.0f64, 1.0f64);
    let mut lambda_star = GibbsParams::zeros(problem.num_constraints());
    let mut trace = Vec::new();
    let (mut iters, mut calls, mut misses) = (0, 0, 0);
    while upper - lower > eps {
        let mu = 0.5 * (lower + upper);
        let out = hu_feasibility(backend, eps, mu, policy)?;
        log::info!("mu = {mu:.6}: {} after {} iterations", out.status, out.iterations_used);
        iters += out.iterations_used;
        calls += out.oracle_calls;
        misses += out.tolerance_misses;
        trace.push(SearchStep { mu, status: out.status, iterations: out.iterations_used });
        match out.status {
            Status::Feasible => {
                lower = mu;
                lambda_star = out.lambda;
            }
            Status::Infeasible => upper = mu,
        }
    }
    let mut notes = Vec::new();
    if policy.step_mode == StepMode::Adaptive {
        notes.push("adaptive constraint steps use |mu_A| as the step size".into());
    }
    if misses > 0 {
        notes.push(format!("{misses} evaluations had stderr above eps/4"));
    }
    Ok(SolveReport {
        n: problem.n,
        eps,
        gw_lower: lower,
        gw_upper: upper,
        lambda_star,
        search_trace: trace,
        backend_kind: backend.kind(),
        constraint_count: problem.num_constraints(),
        constraints: problem.constraints.labels(),
        norm_c: 1.0,
        total_iterations: iters,
        oracle_calls: calls,
        tolerance_misses: misses,
        policy: policy.clone(),
        notes,
        wall_time_s: Some(start.elapsed().as_secs_f64()),
    })
}

/// Build the backend for `inst` and bracket its relaxed GW value. The stochastic
/// backend is asked for standard errors of at most `ε/4` unless configured otherwise.
pub fn solve(
    inst: &Instance,
    constraints: ConstraintSet,
    eps: f64,
    cfg: &BackendConfig,
    policy: &HUPolicy,
) -> Result<SolveReport> {
    let mut cfg = cfg.clone();
    if cfg.stochastic.target_stderr.is_none() {
        cfg.stochastic.target_stderr = Some(eps / 4.0);
    }
    let problem = GibbsProblem::new(inst, constraints)?;
    let backend = build_backend(problem, &cfg)?;
    let mut report = gw_binary_search(backend.as_ref(), eps, policy)?;
    report.norm_c = inst.norm_bound();
    Ok(report)
}

/// `uGW = GW · 2^n · ‖C‖`.
pub fn gw_to_ugw(gw_value: f64, n: usize, norm_c: f64) -> f64 {
    gw_value * 2f64.powi(n as i32) * norm_c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::DenseBackend;
    use crate::pauli::PauliOperator;

    fn x_backend() -> DenseBackend {
        let op = PauliOperator::from_labels(&[("X", 1.0)]).unwrap();
        DenseBackend::new(GibbsProblem::from_objective(op, ConstraintSet::empty(1)).unwrap()).unwrap()
    }

    #[test]
    fn single_x_feasibility() {
        let b = x_backend();
        let p = HUPolicy::default();
        let ok = hu_feasibility(&b, 0.1, 0.5, &p).unwrap();
        assert_eq!(ok.status, Status::Feasible);
        assert!(ok.final_expectations.values[0] >= 0.4);
        assert!(ok.lambda.l1() <= p.eta(0.1) * ok.iterations_used as f64 + 1e-12);
        let no = hu_feasibility(&b, 0.1, 1.2, &p).unwrap();
        assert_eq!(no.status, Status::Infeasible);
        assert_eq!(no.iterations_used, p.budget(1, 0.1));
    }

    #[test]
    fn bisection_call_count() {
        let b = x_backend();
        let r = gw_binary_search(&b, 0.25, &HUPolicy::default()).unwrap();
        assert_eq!(r.search_trace.len(), 3);
        assert!(r.gw_upper - r.gw_lower <= 0.25);
        assert!(r.gw_lower <= r.gw_upper);
    }

    #[test]
    fn ugw_conversion() {
        assert_eq!(gw_to_ugw(1.0, 1, 1.0), 2.0);
        assert_eq!(gw_to_ugw(1.0, 2, 1.0), 4.0);
        assert_eq!(gw_to_ugw(0.0, 7, 3.0), 0.0);
    }

    #[test]
    fn adaptive_policy_reaches_same_verdict() {
        let b = x_backend();
        let p = HUPolicy { step_mode: StepMode::Adaptive, ..Default::default() };
        assert_eq!(hu_feasibility(&b, 0.1, 0.5, &p).unwrap().status, Status::Feasible);
        assert_eq!(hu_feasibility(&b, 0.1, 1.2, &p).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn squared_budget_runs_longer() {
        let b = x_backend();
        let p = HUPolicy { budget_mode: BudgetMode::SquaredDecrement, max_iterations: Some(1), ..Default::default() };
        // T = 1 with steps of 0.025 allows 1600 updates.
        let r = hu_feasibility(&b, 0.1, 1.2, &p).unwrap();
        assert!((1600..=1601).contains(&r.iterations_used), "{}", r.iterations_used);
    }
}
