//! Gibbs-state oracles for exponents `E(λ) = λ_C·C' + Σ_A λ_A Z_A`, with `σ(λ) ∝ exp(E)`.
//!
//! Three backends share one interface:
//! * [`DenseBackend`] diagonalises `E` exactly (small `n`).
//! * [`StochasticBackend`] applies `exp(E/2)` matrix-free with a fragmented Taylor series
//!   and estimates traces with Gaussian Hutchinson probes.
//! * [`CommutingBackend`] contracts products of commuting local exponentials site by site,
//!   which is exact and scales linearly in `n` for 1D instances.

mod commuting;
mod dense;
mod stochastic;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use commuting::CommutingBackend;
pub use dense::DenseBackend;
pub use stochastic::{hutchinson_trace, StochasticBackend};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::instances::{Block, Instance};
use crate::pauli::{ConstraintSet, PauliOperator, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Auto,
    Dense,
    Stochastic,
    Commuting1d,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Auto => "auto",
            BackendKind::Dense => "dense",
            BackendKind::Stochastic => "stochastic",
            BackendKind::Commuting1d => "commuting1d",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(BackendKind::Auto),
            "dense" => Ok(BackendKind::Dense),
            "stochastic" => Ok(BackendKind::Stochastic),
            "commuting1d" => Ok(BackendKind::Commuting1d),
            _ => Err(Error::InvalidArgument(format!("unknown backend {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationMode {
    /// Insert the observable into the contraction (exact).
    Insertion,
    /// Central differences of `log Z` in the corresponding multiplier.
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StochasticConfig {
    /// Initial number of Gaussian probes.
    pub num_probes: usize,
    /// Upper limit when escalating towards `target_stderr`.
    pub max_probes: usize,
    /// Largest standard error accepted; `None` means no escalation.
    pub target_stderr: Option<f64>,
    /// Taylor degree per fragment; `None` picks it from the exponent norm.
    pub taylor_degree: Option<usize>,
    /// Norm budget of each Taylor fragment.
    pub fragment_norm_cap: f64,
    /// Accuracy target used when choosing the Taylor degree.
    pub taylor_tolerance: f64,
    pub max_n: usize,
    pub seed: u64,
}

impl Default for StochasticConfig {
    fn default() -> Self {
        StochasticConfig {
            num_probes: 64,
            max_probes: 4096,
            target_stderr: None,
            taylor_degree: None,
            fragment_norm_cap: 1.0,
            taylor_tolerance: 1e-10,
            max_n: 24,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutingConfig {
    /// Largest number of states allowed on any cut of the contraction.
    pub bond_cap: usize,
    pub expectation_mode: ExpectationMode,
    pub fd_step: f64,
    /// Largest number of qubits in one merged exponent block.
    pub max_block_qubits: usize,
}

impl Default for CommutingConfig {
    fn default() -> Self {
        CommutingConfig { bond_cap: 64, expectation_mode: ExpectationMode::Insertion, fd_step: 1e-4, max_block_qubits: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// `auto` uses the dense backend up to this many qubits.
    pub dense_max_n: usize,
    pub stochastic: StochasticConfig,
    pub commuting: CommutingConfig,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Auto,
            dense_max_n: 10,
            stochastic: StochasticConfig::default(),
            commuting: CommutingConfig::default(),
        }
    }
}

/// Dual variables of the Gibbs ansatz; `lambda_a[i]` pairs with constraint `i` of the
/// active [`ConstraintSet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsParams {
    pub lambda_c: f64,
    pub lambda_a: Vec<f64>,
}

impl GibbsParams {
    pub fn zeros(num_constraints: usize) -> Self {
        GibbsParams { lambda_c: 0.0, lambda_a: vec![0.0; num_constraints] }
    }

    pub fn l1(&self) -> f64 {
        self.lambda_c.abs() + self.lambda_a.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn scaled(&self, s: f64) -> Self {
        GibbsParams { lambda_c: self.lambda_c * s, lambda_a: self.lambda_a.iter().map(|v| v * s).collect() }
    }

    /// Multipliers keyed by the constraint labels.
    pub fn to_map(&self, s: &ConstraintSet) -> BTreeMap<String, f64> {
        s.labels().into_iter().zip(self.lambda_a.iter().copied()).collect()
    }
}

/// What to take the expectation of.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// The normalized objective `C'`.
    Objective,
    /// Constraint `Z_A` by index into the active set.
    Constraint(usize),
    Pauli(PauliString),
    Operator(PauliOperator),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub values: Vec<f64>,
    /// Zero for exact backends.
    pub stderr: Vec<f64>,
    pub log_partition: f64,
}

impl ExpectationResult {
    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().fold(0.0, |m: f64, &v| m.max(v))
    }
}

/// A complex number stored as `value · exp(log_scale)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Amplitude {
    pub value: Complex64,
    pub log_scale: f64,
}

impl Amplitude {
    pub fn to_complex(self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    /// Sign of the real part with `sign(0) = +1`.
    pub fn re_sign(self) -> f64 {
        if self.value.re < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// A tensor product of single-qubit states; entry `j` is `(⟨0|ψ_j⟩, ⟨1|ψ_j⟩)` for qubit `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState(pub Vec<[Complex64; 2]>);

impl ProductState {
    pub fn basis(bits: &Bits) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        ProductState((0..bits.len()).map(|q| if bits.get(q) { [zero, one] } else { [one, zero] }).collect())
    }

    pub fn zeros(n: usize) -> Self {
        ProductState::basis(&Bits::zeros(n))
    }

    pub fn num_qubits(&self) -> usize {
        self.0.len()
    }

    /// Full state vector (basis index has qubit 0 as its most significant bit).
    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(1.0, 0.0)];
        for site in &self.0 {
            v = v.iter().flat_map(|a| [a * site[0], a * site[1]]).collect();
        }
        v
    }
}

/// A vector stored as `data · exp(log_scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledVector {
    pub data: Vec<Complex64>,
    pub log_scale: f64,
}

/// The fixed part of a Gibbs computation: normalized objective and active constraints.
#[derive(Clone, Debug)]
pub struct GibbsProblem {
    pub n: usize,
    pub objective: PauliOperator,
    pub constraints: ConstraintSet,
    /// Objective blocks (terms sharing a group tag), already normalized.
    pub blocks: Vec<Block>,
    pub commuting_1d: bool,
    pub real: bool,
}

impl GibbsProblem {
    pub fn new(inst: &Instance, constraints: ConstraintSet) -> Result<Self> {
        let objective = inst.normalized_objective()?;
        let n = objective.num_qubits();
        if constraints.n != n {
            return Err(Error::DimensionMismatch(n, constraints.n));
        }
        let scale = 1.0 / inst.norm_bound();
        let blocks = inst
            .blocks()
            .into_iter()
            .map(|b| Block { group: b.group, terms: b.terms.into_iter().map(|(p, c)| (p, c * scale)).collect() })
            .collect();
        Ok(GibbsProblem {
            n,
            real: objective.is_real_symmetric(),
            objective,
            constraints,
            blocks,
            commuting_1d: inst.flags.commuting_1d,
        })
    }

    /// Problem with a bare objective `C'` (used as-is, assumed normalized).
    pub fn from_objective(objective: PauliOperator, constraints: ConstraintSet) -> Result<Self> {
        let inst = Instance::from_operator(objective.clone());
        let mut p = GibbsProblem::new(&inst, constraints)?;
        p.objective = objective.clone();
        p.blocks = inst.blocks();
        Ok(p)
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn check_params(&self, lambda: &GibbsParams) -> Result<()> {
        if lambda.lambda_a.len() != self.constraints.len() {
            return Err(Error::InvalidArgument(format!(
                "{} multipliers for {} constraints",
                lambda.lambda_a.len(),
                self.constraints.len()
            )));
        }
        if !lambda.lambda_c.is_finite() || lambda.lambda_a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite multiplier".into()));
        }
        Ok(())
    }

    /// `E(λ)` as an explicit Pauli sum.
    pub fn exponent(&self, lambda: &GibbsParams) -> Result<PauliOperator> {
        self.check_params(lambda)?;
        let mut e = PauliOperator::new(self.n);
        if lambda.lambda_c != 0.0 {
            for (p, c) in self.objective.terms() {
                e.add_term(p.clone(), lambda.lambda_c * c)?;
            }
        }
        for (z, &l) in self.constraints.z_strings.iter().zip(&lambda.lambda_a) {
            if l != 0.0 {
                e.add_term(PauliString::z_string(z.clone()), l)?;
            }
        }
        Ok(e)
    }

    /// The observable as a Pauli sum.
    pub fn observable_operator(&self, obs: &Observable) -> Result<PauliOperator> {
        match obs {
            Observable::Objective => Ok(self.objective.clone()),
            Observable::Constraint(i) => {
                let z = self
                    .constraints
                    .z_strings
                    .get(*i)
                    .ok_or_else(|| Error::InvalidArgument(format!("constraint index {i} out of range")))?;
                PauliOperator::from_terms(self.n, [(PauliString::z_string(z.clone()), 1.0)])
            }
            Observable::Pauli(p) => PauliOperator::from_terms(self.n, [(p.clone(), 1.0)]),
            Observable::Operator(op) => {
                if op.num_qubits() != self.n {
                    return Err(Error::DimensionMismatch(self.n, op.num_qubits()));
                }
                Ok(op.clone())
            }
        }
    }

    /// Objective followed by every constraint.
    pub fn standard_observables(&self) -> Vec<Observable> {
        std::iter::once(Observable::Objective).chain((0..self.constraints.len()).map(Observable::Constraint)).collect()
    }
}

/// Interface shared by the three Gibbs engines.
pub trait GibbsBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn problem(&self) -> &GibbsProblem;

    /// `tr(B σ(λ))` for each observable, with `log tr exp(E(λ))`.
    fn expectations(&self, lambda: &GibbsParams, observables: &[Observable]) -> Result<ExpectationResult>;

    /// `log tr exp(E(λ))`.
    fn log_partition(&self, lambda: &GibbsParams) -> Result<f64>;

    /// `⟨bra| exp(E(λ_half)) |ket⟩` for each bra; unnormalized.
    fn amplitudes(&self, lambda_half: &GibbsParams, bras: &[Bits], ket: &ProductState) -> Result<Vec<Amplitude>>;

    /// `exp(E(λ)/2) v` for a full state vector.
    fn apply_exp_half(&self, _lambda: &GibbsParams, _v: &[Complex64]) -> Result<ScaledVector> {
        Err(Error::BackendCapability { backend: "commuting1d", reason: "full state vectors are not supported".into() })
    }
}

/// `tr σ² = Z(2λ)/Z(λ)²`.
pub fn purity(backend: &dyn GibbsBackend, lambda: &GibbsParams) -> Result<f64> {
    let l1 = backend.log_partition(lambda)?;
    let l2 = backend.log_partition(&lambda.scaled(2.0))?;
    Ok((l2 - 2.0 * l1).exp())
}

/// Resolve `auto` to a concrete backend kind.
pub fn select_backend(n: usize, commuting_1d: bool, cfg: &BackendConfig) -> Result<BackendKind> {
    match cfg.kind {
        BackendKind::Auto => {
            if commuting_1d {
                Ok(BackendKind::Commuting1d)
            } else if n <= cfg.dense_max_n {
                Ok(BackendKind::Dense)
            } else if n <= cfg.stochastic.max_n {
                Ok(BackendKind::Stochastic)
            } else {
                Err(Error::BackendCapability {
                    backend: "auto",
                    reason: format!("n = {n} is too large for dense/stochastic and the instance is not commuting 1D"),
                })
            }
        }
        k => Ok(k),
    }
}

/// Build the backend chosen by `cfg` for this problem.
pub fn build_backend(problem: GibbsProblem, cfg: &BackendConfig) -> Result<Box<dyn GibbsBackend>> {
    Ok(match select_backend(problem.n, problem.commuting_1d, cfg)? {
        BackendKind::Dense => Box::new(DenseBackend::new(problem)?),
        BackendKind::Stochastic => Box::new(StochasticBackend::new(problem, cfg.stochastic.clone())?),
        BackendKind::Commuting1d => Box::new(CommutingBackend::new(problem, cfg.commuting.clone())?),
        BackendKind::Auto => unreachable!("select_backend resolves auto"),
    })
}

/// `log(Σ e^{x_i})` without overflow.
pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_cluster1d, gen_hamming_family, HammingMode};

    #[test]
    fn routing() {
        let cfg = BackendConfig::default();
        assert_eq!(select_backend(50, true, &cfg).unwrap(), BackendKind::Commuting1d);
        assert_eq!(select_backend(12, false, &cfg).unwrap(), BackendKind::Stochastic);
        assert_eq!(select_backend(8, false, &cfg).unwrap(), BackendKind::Dense);
        assert!(select_backend(30, false, &cfg).is_err());
    }

    #[test]
    fn exponent_collects_terms() {
        let inst = gen_hamming_family(2, 1, HammingMode::Hypercube).unwrap();
        let s = ConstraintSet::single_sites(2);
        let p = GibbsProblem::new(&inst, s).unwrap();
        let e = p.exponent(&GibbsParams { lambda_c: 2.0, lambda_a: vec![0.5, 0.0] }).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e.coeff(&"XI".parse().unwrap()), 1.0);
        assert_eq!(e.coeff(&"ZI".parse().unwrap()), 0.5);
        assert!(p.exponent(&GibbsParams::zeros(1)).is_err());
    }

    #[test]
    fn problem_blocks_are_normalized() {
        let inst = gen_cluster1d(8, 1).unwrap();
        let p = GibbsProblem::new(&inst, ConstraintSet::empty(8)).unwrap();
        let total: f64 = p.blocks.iter().flat_map(|b| b.terms.iter()).map(|t| t.1.abs()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_vector() {
        let s = ProductState::basis(&Bits::parse("10").unwrap());
        let v = s.to_vector();
        assert_eq!(v[2], Complex64::new(1.0, 0.0));
        assert_eq!(v.iter().map(|c| c.norm_sqr()).sum::<f64>(), 1.0);
    }
}
