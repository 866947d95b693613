use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{
    log_sum_exp, Amplitude, BackendKind, ExpectationResult, GibbsBackend, GibbsParams, GibbsProblem, Observable,
    ProductState, ScaledVector, StochasticConfig,
};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::pauli::PauliOperator;

const PAR_THRESHOLD: usize = 1 << 14;

/// Matrix-free Pauli sum, with terms bucketed by their x-mask.
pub(crate) struct Matvec {
    dim: usize,
    buckets: Vec<(u64, Vec<(u64, Complex64)>)>,
    l1: f64,
}

impl Matvec {
    pub(crate) fn new(op: &PauliOperator) -> Self {
        let mut map: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
        for (p, c) in op.terms() {
            let m = p.masks();
            map.entry(m.x).or_default().push((m.z, m.y_phase.to_complex() * c));
        }
        Matvec { dim: 1 << op.num_qubits(), buckets: map.into_iter().collect(), l1: op.pauli_l1() }
    }

    #[inline]
    fn row(&self, b: usize, v: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, terms) in &self.buckets {
            let c = b ^ *x as usize;
            let vc = v[c];
            let mut s = Complex64::new(0.0, 0.0);
            for (z, coef) in terms {
                // ⟨b|P|c⟩ = i^{#Y} (−1)^{|z ∧ c|}
                if (*z as usize & c).count_ones() & 1 == 1 {
                    s -= coef;
                } else {
                    s += coef;
                }
            }
            acc += s * vc;
        }
        acc
    }

    /// `out = A v`, gathering each output entry independently.
    pub(crate) fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        if self.dim >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(|(b, o)| *o = self.row(b, v));
        } else {
            for (b, o) in out.iter_mut().enumerate() {
                *o = self.row(b, v);
            }
        }
    }

    /// `⟨v|A|v⟩`, real for Hermitian `A`.
    fn quadratic_form(&self, v: &[Complex64], scratch: &mut [Complex64]) -> f64 {
        self.apply(v, scratch);
        v.iter().zip(scratch.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Taylor degree for a total exponent norm `h` at accuracy `tol`.
fn default_degree(h: f64, tol: f64) -> usize {
    let k = ((h.max(1e-300) / tol).ln() / std::f64::consts::LN_2).ceil();
    if k.is_finite() && k > 0.0 {
        8usize.max(k as usize + 8)
    } else {
        8
    }
}

/// Matrix-free Gibbs oracle: fragmented Taylor series plus Hutchinson probes.
pub struct StochasticBackend {
    problem: GibbsProblem,
    cfg: StochasticConfig,
}

struct ProbeStats {
    /// `log ‖φ_l‖²` per probe.
    log_w: Vec<f64>,
    /// `⟨φ_l|B|φ_l⟩ / ‖φ_l‖²` per probe and observable.
    ratios: Vec<Vec<f64>>,
}

impl StochasticBackend {
    pub fn new(problem: GibbsProblem, cfg: StochasticConfig) -> Result<Self> {
        if problem.n > cfg.max_n {
            return Err(Error::BackendCapability {
                backend: "stochastic",
                reason: format!("n = {} exceeds cap {}", problem.n, cfg.max_n),
            });
        }
        if cfg.taylor_degree == Some(0) {
            return Err(Error::InvalidArgument("Taylor degree must be at least 1".into()));
        }
        if cfg.num_probes < 2 || cfg.fragment_norm_cap <= 0.0 {
            return Err(Error::InvalidArgument("need at least two probes and a positive fragment cap".into()));
        }
        Ok(StochasticBackend { problem, cfg })
    }

    pub fn config(&self) -> &StochasticConfig {
        &self.cfg
    }

    /// `exp(t·E) v` by `r` Taylor fragments, renormalising after each one.
    fn exp_apply(&self, a: &Matvec, t: f64, v: &[Complex64]) -> ScaledVector {
        let h = t.abs() * a.l1;
        let r = ((h / self.cfg.fragment_norm_cap).ceil() as usize).max(1);
        let kappa = self.cfg.taylor_degree.unwrap_or_else(|| default_degree(h, self.cfg.taylor_tolerance));
        let step = t / r as f64;
        let mut w: Vec<Complex64> = v.to_vec();
        let mut term = vec![Complex64::new(0.0, 0.0); v.len()];
        let mut next = vec![Complex64::new(0.0, 0.0); v.len()];
        let mut log_scale = 0.0;
        for _ in 0..r {
            term.copy_from_slice(&w);
            for j in 1..=kappa {
                a.apply(&term, &mut next);
                let f = step / j as f64;
                for (tt, nn) in term.iter_mut().zip(&next) {
                    *tt = nn * f;
                }
                for (ww, tt) in w.iter_mut().zip(&term) {
                    *ww += tt;
                }
            }
            let nrm = norm(&w);
            if nrm > 0.0 && nrm.is_finite() {
                for x in w.iter_mut() {
                    *x /= nrm;
                }
                log_scale += nrm.ln();
            }
        }
        ScaledVector { data: w, log_scale }
    }

    fn probe(&self, l: usize) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(l as u64);
        let d = 1usize << self.problem.n;
        (0..d).map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0)).collect()
    }

    fn run_probes(&self, e: &Matvec, obs: &[Matvec], range: std::ops::Range<usize>) -> ProbeStats {
        let per: Vec<(f64, Vec<f64>)> = range
            .into_par_iter()
            .map(|l| {
                let g = self.probe(l);
                let phi = self.exp_apply(e, 0.5, &g);
                let nn = norm(&phi.data);
                let mut scratch = vec![Complex64::new(0.0, 0.0); phi.data.len()];
                let r = obs.iter().map(|o| o.quadratic_form(&phi.data, &mut scratch) / (nn * nn)).collect();
                (2.0 * (phi.log_scale + nn.ln()), r)
            })
            .collect();
        let (log_w, ratios) = per.into_iter().unzip();
        ProbeStats { log_w, ratios }
    }

    fn estimate(&self, lambda: &GibbsParams, ops: &[PauliOperator]) -> Result<ExpectationResult> {
        let e = Matvec::new(&self.problem.exponent(lambda)?);
        let obs: Vec<Matvec> = ops.iter().map(Matvec::new).collect();
        let mut stats = self.run_probes(&e, &obs, 0..self.cfg.num_probes);
        loop {
            let res = summarize(&stats, ops.len());
            let done = match self.cfg.target_stderr {
                Some(t) => res.max_stderr() <= t || stats.log_w.len() >= self.cfg.max_probes,
                None => true,
            };
            if done {
                if res.values.iter().any(|v| !v.is_finite()) || !res.log_partition.is_finite() {
                    return Err(Error::Numerical("stochastic estimate is not finite".into()));
                }
                return Ok(res);
            }
            let have = stats.log_w.len();
            let want = (2 * have).min(self.cfg.max_probes);
            let more = self.run_probes(&e, &obs, have..want);
            stats.log_w.extend(more.log_w);
            stats.ratios.extend(more.ratios);
        }
    }
}

/// Ratio estimate `Σ W_l b_l / Σ W_l` with jackknife errors.
fn summarize(stats: &ProbeStats, num_obs: usize) -> ExpectationResult {
    let big_l = stats.log_w.len();
    let m = stats.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = stats.log_w.iter().map(|x| (x - m).exp()).collect();
    let sw: f64 = w.iter().sum();
    let mut values = Vec::with_capacity(num_obs);
    let mut stderr = Vec::with_capacity(num_obs);
    for o in 0..num_obs {
        let sv: f64 = w.iter().zip(&stats.ratios).map(|(wi, r)| wi * r[o]).sum();
        let est = sv / sw;
        let loo: Vec<f64> = (0..big_l)
            .map(|l| {
                let d = sw - w[l];
                if d > 0.0 {
                    (sv - w[l] * stats.ratios[l][o]) / d
                } else {
                    est
                }
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / big_l as f64;
        let var = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (big_l as f64 - 1.0) / big_l as f64;
        values.push(est);
        stderr.push(var.sqrt());
    }
    let log_partition = log_sum_exp(stats.log_w.iter().copied()) - (big_l as f64).ln();
    ExpectationResult { values, stderr, log_partition }
}

/// Gaussian Hutchinson estimate of `tr(A)`: returns `(mean, standard error)`.
pub fn hutchinson_trace(op: &PauliOperator, probes: usize, seed: u64) -> Result<(f64, f64)> {
    if op.num_qubits() > 24 || probes < 2 {
        return Err(Error::InvalidArgument("need n <= 24 and at least two probes".into()));
    }
    let a = Matvec::new(op);
    let d = 1usize << op.num_qubits();
    let samples: Vec<f64> = (0..probes)
        .into_par_iter()
        .map(|l| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(l as u64);
            let g: Vec<Complex64> = (0..d).map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0)).collect();
            let mut s = vec![Complex64::new(0.0, 0.0); d];
            a.quadratic_form(&g, &mut s)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / probes as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (probes as f64 - 1.0);
    Ok((mean, (var / probes as f64).sqrt()))
}

impl GibbsBackend for StochasticBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Stochastic
    }

    fn problem(&self) -> &GibbsProblem {
        &self.problem
    }

    fn expectations(&self, lambda: &GibbsParams, observables: &[Observable]) -> Result<ExpectationResult> {
        let ops = observables
            .iter()
            .map(|o| self.problem.observable_operator(o))
            .collect::<Result<Vec<_>>>()?;
        self.estimate(lambda, &ops)
    }

    fn log_partition(&self, lambda: &GibbsParams) -> Result<f64> {
        Ok(self.estimate(lambda, &[])?.log_partition)
    }

    fn amplitudes(&self, lambda_half: &GibbsParams, bras: &[Bits], ket: &ProductState) -> Result<Vec<Amplitude>> {
        if ket.num_qubits() != self.problem.n {
            return Err(Error::DimensionMismatch(self.problem.n, ket.num_qubits()));
        }
        let e = Matvec::new(&self.problem.exponent(lambda_half)?);
        let u = self.exp_apply(&e, 1.0, &ket.to_vector());
        bras.iter()
            .map(|b| {
                if b.len() != self.problem.n {
                    return Err(Error::DimensionMismatch(self.problem.n, b.len()));
                }
                Ok(Amplitude { value: u.data[b.index_mask() as usize], log_scale: u.log_scale })
            })
            .collect()
    }

    fn apply_exp_half(&self, lambda: &GibbsParams, v: &[Complex64]) -> Result<ScaledVector> {
        let d = 1usize << self.problem.n;
        if v.len() != d {
            return Err(Error::DimensionMismatch(d, v.len()));
        }
        let e = Matvec::new(&self.problem.exponent(lambda)?);
        Ok(self.exp_apply(&e, 0.5, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::operator_dense;
    use crate::gibbs::DenseBackend;
    use crate::pauli::{ConstraintSet, PauliString};
    use approx::assert_relative_eq;

    fn problem(op: PauliOperator) -> GibbsProblem {
        let n = op.num_qubits();
        GibbsProblem::from_objective(op, ConstraintSet::empty(n)).unwrap()
    }

    #[test]
    fn matvec_matches_dense() {
        let op = PauliOperator::from_labels(&[("XYZ", 0.3), ("YIY", -0.4), ("ZZI", 0.2), ("IXI", 0.1)]).unwrap();
        let dm = operator_dense(&op).unwrap();
        let v: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.1)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); 8];
        Matvec::new(&op).apply(&v, &mut out);
        let want = &dm * nalgebra::DVector::from_column_slice(&v);
        for i in 0..8 {
            assert!((out[i] - want[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn exp_half_of_x_closed_form() {
        let op = PauliOperator::from_labels(&[("XII", 1.0)]).unwrap();
        let b = StochasticBackend::new(problem(op), StochasticConfig::default()).unwrap();
        let theta = 1.3;
        let lam = GibbsParams { lambda_c: theta, lambda_a: vec![] };
        let v = ProductState::zeros(3).to_vector();
        let out = b.apply_exp_half(&lam, &v).unwrap();
        let s = out.log_scale.exp();
        assert_relative_eq!(out.data[0].re * s, (theta / 2.0).cosh(), epsilon = 1e-10);
        assert_relative_eq!(out.data[4].re * s, (theta / 2.0).sinh(), epsilon = 1e-10);
        let zero = b.apply_exp_half(&GibbsParams::zeros(0), &v).unwrap();
        assert_eq!(zero.data, v);
    }

    #[test]
    fn exp_half_matches_dense_on_random_sparse() {
        use rand::Rng;
        let n = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut op = PauliOperator::new(n);
        while op.len() < 12 {
            let x = Bits::from_index_mask(n, rng.random_range(0..1u64 << n));
            let z = Bits::from_index_mask(n, rng.random_range(0..1u64 << n));
            let p = PauliString::from_bits(x, z).unwrap();
            if !p.is_identity() {
                op.add_term(p, rng.random_range(-1.0..1.0)).unwrap();
            }
        }
        let op = op.scaled(8.0 / op.pauli_l1());
        let cfg = StochasticConfig { taylor_degree: Some(16), ..Default::default() };
        let p = GibbsProblem::from_objective(op, ConstraintSet::empty(n)).unwrap();
        let sb = StochasticBackend::new(p.clone(), cfg).unwrap();
        let db = DenseBackend::new(p).unwrap();
        let lam = GibbsParams { lambda_c: 1.0, lambda_a: vec![] };
        let v: Vec<Complex64> = (0..1usize << n).map(|i| Complex64::new(((i * 37) % 11) as f64 - 5.0, 0.0)).collect();
        let a = sb.apply_exp_half(&lam, &v).unwrap();
        let b = db.apply_exp_half(&lam, &v).unwrap();
        let (sa, sbb) = (a.log_scale.exp(), b.log_scale.exp());
        let scale = b.data.iter().map(|c| c.norm()).fold(0.0, f64::max) * sbb;
        let err = a.data.iter().zip(&b.data).map(|(x, y)| (x * sa - y * sbb).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6 * scale.max(1.0), "err {err}");
    }

    #[test]
    fn hutchinson_identity_trace() {
        let op = PauliOperator::from_labels(&[("III", 1.0)]).unwrap();
        let (mean, se) = hutchinson_trace(&op, 10_000, 7).unwrap();
        assert!((mean - 8.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn escalation_reaches_target() {
        let op = PauliOperator::from_labels(&[("XIII", 0.5), ("ZZII", 0.5)]).unwrap();
        let cfg = StochasticConfig { num_probes: 8, target_stderr: Some(0.01), ..Default::default() };
        let b = StochasticBackend::new(problem(op), cfg).unwrap();
        let r = b.expectations(&GibbsParams { lambda_c: 1.0, lambda_a: vec![] }, &[Observable::Objective]).unwrap();
        assert!(r.max_stderr() <= 0.01);
    }
}
