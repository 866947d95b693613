//! Importance-sampling sparsification: draw Paulis with probability `|c_P| / ‖C‖_{P,ℓ1}`
//! and average the unbiased estimators `‖C‖_{P,ℓ1} · sign(c_P) · P`.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::instances::{Instance, InstanceFlags, KroneckerSpec};
use crate::pauli::{PauliOperator, PauliString};

/// A source of `(P, sign(c_P))` draws from the ℓ1-weighted Pauli distribution.
pub trait TermSampler {
    fn num_qubits(&self) -> usize;
    /// Exact Pauli ℓ1 norm of the source operator.
    fn l1(&self) -> f64;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (PauliString, f64);
}

/// Categorical sampler over an explicit term list.
#[derive(Clone, Debug)]
pub struct ExplicitSampler {
    n: usize,
    terms: Vec<(PauliString, f64)>,
    dist: WeightedIndex<f64>,
    l1: f64,
}

impl ExplicitSampler {
    pub fn new(op: &PauliOperator) -> Result<Self> {
        if op.is_empty() {
            return Err(Error::InvalidArgument("cannot sample from the zero operator".into()));
        }
        let terms: Vec<(PauliString, f64)> = op.terms().map(|(p, c)| (p.clone(), c)).collect();
        let dist = WeightedIndex::new(terms.iter().map(|t| t.1.abs()))
            .map_err(|e| Error::InvalidArgument(format!("bad weights: {e}")))?;
        Ok(ExplicitSampler { n: op.num_qubits(), terms, dist, l1: op.pauli_l1() })
    }
}

impl TermSampler for ExplicitSampler {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn l1(&self) -> f64 {
        self.l1
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (PauliString, f64) {
        let (p, c) = &self.terms[self.dist.sample(rng)];
        (p.clone(), c.signum())
    }
}

/// Product-form sampler: each factor is drawn independently from its own marginal.
#[derive(Clone, Debug)]
pub struct KronSampler {
    factors: Vec<ExplicitSampler>,
    n: usize,
    l1: f64,
}

/// Build the product sampler for a Kronecker spec.
pub fn kron_sampler(spec: &KroneckerSpec) -> Result<KronSampler> {
    let factors = spec.unrolled().map(ExplicitSampler::new).collect::<Result<Vec<_>>>()?;
    Ok(KronSampler { factors, n: spec.total_qubits(), l1: spec.pauli_l1() })
}

impl KronSampler {
    /// Draw only the per-factor term indices (used to check marginals).
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.factors.iter().map(|f| f.dist.sample(rng)).collect()
    }
}

impl TermSampler for KronSampler {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn l1(&self) -> f64 {
        self.l1
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (PauliString, f64) {
        let mut x = Bits::zeros(self.n);
        let mut z = Bits::zeros(self.n);
        let mut sign = 1.0;
        let mut offset = 0;
        for f in &self.factors {
            let (p, c) = &f.terms[f.dist.sample(rng)];
            for q in 0..f.n {
                let (xb, zb) = p.site(q);
                x.set(offset + q, xb);
                z.set(offset + q, zb);
            }
            sign *= c.signum();
            offset += f.n;
        }
        (PauliString::from_bits(x, z).expect("equal lengths"), sign)
    }
}

/// `⌊2·k·l1²/(ε²·1.5)⌋` samples for `k` total qubits.
pub fn sample_count(k_qubits: usize, l1: f64, eps: f64) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    Ok((2.0 * k_qubits as f64 * l1 * l1 / (eps * eps) / 1.5).floor() as u64)
}

/// Average of `m` single-term estimators; repeated draws merge.
pub fn sparsify<S: TermSampler, R: Rng + ?Sized>(s: &S, m: u64, rng: &mut R) -> Result<PauliOperator> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mut counts: BTreeMap<PauliString, i64> = BTreeMap::new();
    for _ in 0..m {
        let (p, sign) = s.sample(rng);
        *counts.entry(p).or_default() += sign as i64;
    }
    let w = s.l1() / m as f64;
    PauliOperator::from_terms(
        s.num_qubits(),
        counts.into_iter().filter(|(_, c)| *c != 0).map(|(p, c)| (p, c as f64 * w)),
    )
}

/// `C̃ / ‖C̃‖_{P,ℓ1}`.
pub fn renormalize_sparsified(op: &PauliOperator) -> Result<PauliOperator> {
    let l1 = op.pauli_l1();
    if l1 <= 0.0 {
        return Err(Error::InvalidArgument("cannot renormalize the zero operator".into()));
    }
    let mut out = op.scaled(1.0 / l1);
    out.set_norm_upper_bound(None)?;
    Ok(out)
}

/// Sparsify an instance (explicit or Kronecker) with a seeded ChaCha8 stream and return
/// the renormalized explicit instance.
pub fn sparsify_instance(inst: &Instance, m: u64, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = match &inst.kronecker {
        Some(spec) if inst.is_implicit() => sparsify(&kron_sampler(spec)?, m, &mut rng)?,
        _ => sparsify(&ExplicitSampler::new(&inst.op)?, m, &mut rng)?,
    };
    let op = renormalize_sparsified(&raw)?;
    let mut metadata = inst.metadata.clone();
    metadata.insert("model".into(), format!("{}_sparsified", inst.model()));
    metadata.insert("samples".into(), m.to_string());
    metadata.insert("source_l1".into(), format!("{}", inst.pauli_l1()));
    metadata.insert("sparsified_l1".into(), format!("{}", raw.pauli_l1()));
    let mut out = Instance::from_operator(op);
    out.flags = InstanceFlags { real_symmetric: out.op.is_real_symmetric(), ..Default::default() };
    out.seed = Some(seed);
    out.metadata = metadata;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::default_initiator;
    use approx::assert_relative_eq;

    #[test]
    fn sample_count_formula() {
        assert_eq!(sample_count(1, 1.0, 1.0).unwrap(), 1);
        let t = 1.3f64;
        assert_eq!(sample_count(3, t, 0.5).unwrap(), (16.0 * t * t).floor() as u64);
        assert!(sample_count(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_term_source_is_reproduced() {
        let op = PauliOperator::from_labels(&[("XZ", -0.7)]).unwrap();
        let s = ExplicitSampler::new(&op).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [1, 5, 17] {
            assert_eq!(sparsify(&s, m, &mut rng).unwrap(), op);
        }
    }

    #[test]
    fn l1_never_grows() {
        let op = PauliOperator::from_labels(&[("XI", 0.5), ("IZ", -0.3), ("YY", 0.2)]).unwrap();
        let s = ExplicitSampler::new(&op).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            assert!(sparsify(&s, 7, &mut rng).unwrap().pauli_l1() <= op.pauli_l1() + 1e-12);
        }
    }

    #[test]
    fn renormalize_is_idempotent() {
        let op = crate::instances::gen_commuting4().op.scaled(7.0);
        let r = renormalize_sparsified(&op).unwrap();
        for (_, c) in r.terms() {
            assert_relative_eq!(c, 0.125, epsilon = 1e-15);
        }
        assert_eq!(renormalize_sparsified(&r).unwrap(), r);
    }

    #[test]
    fn kron_marginals_within_three_sigma() {
        let spec = KroneckerSpec::new(vec![default_initiator()], 2).unwrap();
        let s = kron_sampler(&spec).unwrap();
        assert_relative_eq!(s.l1(), spec.pauli_l1(), epsilon = 1e-12);
        let d = &spec.decompositions()[0];
        let probs: Vec<f64> = d.terms().map(|(_, c)| c.abs() / d.pauli_l1()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let mut counts = vec![vec![0usize; probs.len()]; 2];
        for _ in 0..draws {
            for (f, i) in s.sample_indices(&mut rng).into_iter().enumerate() {
                counts[f][i] += 1;
            }
        }
        for row in &counts {
            for (c, p) in row.iter().zip(&probs) {
                let sigma = (p * (1.0 - p) / draws as f64).sqrt();
                assert!((*c as f64 / draws as f64 - p).abs() < 3.0 * sigma + 1e-12);
            }
        }
    }
}
