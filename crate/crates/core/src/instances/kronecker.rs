use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Instance, InstanceFlags};
use crate::bits::Bits;
use crate::dense::{decompose_dense, kron, symmetric_norm};
use crate::error::{Error, Result};
use crate::pauli::{PauliOperator, PauliString};

/// A tensor product `F_1 ⊗ F_2 ⊗ ...` of small real symmetric factors, with the factor
/// list repeated `repetitions` times.
#[derive(Clone, Debug)]
pub struct KroneckerSpec {
    factors: Vec<DMatrix<f64>>,
    repetitions: usize,
    decompositions: Vec<PauliOperator>,
}

impl PartialEq for KroneckerSpec {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors && self.repetitions == other.repetitions
    }
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    factors: Vec<Vec<Vec<f64>>>,
    repetitions: usize,
}

impl KroneckerSpec {
    pub fn new(factors: Vec<DMatrix<f64>>, repetitions: usize) -> Result<Self> {
        if factors.is_empty() || repetitions == 0 {
            return Err(Error::InvalidArgument("Kronecker spec needs at least one factor".into()));
        }
        let decompositions = factors.iter().map(decompose_dense).collect::<Result<Vec<_>>>()?;
        Ok(KroneckerSpec { factors, repetitions, decompositions })
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    /// Pauli expansion of each distinct factor.
    pub fn decompositions(&self) -> &[PauliOperator] {
        &self.decompositions
    }

    /// Factor expansions in tensor order, with repetitions unrolled.
    pub fn unrolled(&self) -> impl Iterator<Item = &PauliOperator> {
        (0..self.repetitions).flat_map(move |_| self.decompositions.iter())
    }

    pub fn total_qubits(&self) -> usize {
        self.repetitions * self.decompositions.iter().map(PauliOperator::num_qubits).sum::<usize>()
    }

    /// Product of the factor ℓ1 norms.
    pub fn pauli_l1(&self) -> f64 {
        self.unrolled().map(PauliOperator::pauli_l1).product()
    }

    /// Dense product matrix (total qubits at most 12).
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        if self.total_qubits() > 12 {
            return Err(Error::BackendCapability {
                backend: "dense",
                reason: format!("Kronecker product on {} qubits", self.total_qubits()),
            });
        }
        let mut out = DMatrix::from_element(1, 1, 1.0);
        for _ in 0..self.repetitions {
            for f in &self.factors {
                out = kron(&out, f);
            }
        }
        Ok(out)
    }

    /// Full term-by-term expansion; the term count is the product of factor term counts.
    pub fn explicit_operator(&self, max_terms: usize) -> Result<PauliOperator> {
        let count: u128 = self.unrolled().map(|d| d.len() as u128).product();
        if count > max_terms as u128 {
            return Err(Error::CapExceeded { what: "Kronecker expansion", needed: count, cap: max_terms as u128 });
        }
        let n = self.total_qubits();
        let mut acc: Vec<(Vec<(bool, bool)>, f64)> = vec![(Vec::new(), 1.0)];
        for d in self.unrolled() {
            let k = d.num_qubits();
            let mut next = Vec::with_capacity(acc.len() * d.len());
            for (sites, c) in &acc {
                for (p, pc) in d.terms() {
                    let mut s = sites.clone();
                    s.extend((0..k).map(|q| p.site(q)));
                    next.push((s, c * pc));
                }
            }
            acc = next;
        }
        let mut op = PauliOperator::new(n);
        for (sites, c) in acc {
            let x = Bits::from_bools(&sites.iter().map(|s| s.0).collect::<Vec<_>>());
            let z = Bits::from_bools(&sites.iter().map(|s| s.1).collect::<Vec<_>>());
            op.add_term(PauliString::from_bits(x, z)?, c)?;
        }
        Ok(op)
    }

    pub fn to_json(&self) -> Result<String> {
        let f = SpecFile {
            factors: self
                .factors
                .iter()
                .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
                .collect(),
            repetitions: self.repetitions,
        };
        Ok(serde_json::to_string_pretty(&f)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: SpecFile = serde_json::from_str(s)?;
        let mut factors = Vec::new();
        for rows in f.factors {
            let d = rows.len();
            if rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidInstance("Kronecker factor is not square".into()));
            }
            factors.push(DMatrix::from_row_iterator(d, d, rows.into_iter().flatten()));
        }
        KroneckerSpec::new(factors, f.repetitions)
    }
}

/// The 4×4 initiator scaled to unit operator norm.
pub fn default_initiator() -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(4, 4, &[2., 1., 1., 1., 1., 2., 1., 0., 1., 1., 2., 0., 1., 0., 0., 2.]);
    let norm = symmetric_norm(&a);
    a / norm
}

/// Wrap a spec as an implicit instance.
pub fn gen_kronecker(spec: KroneckerSpec) -> Instance {
    let n = spec.total_qubits();
    let mut op = PauliOperator::new(n);
    op.set_norm_upper_bound(Some(spec.pauli_l1())).expect("positive l1");
    let mut metadata = BTreeMap::new();
    metadata.insert("model".to_string(), "kronecker".to_string());
    metadata.insert("n".to_string(), n.to_string());
    metadata.insert("repetitions".to_string(), spec.repetitions().to_string());
    Instance {
        op,
        groups: BTreeMap::new(),
        flags: InstanceFlags { real_symmetric: true, commuting_1d: false, window_width: None },
        seed: None,
        metadata,
        kronecker: Some(spec),
    }
}
