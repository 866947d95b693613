//! Problem instances: the cost operator plus the structural flags the backends rely on.

mod generators;
mod io;
mod kronecker;
mod structure;

use std::collections::BTreeMap;

pub use generators::{gen_cluster1d, gen_commuting4, gen_hamming_family, gen_random_sparse, small_corpus, HammingMode};
pub use io::{instance_from_json, instance_to_json, load_instance, save_instance, InstanceFile, TermRecord};
pub use kronecker::{gen_kronecker, default_initiator, KroneckerSpec};
pub use structure::{structure_report, StructureReport};

use crate::dense;
use crate::error::{Error, Result};
use crate::pauli::{commutation_report, operators_commute, PauliOperator, PauliString};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InstanceFlags {
    pub real_symmetric: bool,
    pub commuting_1d: bool,
    pub window_width: Option<usize>,
}

/// A cost operator with metadata.
///
/// Kronecker instances are implicit: `op` is empty and `kronecker` holds the factors. An
/// explicit term list for them comes from the sparsifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub op: PauliOperator,
    /// Group tags; terms sharing a tag form one exponent block in the commuting backend.
    pub groups: BTreeMap<PauliString, u32>,
    pub flags: InstanceFlags,
    pub seed: Option<u64>,
    pub metadata: BTreeMap<String, String>,
    pub kronecker: Option<KroneckerSpec>,
}

/// A set of terms treated as one commuting unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub group: Option<u32>,
    pub terms: Vec<(PauliString, f64)>,
}

impl Block {
    /// Lowest and highest qubit touched.
    pub fn span(&self) -> Option<(usize, usize)> {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for (p, _) in &self.terms {
            if let Some((a, b)) = p.span() {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        (lo != usize::MAX).then_some((lo, hi))
    }
}

impl Instance {
    /// Wrap an explicit operator; flags are derived from its terms.
    pub fn from_operator(op: PauliOperator) -> Self {
        let flags = InstanceFlags { real_symmetric: op.is_real_symmetric(), commuting_1d: false, window_width: None };
        Instance { op, groups: BTreeMap::new(), flags, seed: None, metadata: BTreeMap::new(), kronecker: None }
    }

    pub fn num_qubits(&self) -> usize {
        match &self.kronecker {
            Some(k) if self.op.is_empty() => k.total_qubits(),
            _ => self.op.num_qubits(),
        }
    }

    pub fn is_implicit(&self) -> bool {
        self.kronecker.is_some() && self.op.is_empty()
    }

    pub fn pauli_l1(&self) -> f64 {
        match &self.kronecker {
            Some(k) if self.op.is_empty() => k.pauli_l1(),
            _ => self.op.pauli_l1(),
        }
    }

    pub fn model(&self) -> &str {
        self.metadata.get("model").map(String::as_str).unwrap_or("custom")
    }

    /// `C/‖C‖` using the operator's norm bound.
    pub fn normalized_objective(&self) -> Result<PauliOperator> {
        self.require_explicit()?;
        self.op.normalized()
    }

    pub fn norm_bound(&self) -> f64 {
        self.op.norm_upper_bound()
    }

    /// Replace the norm bound by the exact operator norm (dense, `n <= 12`).
    pub fn use_dense_norm(&mut self) -> Result<()> {
        self.require_explicit()?;
        let norm = dense::spectral_norm(&self.op)?;
        self.op.set_norm_upper_bound(Some(norm))
    }

    pub fn require_explicit(&self) -> Result<()> {
        if self.is_implicit() {
            return Err(Error::InvalidInstance(
                "Kronecker instance has no explicit terms; sparsify it first".into(),
            ));
        }
        if self.op.is_empty() {
            return Err(Error::InvalidInstance("instance has no terms".into()));
        }
        Ok(())
    }

    /// Terms grouped into blocks; ungrouped terms form singleton blocks. Blocks are
    /// ordered by their first term.
    pub fn blocks(&self) -> Vec<Block> {
        let mut grouped: BTreeMap<u32, Vec<(PauliString, f64)>> = BTreeMap::new();
        let mut order: Vec<(PauliString, Option<u32>)> = Vec::new();
        let mut singles = Vec::new();
        for (p, c) in self.op.terms() {
            match self.groups.get(p) {
                Some(&g) => {
                    let e = grouped.entry(g).or_default();
                    if e.is_empty() {
                        order.push((p.clone(), Some(g)));
                    }
                    e.push((p.clone(), c));
                }
                None => {
                    order.push((p.clone(), None));
                    singles.push((p.clone(), c));
                }
            }
        }
        let mut single_iter = singles.into_iter();
        order
            .into_iter()
            .map(|(_, g)| match g {
                Some(g) => Block { group: Some(g), terms: grouped.remove(&g).unwrap() },
                None => Block { group: None, terms: vec![single_iter.next().unwrap()] },
            })
            .collect()
    }

    /// Check that declared flags hold.
    pub fn validate(&self) -> Result<()> {
        if self.is_implicit() {
            return Ok(());
        }
        let n = self.op.num_qubits();
        for p in self.groups.keys() {
            if self.op.coeff(p) == 0.0 {
                return Err(Error::InvalidInstance(format!("group tag on absent term {p}")));
            }
        }
        if self.flags.real_symmetric && !self.op.is_real_symmetric() {
            return Err(Error::InvalidInstance("real_symmetric flag set but a term has an odd Y count".into()));
        }
        if self.flags.commuting_1d {
            let w = self
                .flags
                .window_width
                .ok_or_else(|| Error::InvalidInstance("commuting_1d requires window_width".into()))?;
            let blocks = self.blocks();
            for b in &blocks {
                if let Some((lo, hi)) = b.span() {
                    if hi - lo + 1 > w {
                        return Err(Error::InvalidInstance(format!(
                            "block on qubits {}..{} exceeds window width {w}",
                            lo + 1,
                            hi + 1
                        )));
                    }
                }
            }
            for i in 0..blocks.len() {
                for j in i + 1..blocks.len() {
                    if !operators_commute(&blocks[i].terms, &blocks[j].terms, 1e-12) {
                        return Err(Error::InvalidInstance(format!(
                            "commuting_1d flag set but blocks starting with {} and {} do not commute",
                            blocks[i].terms[0].0, blocks[j].terms[0].0
                        )));
                    }
                }
            }
        }
        if let Some(w) = self.flags.window_width {
            if w == 0 || w > n {
                return Err(Error::InvalidInstance(format!("window width {w} out of range for n={n}")));
            }
        }
        Ok(())
    }

    /// True when every pair of support Paulis commutes.
    pub fn fully_commuting(&self) -> bool {
        commutation_report(&self.op).fully_commuting
    }
}
