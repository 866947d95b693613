use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::operator::PauliOperator;
use super::string::PauliString;
use crate::bits::{reduced_basis, Bits};
use crate::error::{Error, Result};

/// Default cap on the number of enumerated traceless group elements.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

/// The Z-strings (modulo phase) inside the group generated by an operator's support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalGroup {
    pub n: usize,
    /// GF(2)-independent z-vectors in reduced echelon form.
    pub generators: Vec<Bits>,
}

impl DiagonalGroup {
    pub fn trivial(n: usize) -> Self {
        DiagonalGroup { n, generators: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// `2^k`, saturating at `u128::MAX` for absurd ranks.
    pub fn order(&self) -> u128 {
        1u128.checked_shl(self.rank() as u32).unwrap_or(u128::MAX)
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// Membership test for a z-vector.
    pub fn contains(&self, z: &Bits) -> bool {
        let mut v = z.clone();
        for g in &self.generators {
            if v.get(g.first_one().unwrap()) {
                v.xor_assign(g);
            }
        }
        v.is_zero()
    }
}

/// A deduplicated list of nonzero z-vectors (the constraint set `S`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub n: usize,
    pub z_strings: Vec<Bits>,
}

impl ConstraintSet {
    pub fn empty(n: usize) -> Self {
        ConstraintSet { n, z_strings: Vec::new() }
    }

    /// Deduplicate, drop zero vectors and sort into canonical order.
    pub fn new(n: usize, z: impl IntoIterator<Item = Bits>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for b in z {
            if b.len() != n {
                return Err(Error::DimensionMismatch(n, b.len()));
            }
            if !b.is_zero() {
                set.insert(b);
            }
        }
        let mut z_strings: Vec<Bits> = set.into_iter().collect();
        sort_canonical(&mut z_strings);
        Ok(ConstraintSet { n, z_strings })
    }

    /// All `2^n − 1` nonidentity Z-strings.
    pub fn all_z(n: usize) -> Result<Self> {
        if n > 20 {
            return Err(Error::CapExceeded {
                what: "all Z-strings",
                needed: (1u128 << n) - 1,
                cap: DEFAULT_ENUMERATION_CAP as u128,
            });
        }
        let z = (1u64..(1u64 << n)).map(|m| Bits::from_index_mask(n, m));
        ConstraintSet::new(n, z)
    }

    /// Single-site constraints `Z_1, ..., Z_n`.
    pub fn single_sites(n: usize) -> Self {
        ConstraintSet { n, z_strings: (0..n).map(|q| Bits::from_indices(n, &[q])).collect() }
    }

    pub fn len(&self) -> usize {
        self.z_strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_strings.is_empty()
    }

    pub fn contains(&self, z: &Bits) -> bool {
        self.z_strings.contains(z)
    }

    pub fn is_subset_of(&self, other: &ConstraintSet) -> bool {
        self.z_strings.iter().all(|z| other.contains(z))
    }

    pub fn paulis(&self) -> impl Iterator<Item = PauliString> + '_ {
        self.z_strings.iter().map(|z| PauliString::z_string(z.clone()))
    }

    /// Human-readable labels such as `IZZI`.
    pub fn labels(&self) -> Vec<String> {
        self.paulis().map(|p| p.to_string()).collect()
    }
}

/// Sort by weight, then by label, so output order is stable and readable.
fn sort_canonical(v: &mut [Bits]) {
    v.sort_by_cached_key(|b| {
        let label: Vec<bool> = (0..b.len()).map(|i| !b.get(i)).collect();
        (b.count_ones(), label)
    });
}

/// Generators of the diagonal group of `op`.
///
/// Rows `[x | z]` of the support are row-reduced with the x-columns pivoted first; the
/// rows whose x-part vanishes then span exactly the Z-strings of the generated group.
pub fn diagonal_group(op: &PauliOperator) -> DiagonalGroup {
    let n = op.num_qubits();
    let rows: Vec<Bits> = op
        .paulis()
        .filter(|p| !p.is_identity())
        .map(|p| {
            let mut r = Bits::zeros(2 * n);
            for q in p.x().ones() {
                r.set(q, true);
            }
            for q in p.z().ones() {
                r.set(n + q, true);
            }
            r
        })
        .collect();
    let basis = reduced_basis(&rows);
    let z_rows: Vec<Bits> = basis
        .into_iter()
        .filter(|r| r.first_one().is_some_and(|p| p >= n))
        .map(|r| {
            let mut z = Bits::zeros(n);
            for q in r.ones() {
                z.set(q - n, true);
            }
            z
        })
        .collect();
    DiagonalGroup { n, generators: reduced_basis(&z_rows) }
}

/// Every nonzero GF(2) combination of the generators.
pub fn enumerate_traceless(g: &DiagonalGroup, cap: u64) -> Result<ConstraintSet> {
    let k = g.rank();
    let needed = g.order().saturating_sub(1);
    if needed > cap as u128 {
        return Err(Error::CapExceeded { what: "diagonal group enumeration", needed, cap: cap as u128 });
    }
    let mut out = Vec::with_capacity(needed as usize);
    // Gray-code walk: each step flips one generator.
    let mut cur = Bits::zeros(g.n);
    for i in 1u64..(1u64 << k) {
        let flip = i.trailing_zeros() as usize;
        cur.xor_assign(&g.generators[flip]);
        out.push(cur.clone());
    }
    ConstraintSet::new(g.n, out)
}

/// Outcome of a Krylov constraint search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KrylovConstraints {
    pub set: ConstraintSet,
    /// True when the search stopped early at the product cap.
    pub truncated: bool,
    /// Number of partial products visited.
    pub visited: u64,
}

/// Z-strings reached by products of at most `k` distinct support Paulis.
///
/// Products are explored depth-first in increasing term index. The last factor of every
/// product is found through a hash on the x-part, so the search costs roughly
/// `C(m, k−1)` partial products. `cap` bounds that count; exceeding it sets `truncated`.
pub fn krylov_constraints(op: &PauliOperator, k: usize, cap: u64) -> Result<KrylovConstraints> {
    if k < 1 {
        return Err(Error::InvalidArgument("Krylov order must be at least 1".into()));
    }
    let n = op.num_qubits();
    let terms: Vec<&PauliString> = op.paulis().filter(|p| !p.is_identity()).collect();
    let mut by_x: HashMap<&Bits, Vec<usize>> = HashMap::new();
    for (i, p) in terms.iter().enumerate() {
        by_x.entry(p.x()).or_default().push(i);
    }

    struct Search<'a> {
        terms: &'a [&'a PauliString],
        by_x: &'a HashMap<&'a Bits, Vec<usize>>,
        found: BTreeSet<Bits>,
        visited: u64,
        cap: u64,
        truncated: bool,
    }

    impl Search<'_> {
        // `x`, `z` hold the running product of `depth` factors, the last of index `last`.
        fn go(&mut self, x: &Bits, z: &Bits, start: usize, remaining: usize) {
            if self.truncated {
                return;
            }
            // Close the product with one more factor whose x-part cancels `x`.
            if let Some(idx) = self.by_x.get(x) {
                for &j in idx.iter().filter(|&&j| j >= start) {
                    let zz = z.xor(self.terms[j].z());
                    if !zz.is_zero() {
                        self.found.insert(zz);
                    }
                }
            }
            if remaining <= 1 {
                return;
            }
            for j in start..self.terms.len() {
                self.visited += 1;
                if self.visited > self.cap {
                    self.truncated = true;
                    return;
                }
                let p = self.terms[j];
                self.go(&x.xor(p.x()), &z.xor(p.z()), j + 1, remaining - 1);
            }
        }
    }

    let mut s = Search { terms: &terms, by_x: &by_x, found: BTreeSet::new(), visited: 0, cap, truncated: false };
    s.go(&Bits::zeros(n), &Bits::zeros(n), 0, k);
    if s.truncated {
        log::warn!("Krylov search of order {k} truncated after {} partial products", s.visited);
    }
    Ok(KrylovConstraints { set: ConstraintSet::new(n, s.found)?, truncated: s.truncated, visited: s.visited })
}
