use std::collections::BTreeMap;

use num_complex::Complex64;

use super::string::PauliString;
use crate::error::{Error, Result};

/// A real linear combination of Pauli strings on `n` qubits.
///
/// Zero coefficients are never stored. The Pauli ℓ1 norm is summed in term order, so it
/// does not depend on how the operator was built.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliOperator {
    n: usize,
    terms: BTreeMap<PauliString, f64>,
    norm_upper_bound: Option<f64>,
}

impl PauliOperator {
    pub fn new(n: usize) -> Self {
        PauliOperator { n, terms: BTreeMap::new(), norm_upper_bound: None }
    }

    /// Build from `(pauli, coeff)` pairs, merging duplicates.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut op = PauliOperator::new(n);
        for (p, c) in terms {
            op.add_term(p, c)?;
        }
        Ok(op)
    }

    /// Build from label strings such as `("XXII", 1.0)`.
    pub fn from_labels(terms: &[(&str, f64)]) -> Result<Self> {
        let n = terms.first().map(|(s, _)| s.len()).unwrap_or(0);
        let parsed = terms
            .iter()
            .map(|(s, c)| Ok((s.parse::<PauliString>()?, *c)))
            .collect::<Result<Vec<_>>>()?;
        PauliOperator::from_terms(n, parsed)
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(p, &c)| (p, c))
    }

    pub fn paulis(&self) -> impl ExactSizeIterator<Item = &PauliString> {
        self.terms.keys()
    }

    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    /// Add `c·p`, merging with an existing term and dropping exact zeros.
    pub fn add_term(&mut self, p: PauliString, c: f64) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch(self.n, p.num_qubits()));
        }
        if !c.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite coefficient {c} on {p}")));
        }
        let old = self.terms.get(&p).copied().unwrap_or(0.0);
        let new = old + c;
        if new == 0.0 {
            self.terms.remove(&p);
        } else {
            self.terms.insert(p, new);
        }
        Ok(())
    }

    /// Σ|c|.
    pub fn pauli_l1(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Upper bound on the operator norm; defaults to the Pauli ℓ1 norm.
    pub fn norm_upper_bound(&self) -> f64 {
        self.norm_upper_bound.unwrap_or_else(|| self.pauli_l1())
    }

    pub fn explicit_norm_bound(&self) -> Option<f64> {
        self.norm_upper_bound
    }

    pub fn set_norm_upper_bound(&mut self, bound: Option<f64>) -> Result<()> {
        if let Some(b) = bound {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidArgument(format!("norm bound must be positive, got {b}")));
            }
        }
        self.norm_upper_bound = bound;
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> PauliOperator {
        let mut out = PauliOperator::new(self.n);
        for (p, c) in self.terms() {
            let v = c * s;
            if v != 0.0 {
                out.terms.insert(p.clone(), v);
            }
        }
        out.norm_upper_bound = self.norm_upper_bound.map(|b| b * s.abs());
        out
    }

    /// `C / norm_upper_bound(C)`; the result has norm bound 1.
    pub fn normalized(&self) -> Result<PauliOperator> {
        let b = self.norm_upper_bound();
        if b <= 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero operator".into()));
        }
        let mut out = self.scaled(1.0 / b);
        out.norm_upper_bound = Some(1.0);
        Ok(out)
    }

    pub fn is_real_symmetric(&self) -> bool {
        self.terms.keys().all(PauliString::is_real)
    }

    pub fn max_weight(&self) -> usize {
        self.terms.keys().map(PauliString::weight).max().unwrap_or(0)
    }

    /// Trace divided by `2^n`, i.e. the identity coefficient.
    pub fn normalized_trace(&self) -> f64 {
        self.coeff(&PauliString::identity(self.n))
    }
}

/// Result of a pairwise commutation scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommutationReport {
    pub fully_commuting: bool,
    pub anticommuting_pair_count: usize,
}

/// Count anticommuting pairs among the support Paulis.
pub fn commutation_report(op: &PauliOperator) -> CommutationReport {
    let ps: Vec<&PauliString> = op.paulis().collect();
    let mut count = 0;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            if !ps[i].commutes_unchecked(ps[j]) {
                count += 1;
            }
        }
    }
    CommutationReport { fully_commuting: count == 0, anticommuting_pair_count: count }
}

/// Exact commutator test `[A, B] = 0` for two Pauli sums, via symbolic expansion.
pub fn operators_commute(a: &[(PauliString, f64)], b: &[(PauliString, f64)], tol: f64) -> bool {
    // [P, Q] = 2PQ when they anticommute, else 0.
    let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
    for (p, cp) in a {
        for (q, cq) in b {
            if p.commutes_unchecked(q) {
                continue;
            }
            let r = p.mul_unchecked(q);
            *acc.entry(r.pauli).or_default() += r.phase.to_complex() * (2.0 * cp * cq);
        }
    }
    acc.values().all(|v| v.norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_zero_drop() {
        let mut op = PauliOperator::from_labels(&[("XI", 1.0), ("IZ", -2.0)]).unwrap();
        assert_eq!(op.pauli_l1(), 3.0);
        op.add_term("XI".parse().unwrap(), -1.0).unwrap();
        assert_eq!(op.len(), 1);
        assert_eq!(op.pauli_l1(), 2.0);
    }

    #[test]
    fn empty_operator_has_zero_l1() {
        assert_eq!(PauliOperator::new(3).pauli_l1(), 0.0);
    }

    #[test]
    fn normalization_uses_bound() {
        let mut op = PauliOperator::from_labels(&[("XX", 2.0), ("ZZ", 2.0)]).unwrap();
        assert_eq!(op.normalized().unwrap().pauli_l1(), 1.0);
        op.set_norm_upper_bound(Some(2.0)).unwrap();
        assert_eq!(op.normalized().unwrap().coeff(&"XX".parse().unwrap()), 1.0);
    }

    #[test]
    fn report_counts_pairs() {
        let op = PauliOperator::from_labels(&[("XI", 1.0), ("ZI", 1.0), ("IX", 1.0)]).unwrap();
        let r = commutation_report(&op);
        assert!(!r.fully_commuting);
        assert_eq!(r.anticommuting_pair_count, 1);
    }

    #[test]
    fn xy_block_commutes_with_total_z_parity() {
        // XX + YY conserves Z1Z2 as a block, though YY alone does not commute with Z1.
        let p = |s: &str| s.parse::<PauliString>().unwrap();
        let block = vec![(p("XX"), 1.0), (p("YY"), 1.0)];
        assert!(operators_commute(&block, &[(p("ZZ"), 1.0)], 1e-12));
        assert!(!operators_commute(&block, &[(p("ZI"), 1.0)], 1e-12));
    }
}
