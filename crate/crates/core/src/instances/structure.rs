use std::collections::VecDeque;

use super::Instance;
use crate::dense::operator_dense;
use crate::error::{Error, Result};
use crate::pauli::commutation_report;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub walk_regular: bool,
    /// Connectivity of the nonzero off-diagonal pattern of the dense matrix.
    pub connected: bool,
    /// Connectivity when every support Pauli contributes its edges `b ↔ b ⊕ x`, ignoring
    /// cancellations between terms.
    pub support_connected: bool,
    pub fully_commuting: bool,
}

/// Walk-regularity up to `kmax`, connectivity of the off-diagonal pattern, and
/// commutation of the support. Dense, so limited to `n <= 10`.
pub fn structure_report(inst: &Instance, kmax: usize) -> Result<StructureReport> {
    inst.require_explicit()?;
    let n = inst.op.num_qubits();
    if n > 10 {
        return Err(Error::InvalidArgument(format!("structure report is dense; n = {n} > 10")));
    }
    let c = operator_dense(&inst.op)?;
    let d = c.nrows();

    let mut walk_regular = true;
    let mut power = c.clone();
    for k in 1..=kmax {
        if k > 1 {
            power = &power * &c;
        }
        let d0 = power[(0, 0)];
        let scale = power.diagonal().iter().fold(1.0f64, |m, v| m.max(v.norm()));
        if (0..d).any(|i| (power[(i, i)] - d0).norm() > 1e-9 * scale) {
            walk_regular = false;
            break;
        }
    }

    let connected = bfs_all(d, |u, out| {
        out.extend((0..d).filter(|&v| v != u && c[(v, u)].norm() > 1e-12));
    });
    let flips: Vec<usize> = inst.op.paulis().map(|p| p.masks().x as usize).filter(|&x| x != 0).collect();
    let support_connected = bfs_all(d, |u, out| out.extend(flips.iter().map(|x| u ^ x)));

    Ok(StructureReport {
        walk_regular,
        connected,
        support_connected,
        fully_commuting: commutation_report(&inst.op).fully_commuting,
    })
}

fn bfs_all(d: usize, neighbours: impl Fn(usize, &mut Vec<usize>)) -> bool {
    let mut seen = vec![false; d];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    let mut buf = Vec::new();
    while let Some(u) = queue.pop_front() {
        buf.clear();
        neighbours(u, &mut buf);
        for &v in &buf {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_commuting4, gen_hamming_family, HammingMode};
    use crate::pauli::PauliOperator;

    #[test]
    fn hypercube_is_walk_regular() {
        let r = structure_report(&gen_hamming_family(3, 1, HammingMode::Hypercube).unwrap(), 6).unwrap();
        assert!(r.walk_regular && r.connected && r.fully_commuting);
    }

    #[test]
    fn commuting_with_diagonal_group_is_disconnected() {
        let op = PauliOperator::from_labels(&[("ZZ", 1.0), ("XX", 1.0)]).unwrap();
        let r = structure_report(&Instance::from_operator(op), 2).unwrap();
        assert!(r.fully_commuting);
        assert!(!r.connected);
    }

    #[test]
    fn commuting4_support_connected_not_commuting() {
        let r = structure_report(&gen_commuting4(), 4).unwrap();
        // XX + YY cancels the |00⟩ ↔ |11⟩ entries, so {000,111} ⊗ {0,1} on the dense
        // matrix splits off from the other twelve states. Each Pauli alone connects them.
        assert!(!r.connected);
        assert!(r.support_connected);
        assert!(!r.fully_commuting);
    }
}
