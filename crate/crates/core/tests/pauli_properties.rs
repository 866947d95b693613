use nalgebra::DMatrix;
use num_complex::Complex64;
use pauligw::bits::Bits;
use pauligw::dense::{operator_dense, pauli_dense};
use pauligw::pauli::{
    diagonal_group, enumerate_traceless, krylov_constraints, ConstraintSet, PauliOperator, PauliString,
    DEFAULT_ENUMERATION_CAP,
};
use proptest::prelude::*;

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n))
        .prop_map(|(x, z)| PauliString::from_bits(Bits::from_bools(&x), Bits::from_bools(&z)).unwrap())
}

fn pair(max_n: usize) -> impl Strategy<Value = (PauliString, PauliString)> {
    (1..=max_n).prop_flat_map(|n| (pauli(n), pauli(n)))
}

fn close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> bool {
    (a - b).iter().all(|v| v.norm() < 1e-12)
}

proptest! {
    #[test]
    fn product_matches_dense((a, b) in pair(4)) {
        let s = a.mul(&b).unwrap();
        let want = pauli_dense(&a) * pauli_dense(&b);
        let got = pauli_dense(&s.pauli) * s.phase.to_complex();
        prop_assert!(close(&want, &got));
    }

    #[test]
    fn strings_are_hermitian_and_square_to_identity(p in (1..=4usize).prop_flat_map(pauli)) {
        let m = pauli_dense(&p);
        prop_assert!(close(&m, &m.adjoint()));
        let id = DMatrix::<Complex64>::identity(m.nrows(), m.nrows());
        prop_assert!(close(&(&m * &m), &id));
    }

    #[test]
    fn commutation_matches_dense((a, b) in pair(4)) {
        let (ma, mb) = (pauli_dense(&a), pauli_dense(&b));
        let comm = &ma * &mb - &mb * &ma;
        prop_assert_eq!(a.commutes(&b).unwrap(), comm.iter().all(|v| v.norm() < 1e-12));
        prop_assert_eq!(a.commutes(&b).unwrap(), b.commutes(&a).unwrap());
    }

    #[test]
    fn basis_action_matches_dense(p in (1..=4usize).prop_flat_map(pauli), col in 0u64..16) {
        let n = p.num_qubits();
        let b = col % (1 << n);
        let (b2, ph) = p.apply_to_basis(b).unwrap();
        let m = pauli_dense(&p);
        prop_assert!((m[(b2 as usize, b as usize)] - ph.to_complex()).norm() < 1e-12);
    }

    #[test]
    fn label_round_trip(p in (1..=8usize).prop_flat_map(pauli)) {
        let s = p.to_string();
        prop_assert_eq!(s.parse::<PauliString>().unwrap(), p);
    }

    #[test]
    fn diagonal_group_contains_diagonal_products(ps in (1..=4usize).prop_flat_map(|n| prop::collection::vec(pauli(n), 1..6))) {
        let n = ps[0].num_qubits();
        let mut op = PauliOperator::new(n);
        for p in &ps {
            if !p.is_identity() {
                op.add_term(p.clone(), 1.0).unwrap();
            }
        }
        prop_assume!(!op.is_empty());
        let g = diagonal_group(&op);
        let terms: Vec<_> = op.paulis().cloned().collect();
        // Every diagonal term and every diagonal pairwise product lies in the group.
        for a in &terms {
            if a.is_diagonal() {
                prop_assert!(g.contains(a.z()));
            }
            for b in &terms {
                let c = a.mul(b).unwrap().pauli;
                if c.is_diagonal() {
                    prop_assert!(g.contains(c.z()));
                }
            }
        }
        let s = enumerate_traceless(&g, DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert_eq!(s.len() as u128, g.order() - 1);
        // Krylov sets at any depth stay inside the group, and full depth reaches it.
        let k = krylov_constraints(&op, terms.len(), 1 << 20).unwrap();
        prop_assert!(k.set.is_subset_of(&s));
        prop_assert_eq!(k.set.len(), s.len());
    }

    #[test]
    fn constraint_sets_are_canonical(zs in (1..=5usize).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(any::<bool>(), n), 1..8))) {
        let n = zs[0].len();
        let bits: Vec<Bits> = zs.iter().map(|z| Bits::from_bools(z)).filter(|b| !b.is_zero()).collect();
        prop_assume!(!bits.is_empty());
        let s = ConstraintSet::new(n, bits.clone()).unwrap();
        let mut rev = bits.clone();
        rev.reverse();
        prop_assert_eq!(&s, &ConstraintSet::new(n, rev).unwrap());
        prop_assert_eq!(&s, &ConstraintSet::new(n, s.z_strings.clone()).unwrap());
        let weights: Vec<usize> = s.z_strings.iter().map(|z| z.count_ones()).collect();
        prop_assert!(weights.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn l1_bounds_spectral_norm(ps in (1..=3usize).prop_flat_map(|n| prop::collection::vec((pauli(n), -1.0f64..1.0), 1..6))) {
        let n = ps[0].0.num_qubits();
        let mut op = PauliOperator::new(n);
        for (p, c) in ps {
            if c != 0.0 {
                op.add_term(p, c).unwrap();
            }
        }
        prop_assume!(!op.is_empty());
        let m = operator_dense(&op).unwrap();
        let eig = nalgebra::SymmetricEigen::new(m);
        let norm = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(norm <= op.pauli_l1() + 1e-12);
    }
}

#[test]
fn krylov_depth_is_monotone() {
    let op = pauligw::instances::gen_commuting4().op;
    let mut last = 0;
    for k in 1..=4 {
        let s = krylov_constraints(&op, k, 1 << 20).unwrap();
        assert!(s.set.len() >= last);
        last = s.set.len();
    }
    assert_eq!(last, 3);
}
