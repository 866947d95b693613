use pauligw::gibbs::{
    purity, CommutingBackend, CommutingConfig, DenseBackend, GibbsBackend, GibbsParams, GibbsProblem, Observable,
    StochasticBackend, StochasticConfig,
};
use pauligw::instances::{gen_cluster1d, gen_hamming_family, gen_random_sparse, HammingMode};
use pauligw::pauli::{diagonal_group, enumerate_traceless, ConstraintSet, DEFAULT_ENUMERATION_CAP};
use proptest::prelude::*;

fn full_problem(inst: &pauligw::instances::Instance) -> GibbsProblem {
    let s = enumerate_traceless(&diagonal_group(&inst.op), DEFAULT_ENUMERATION_CAP).unwrap();
    GibbsProblem::new(inst, s).unwrap()
}

fn params(raw: &[f64], m: usize) -> GibbsParams {
    GibbsParams { lambda_c: raw[0].abs(), lambda_a: raw[1..=m].to_vec() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn commuting_matches_dense(seed in 0u64..500, raw in prop::collection::vec(-3.0f64..3.0, 4)) {
        let p = full_problem(&gen_cluster1d(7, seed).unwrap());
        let lam = params(&raw, p.num_constraints());
        let c = CommutingBackend::new(p.clone(), CommutingConfig::default()).unwrap();
        let d = DenseBackend::new(p.clone()).unwrap();
        let obs = p.standard_observables();
        let (rc, rd) = (c.expectations(&lam, &obs).unwrap(), d.expectations(&lam, &obs).unwrap());
        prop_assert!((rc.log_partition - rd.log_partition).abs() < 1e-9);
        for (a, b) in rc.values.iter().zip(&rd.values) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn expectations_are_bounded_and_purity_in_range(seed in 0u64..500, raw in prop::collection::vec(-4.0f64..4.0, 16)) {
        let inst = gen_random_sparse(4, 6, seed).unwrap();
        let p = full_problem(&inst);
        let lam = GibbsParams { lambda_c: raw[0], lambda_a: raw[1..=p.num_constraints()].to_vec() };
        let d = DenseBackend::new(p.clone()).unwrap();
        let r = d.expectations(&lam, &p.standard_observables()).unwrap();
        for v in &r.values {
            prop_assert!(v.abs() <= 1.0 + 1e-12);
        }
        let pu = purity(&d, &lam).unwrap();
        prop_assert!(pu >= 1.0 / 16.0 - 1e-12 && pu <= 1.0 + 1e-12);
    }

    #[test]
    fn log_partition_derivative_is_objective(seed in 0u64..500, lc in -3.0f64..3.0) {
        let inst = gen_random_sparse(3, 5, seed).unwrap();
        let p = GibbsProblem::new(&inst, ConstraintSet::empty(3)).unwrap();
        let d = DenseBackend::new(p).unwrap();
        let h = 1e-5;
        let at = |x: f64| d.log_partition(&GibbsParams { lambda_c: x, lambda_a: vec![] }).unwrap();
        let fd = (at(lc + h) - at(lc - h)) / (2.0 * h);
        let e = d.expectations(&GibbsParams { lambda_c: lc, lambda_a: vec![] }, &[Observable::Objective]).unwrap();
        prop_assert!((fd - e.values[0]).abs() < 1e-6);
    }
}

#[test]
fn stochastic_agrees_with_dense_within_noise() {
    let p = full_problem(&gen_cluster1d(8, 3).unwrap());
    let s = StochasticBackend::new(p.clone(), StochasticConfig { num_probes: 256, seed: 11, ..Default::default() }).unwrap();
    let d = DenseBackend::new(p.clone()).unwrap();
    let lam = GibbsParams { lambda_c: 4.0, lambda_a: vec![0.3, -0.5, 0.2] };
    let obs = p.standard_observables();
    let (rs, rd) = (s.expectations(&lam, &obs).unwrap(), d.expectations(&lam, &obs).unwrap());
    for i in 0..obs.len() {
        assert!((rs.values[i] - rd.values[i]).abs() <= 4.0 * rs.stderr[i] + 1e-9, "{i}: {} vs {}", rs.values[i], rd.values[i]);
    }
    assert!((rs.log_partition - rd.log_partition).abs() < 0.05);
}

#[test]
fn hypercube_gibbs_state_is_a_product() {
    // exp(θ Σ X_i / n) factorises, so ⟨X_1⟩ = tanh(θ/n) and log Z = n log(2 cosh(θ/n)).
    let n = 8;
    let inst = gen_hamming_family(n, 1, HammingMode::Hypercube).unwrap();
    let p = GibbsProblem::new(&inst, ConstraintSet::empty(n)).unwrap();
    let theta: f64 = 5.0;
    let lam = GibbsParams { lambda_c: theta, lambda_a: vec![] };
    let x1 = Observable::Pauli(pauligw::pauli::PauliString::single(n, 0, 'X').unwrap());
    let want = (theta / n as f64).tanh();
    for b in [
        Box::new(DenseBackend::new(p.clone()).unwrap()) as Box<dyn GibbsBackend>,
        Box::new(CommutingBackend::new(p.clone(), CommutingConfig::default()).unwrap()),
    ] {
        let r = b.expectations(&lam, &[x1.clone(), Observable::Objective]).unwrap();
        assert!((r.values[0] - want).abs() < 1e-12);
        assert!((r.values[1] - want).abs() < 1e-12);
        let lz = n as f64 * (2.0 * (theta / n as f64).cosh()).ln();
        assert!((r.log_partition - lz).abs() < 1e-10);
    }
}
