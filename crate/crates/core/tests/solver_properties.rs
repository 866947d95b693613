use pauligw::certify::{brute_force_qubo, xi_from_patterns, xi_lp, sign_patterns, BRUTE_FORCE_MAX_N};
use pauligw::dense::max_eigenvalue;
use pauligw::gibbs::{build_backend, BackendConfig, BackendKind, DenseBackend, GibbsProblem};
use pauligw::hu::{gw_to_ugw, hu_feasibility, solve, HUPolicy, SolveReport, Status};
use pauligw::instances::{gen_commuting4, gen_hamming_family, gen_random_sparse, small_corpus, HammingMode, Instance};
use pauligw::pauli::{diagonal_group, enumerate_traceless, ConstraintSet, DEFAULT_ENUMERATION_CAP};
use pauligw::rounding::{round_explicit, sample_rotation};
use proptest::prelude::*;

fn dense_cfg() -> BackendConfig {
    BackendConfig { kind: BackendKind::Dense, ..Default::default() }
}

fn group_set(inst: &Instance) -> ConstraintSet {
    enumerate_traceless(&diagonal_group(&inst.op), DEFAULT_ENUMERATION_CAP).unwrap()
}

fn solve_dense(inst: &Instance, s: ConstraintSet, eps: f64) -> SolveReport {
    solve(inst, s, eps, &dense_cfg(), &HUPolicy::default()).unwrap()
}

#[test]
fn brackets_are_consistent_and_sandwich_the_qubo() {
    let eps = 0.1;
    for (name, inst) in small_corpus() {
        let n = inst.num_qubits();
        let s = group_set(&inst);
        let r = solve_dense(&inst, s.clone(), eps);
        assert!(r.gw_lower <= r.gw_upper && r.gw_upper - r.gw_lower <= eps + 1e-12, "{name}");
        // Spectral ceiling: a feasible target needs μ - ε ≤ ⟨C⟩ ≤ λ_max, and the bracket
        // adds at most ε on top of that.
        let top = max_eigenvalue(&inst.op).unwrap() / inst.norm_bound();
        assert!(r.gw_lower <= top + eps + 1e-12, "{name}: {} vs {top}", r.gw_lower);
        assert!(r.gw_upper <= top + 2.0 * eps + 1e-12, "{name}: {} vs {top}", r.gw_upper);
        // Rounded ≤ exact QUBO ≤ relaxed upper bound.
        let q = brute_force_qubo(&inst.op, BRUTE_FORCE_MAX_N).unwrap();
        assert!(q.value <= gw_to_ugw(r.gw_upper + eps, n, inst.norm_bound()) + 1e-9, "{name}");
        let backend = DenseBackend::new(GibbsProblem::new(&inst, s).unwrap()).unwrap();
        let rounded = round_explicit(&backend, &r.lambda_star, &sample_rotation(n, 1)).unwrap();
        assert!(gw_to_ugw(rounded.energy_density, n, inst.norm_bound()) <= q.value + 1e-9, "{name}");
        // The feasible multipliers obey the step bookkeeping.
        if let Some(last) = r.search_trace.iter().rev().find(|s| s.status == Status::Feasible) {
            assert!(r.lambda_star.l1() <= eps / 4.0 * last.iterations as f64 + 1e-9);
        }
    }
}

#[test]
fn trivial_group_brackets_spectral_value() {
    for n in 2..=5 {
        let inst = gen_hamming_family(n, 1, HammingMode::Hypercube).unwrap();
        let r = solve_dense(&inst, ConstraintSet::empty(n), 0.1);
        assert!(r.gw_lower - 0.1 <= 1.0 && 1.0 <= r.gw_upper + 0.1, "{r:?}");
    }
}

#[test]
fn dropping_constraints_never_lowers_the_value() {
    let eps = 0.1;
    let inst = gen_commuting4();
    let full = group_set(&inst);
    let partial = ConstraintSet::new(4, full.z_strings[..1].to_vec()).unwrap();
    let a = solve_dense(&inst, ConstraintSet::empty(4), eps);
    let b = solve_dense(&inst, partial, eps);
    let c = solve_dense(&inst, full, eps);
    assert!(a.gw_lower >= b.gw_lower - 2.0 * eps);
    assert!(b.gw_lower >= c.gw_lower - 2.0 * eps);
}

#[test]
fn commuting4_feasibility_switches_around_the_oracle_value() {
    // A finer bracket serves as the oracle for the ε-level decisions.
    let inst = gen_commuting4();
    let s = group_set(&inst);
    let fine = solve_dense(&inst, s.clone(), 0.02);
    let gw = 0.5 * (fine.gw_lower + fine.gw_upper);
    let eps = 0.1;
    let backend = DenseBackend::new(GibbsProblem::new(&inst, s).unwrap()).unwrap();
    let p = HUPolicy::default();
    assert_eq!(hu_feasibility(&backend, eps, gw - 2.0 * eps, &p).unwrap().status, Status::Feasible);
    assert_eq!(hu_feasibility(&backend, eps, gw + 2.0 * eps, &p).unwrap().status, Status::Infeasible);
}

#[test]
fn group_constraints_match_all_z_strings() {
    let eps = 0.1;
    for seed in 0..3 {
        let inst = gen_random_sparse(4, 6, 100 + seed).unwrap();
        let a = solve_dense(&inst, group_set(&inst), eps);
        let b = solve_dense(&inst, ConstraintSet::all_z(4).unwrap(), eps);
        assert!((a.gw_lower - b.gw_lower).abs() <= 2.0 * eps, "seed {seed}: {} vs {}", a.gw_lower, b.gw_lower);
    }
}

#[test]
fn relaxation_gap_is_linear_in_eps() {
    // |GW(ε) - GW(0)| ≤ ε·Ξ(S, GW), with GW(0) approximated by a run at ε/8.
    let inst = gen_commuting4();
    let s = group_set(&inst);
    let eps = 0.4;
    let coarse = solve_dense(&inst, s.clone(), eps);
    let fine = solve_dense(&inst, s.clone(), eps / 8.0);
    let v = fine.gw_upper.max(1e-3);
    let xi = xi_lp(&s, v, 12).unwrap().xi;
    let slack = eps + eps / 8.0;
    assert!((coarse.gw_lower - fine.gw_lower).abs() <= eps * xi + slack, "{coarse:?} {fine:?} {xi}");
}

#[test]
fn reports_are_deterministic() {
    let inst = gen_random_sparse(4, 7, 9).unwrap();
    let mut cfg = BackendConfig { kind: BackendKind::Stochastic, ..Default::default() };
    cfg.stochastic.seed = 4;
    let run = || {
        let mut r = solve(&inst, group_set(&inst), 0.25, &cfg, &HUPolicy::default()).unwrap();
        r.wall_time_s = None;
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
    let b = build_backend(GibbsProblem::new(&inst, group_set(&inst)).unwrap(), &cfg).unwrap();
    assert_eq!(b.kind(), BackendKind::Stochastic);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn xi_is_homogeneous_and_monotone(zs in prop::collection::vec(prop::collection::vec(any::<bool>(), 4), 1..5), v in 0.1f64..3.0) {
        let bits: Vec<_> = zs.iter().map(|z| pauligw::bits::Bits::from_bools(z)).filter(|b| !b.is_zero()).collect();
        prop_assume!(!bits.is_empty());
        let s = ConstraintSet::new(4, bits).unwrap();
        let a = xi_lp(&s, v, 12).unwrap();
        let b = xi_lp(&s, 2.0 * v, 12).unwrap();
        prop_assert!(!a.unbounded);
        prop_assert!((b.xi - 2.0 * a.xi).abs() < 1e-9 * (1.0 + b.xi));
        prop_assert!(a.xi >= v - 1e-9);
        // Fewer pattern rows means fewer LP constraints.
        let pats = sign_patterns(&s);
        if pats.len() > 1 {
            let fewer = xi_from_patterns(&pats[..pats.len() - 1], s.len(), v);
            prop_assert!(fewer.xi >= a.xi - 1e-9);
        }
    }
}
