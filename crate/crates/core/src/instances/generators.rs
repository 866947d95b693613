use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Instance, InstanceFlags};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::pauli::{PauliOperator, PauliString};

/// Which Hamming-distance graph to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HammingMode {
    /// Distance-1 neighbours: `Σ_i X_i`.
    Hypercube,
    /// Exactly distance `k`: `Σ_{|A|=k} X_A`.
    HammingK,
    /// Every pair of distinct vertices, weight `2^{-n}`.
    Complete,
}

impl std::str::FromStr for HammingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hypercube" => Ok(HammingMode::Hypercube),
            "hamming" | "hamming_k" => Ok(HammingMode::HammingK),
            "complete" => Ok(HammingMode::Complete),
            _ => Err(Error::InvalidArgument(format!("unknown Hamming mode {s:?}"))),
        }
    }
}

fn x_string(n: usize, ones: &[usize]) -> PauliString {
    PauliString::from_bits(Bits::from_indices(n, ones), Bits::zeros(n)).unwrap()
}

fn meta(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Adjacency matrices of the hypercube, distance-k Hamming graph and complete graph.
pub fn gen_hamming_family(n: usize, k: usize, mode: HammingMode) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut op = PauliOperator::new(n);
    let (model, flags) = match mode {
        HammingMode::Hypercube => {
            for q in 0..n {
                op.add_term(x_string(n, &[q]), 1.0)?;
            }
            let flags = InstanceFlags { real_symmetric: true, commuting_1d: true, window_width: Some(1) };
            ("hypercube", flags)
        }
        HammingMode::HammingK => {
            if k == 0 || k > n {
                return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k={k}, n={n}")));
            }
            if n > 63 {
                return Err(Error::InvalidArgument("Hamming graphs limited to 63 qubits".into()));
            }
            for m in 1u64..(1u64 << n) {
                if m.count_ones() as usize == k {
                    op.add_term(PauliString::from_bits(Bits::from_index_mask(n, m), Bits::zeros(n))?, 1.0)?;
                }
            }
            ("hamming", InstanceFlags { real_symmetric: true, ..Default::default() })
        }
        HammingMode::Complete => {
            if n > 16 {
                return Err(Error::InvalidArgument(format!("complete graph needs 2^n - 1 terms; refused for n={n} > 16")));
            }
            let w = (0.5f64).powi(n as i32);
            for m in 1u64..(1u64 << n) {
                op.add_term(PauliString::from_bits(Bits::from_index_mask(n, m), Bits::zeros(n))?, w)?;
            }
            ("complete", InstanceFlags { real_symmetric: true, ..Default::default() })
        }
    };
    let mut inst = Instance::from_operator(op);
    inst.flags = flags;
    inst.metadata = meta(&[("model", model.to_string()), ("n", n.to_string()), ("k", k.to_string())]);
    Ok(inst)
}

/// Modified 1D cluster model with a grouped three-site boundary block.
///
/// Coefficients are `1 − U[0,1)` from a ChaCha8 stream seeded with `seed`, drawn in term
/// order and divided by their sum. The six two-body boundary terms share one coefficient
/// (divided by 6) and one group tag.
pub fn gen_cluster1d(n: usize, seed: u64) -> Result<Instance> {
    if n < 7 {
        return Err(Error::InvalidArgument(format!("cluster1d needs n >= 7, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || 1.0 - rng.random::<f64>();
    // 0-based qubit q corresponds to qubit q+1 in the usual 1-based labelling.
    let site = |q1: usize| q1 - 1;
    let mut raw: Vec<(Vec<(usize, char)>, f64, bool)> = Vec::new();
    raw.push((vec![(site(1), 'X'), (site(2), 'Z')], draw(), false));
    for i in 2..=n - 5 {
        raw.push((vec![(site(i - 1), 'Z'), (site(i), 'X'), (site(i + 1), 'Z')], draw(), false));
    }
    for i in 2..=n - 6 {
        raw.push((vec![(site(i - 1), 'Z'), (site(i), 'Y'), (site(i + 1), 'Y'), (site(i + 2), 'Z')], draw(), false));
    }
    raw.push((
        vec![
            (site(n - 6), 'Z'),
            (site(n - 5), 'Y'),
            (site(n - 4), 'Y'),
            (site(n - 3), 'X'),
            (site(n - 2), 'X'),
            (site(n - 1), 'X'),
        ],
        draw(),
        false,
    ));
    raw.push((vec![(site(n), 'X')], draw(), false));
    let a43 = draw();
    for (a, b) in [(n - 3, n - 2), (n - 2, n - 1), (n - 3, n - 1)] {
        for op in ['X', 'Y'] {
            raw.push((vec![(site(a), op), (site(b), op)], a43 / 6.0, true));
        }
    }
    // Σ a over the coefficient draws equals Σ|c| over the terms.
    let total: f64 = raw.iter().map(|r| r.1).sum();
    let mut op = PauliOperator::new(n);
    let mut groups = BTreeMap::new();
    for (sites, c, grouped) in raw {
        let p = PauliString::from_sites(n, &sites)?;
        if grouped {
            groups.insert(p.clone(), 0);
        }
        op.add_term(p, c / total)?;
    }
    let mut inst = Instance::from_operator(op);
    inst.groups = groups;
    inst.flags = InstanceFlags { real_symmetric: true, commuting_1d: true, window_width: Some(6) };
    inst.seed = Some(seed);
    inst.metadata = meta(&[("model", "cluster1d".into()), ("n", n.to_string())]);
    Ok(inst)
}

/// Fixed 4-qubit example with a rank-2 diagonal group and non-commuting terms.
pub fn gen_commuting4() -> Instance {
    let op = PauliOperator::from_labels(&[
        ("XXII", 1.0),
        ("YYII", 1.0),
        ("IXXI", 1.0),
        ("IYYI", 1.0),
        ("XIXI", 1.0),
        ("YIYI", 1.0),
        ("XXXX", 1.0),
        ("IIIX", 1.0),
    ])
    .expect("valid labels");
    let mut inst = Instance::from_operator(op);
    inst.metadata = meta(&[("model", "commuting4".into()), ("n", "4".into())]);
    inst
}

/// `m` distinct random non-identity Pauli strings with an even number of `Y`s (so the
/// operator is real symmetric) and coefficients uniform in `±[0.1, 1)`.
pub fn gen_random_sparse(n: usize, m: usize, seed: u64) -> Result<Instance> {
    if n == 0 || n > 63 {
        return Err(Error::InvalidArgument(format!("random instances need 1 <= n <= 63, got {n}")));
    }
    // Strings with an even number of Ys, minus the identity.
    let available = ((1u128 << (2 * n)) + (1u128 << n)) / 2 - 1;
    if m == 0 || m as u128 > available {
        return Err(Error::InvalidArgument(format!("cannot draw {m} real Pauli strings on {n} qubits")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut op = PauliOperator::new(n);
    while op.len() < m {
        let x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let z: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let p = PauliString::from_bits(Bits::from_bools(&x), Bits::from_bools(&z))?;
        let c = rng.random_range(0.1..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        if p.is_identity() || !p.is_real() || op.coeff(&p) != 0.0 {
            continue;
        }
        op.add_term(p, c)?;
    }
    let mut inst = Instance::from_operator(op);
    inst.seed = Some(seed);
    inst.metadata = meta(&[("model", "random".into()), ("n", n.to_string()), ("terms", m.to_string())]);
    Ok(inst)
}

/// Named instances on at most four qubits, small enough for exhaustive QUBO checks.
pub fn small_corpus() -> Vec<(String, Instance)> {
    let mut out = vec![("commuting4".to_string(), gen_commuting4())];
    let xx = Instance::from_operator(PauliOperator::from_labels(&[("XX", 1.0)]).expect("valid"));
    out.push(("xx".into(), xx));
    for n in 2..=4 {
        out.push((format!("hypercube{n}"), gen_hamming_family(n, 1, HammingMode::Hypercube).expect("valid")));
    }
    out.push(("hamming4_2".into(), gen_hamming_family(4, 2, HammingMode::HammingK).expect("valid")));
    out.push(("complete3".into(), gen_hamming_family(3, 1, HammingMode::Complete).expect("valid")));
    for (n, m, seed) in [(2, 3, 1), (3, 4, 2), (3, 6, 3), (4, 5, 4), (4, 8, 5), (4, 10, 6)] {
        out.push((format!("random{n}_{m}_s{seed}"), gen_random_sparse(n, m, seed).expect("valid")));
    }
    out
}
