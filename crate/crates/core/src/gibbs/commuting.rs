//! Exact contraction for exponents that split into mutually commuting local blocks.
//!
//! With commuting blocks, `exp(E) = Π_k exp(H_k)` and every factor is a short Pauli sum:
//! a single term gives `cosh θ (I + tanh θ P)`, while a multi-term block is expanded in
//! the group its terms generate via a small dense exponential. A product of Pauli
//! strings factorises site by site, so traces and amplitudes are sums over joint term
//! choices that can be swept left to right. The state carried across a cut records,
//! for every factor straddling it, which restriction to the remaining sites was
//! chosen; this is the bond of the equivalent matrix-product contraction.

use std::collections::HashMap;

use num_complex::Complex64;

use super::dense::dense_expectation;
use super::{
    Amplitude, BackendKind, CommutingConfig, ExpectationMode, ExpectationResult, GibbsBackend, GibbsParams,
    GibbsProblem, Observable, ProductState,
};
use crate::bits::Bits;
use crate::dense::operator_dense;
use crate::error::{Error, Result};
use crate::pauli::{operators_commute, site_mul, PauliOperator, PauliString};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
fn i_pow(e: u8) -> Complex64 {
    match e & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// Single-qubit code: `x + 2z` (0 = I, 1 = X, 2 = Z, 3 = Y).
#[inline]
fn code_of(p: &PauliString, q: usize) -> u8 {
    let (x, z) = p.site(q);
    x as u8 | ((z as u8) << 1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Source {
    Objective(f64),
    Constraint(usize),
}

/// Suffix classes of a factor's terms at one site offset.
#[derive(Clone, Debug)]
struct ClassStep {
    /// Site operator of each class.
    code: Vec<u8>,
    /// Class at the next offset (unused on the last site).
    next: Vec<u32>,
}

#[derive(Clone, Debug)]
struct Unit {
    lo: usize,
    hi: usize,
    paulis: Vec<(PauliString, Source)>,
    /// Expansion basis: site codes over `lo..=hi` for each term.
    terms: Vec<Vec<u8>>,
    steps: Vec<ClassStep>,
}

impl Unit {
    fn width(&self) -> usize {
        self.hi - self.lo + 1
    }

    fn radix_at(&self, t: usize) -> usize {
        if t == 0 {
            self.terms.len()
        } else {
            self.steps[t].code.len()
        }
    }
}

/// Per-λ data of a factor: term weights and a log prefactor.
struct Weights {
    w: Vec<Vec<f64>>,
    log_scale: f64,
}

/// One joint choice of the factors active on a site.
#[derive(Clone, Debug)]
struct Entry {
    in_idx: u32,
    out_idx: u32,
    code: u8,
    phase: u8,
    /// `(unit, term)` for factors that start on this site.
    starts: Vec<(u32, u32)>,
}

#[derive(Clone, Debug)]
struct SitePlan {
    entries: Vec<Entry>,
    in_size: usize,
    out_size: usize,
}

/// Exact Gibbs oracle for commuting, geometrically local exponents.
pub struct CommutingBackend {
    problem: GibbsProblem,
    cfg: CommutingConfig,
    units: Vec<Unit>,
    plans: Vec<SitePlan>,
}

struct Environments {
    left: Vec<(Vec<Complex64>, f64)>,
    right: Vec<(Vec<Complex64>, f64)>,
    log_z: f64,
}

impl CommutingBackend {
    pub fn new(problem: GibbsProblem, cfg: CommutingConfig) -> Result<Self> {
        if problem.n == 0 {
            return Err(Error::InvalidArgument("empty problem".into()));
        }
        if cfg.bond_cap == 0 {
            return Err(Error::InvalidArgument("bond cap must be positive".into()));
        }
        let units = build_units(&problem, &cfg)?;
        let plans = build_plans(problem.n, &units, cfg.bond_cap)?;
        Ok(CommutingBackend { problem, cfg, units, plans })
    }

    /// Number of states on each cut between neighbouring sites.
    pub fn cut_sizes(&self) -> Vec<usize> {
        self.plans.iter().map(|p| p.out_size).collect()
    }

    /// Number of exponent blocks after merging.
    pub fn num_blocks(&self) -> usize {
        self.units.len()
    }

    fn weights(&self, lambda: &GibbsParams) -> Result<Weights> {
        self.problem.check_params(lambda)?;
        let mut w = Vec::with_capacity(self.units.len());
        let mut log_scale = 0.0;
        for u in &self.units {
            let theta = |s: &Source| match *s {
                Source::Objective(c) => lambda.lambda_c * c,
                Source::Constraint(i) => lambda.lambda_a[i],
            };
            if u.paulis.len() == 1 {
                let t = theta(&u.paulis[0].1);
                // cosh θ (I + tanh θ P), with log cosh evaluated stably.
                let a = t.abs();
                log_scale += a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2;
                w.push(vec![1.0, t.tanh()]);
            } else {
                let (ws, ls) = block_expansion(u, &theta)?;
                log_scale += ls;
                w.push(ws);
            }
        }
        Ok(Weights { w, log_scale })
    }

    /// Sweep one site. `f` maps `(code, phase)` to the site value.
    fn step_site(
        &self,
        s: usize,
        weights: &Weights,
        insert: u8,
        f: &dyn Fn(u8, u8) -> Complex64,
        input: &[Complex64],
        output: &mut [Complex64],
    ) {
        for e in &self.plans[s].entries {
            let vin = input[e.in_idx as usize];
            if vin == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (code, ph) = if insert == 0 { (e.code, 0) } else { site_mul(insert, e.code) };
            let val = f(code, (e.phase + ph) & 3);
            if val == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut w = 1.0;
            for &(k, j) in &e.starts {
                w *= weights.w[k as usize][j as usize];
            }
            output[e.out_idx as usize] += vin * val * w;
        }
    }

    fn step_site_back(
        &self,
        s: usize,
        weights: &Weights,
        f: &dyn Fn(u8, u8) -> Complex64,
        input: &[Complex64],
        output: &mut [Complex64],
    ) {
        for e in &self.plans[s].entries {
            let vout = input[e.out_idx as usize];
            if vout == Complex64::new(0.0, 0.0) {
                continue;
            }
            let val = f(e.code, e.phase);
            if val == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut w = 1.0;
            for &(k, j) in &e.starts {
                w *= weights.w[k as usize][j as usize];
            }
            output[e.in_idx as usize] += vout * val * w;
        }
    }

    fn environments(&self, weights: &Weights) -> Result<Environments> {
        let n = self.problem.n;
        let f = trace_value;
        let mut left = Vec::with_capacity(n + 1);
        left.push((vec![Complex64::new(1.0, 0.0)], 0.0));
        for s in 0..n {
            let (prev, lp) = &left[s];
            let mut out = vec![Complex64::new(0.0, 0.0); self.plans[s].out_size];
            self.step_site(s, weights, 0, &f, prev, &mut out);
            let ls = normalize(&mut out);
            left.push((out, lp + ls));
        }
        let mut right = vec![(Vec::new(), 0.0); n + 1];
        right[n] = (vec![Complex64::new(1.0, 0.0)], 0.0);
        for s in (0..n).rev() {
            let mut out = vec![Complex64::new(0.0, 0.0); self.plans[s].in_size];
            self.step_site_back(s, weights, &f, &right[s + 1].0, &mut out);
            let ls = normalize(&mut out);
            right[s] = (out, right[s + 1].1 + ls);
        }
        let (last, ll) = &left[n];
        let z = last[0];
        if !(z.re > 0.0) || !z.re.is_finite() {
            return Err(Error::Numerical(format!("partition function contraction gave {z}")));
        }
        let log_z = ll + z.re.ln() + weights.log_scale;
        Ok(Environments { left, right, log_z })
    }

    /// `tr(P e^E) / tr(e^E)` from precomputed environments.
    fn pauli_expectation(&self, p: &PauliString, weights: &Weights, env: &Environments) -> f64 {
        let Some((a, b)) = p.span() else {
            return 1.0;
        };
        let (lv, ll) = &env.left[a];
        let mut cur = lv.clone();
        let mut scale = *ll;
        for s in a..=b {
            let mut out = vec![Complex64::new(0.0, 0.0); self.plans[s].out_size];
            self.step_site(s, weights, code_of(p, s), &trace_value, &cur, &mut out);
            scale += normalize(&mut out);
            cur = out;
        }
        let (rv, rl) = &env.right[b + 1];
        let num: Complex64 = cur.iter().zip(rv).map(|(x, y)| x * y).sum();
        if num == Complex64::new(0.0, 0.0) {
            return 0.0;
        }
        let log_den = env.log_z - weights.log_scale;
        num.re * (scale + rl - log_den).exp()
    }

    fn operator_expectation(&self, op: &PauliOperator, weights: &Weights, env: &Environments) -> f64 {
        op.terms().map(|(p, c)| c * self.pauli_expectation(p, weights, env)).sum()
    }

    fn finite_difference(&self, lambda: &GibbsParams, obs: &Observable) -> Result<Option<f64>> {
        let h = self.cfg.fd_step;
        let (mut up, mut dn) = (lambda.clone(), lambda.clone());
        match obs {
            Observable::Objective => {
                up.lambda_c += h;
                dn.lambda_c -= h;
            }
            Observable::Constraint(i) => {
                if *i >= lambda.lambda_a.len() {
                    return Err(Error::InvalidArgument(format!("constraint index {i} out of range")));
                }
                up.lambda_a[*i] += h;
                dn.lambda_a[*i] -= h;
            }
            _ => return Ok(None),
        }
        Ok(Some((self.log_partition(&up)? - self.log_partition(&dn)?) / (2.0 * h)))
    }
}

fn trace_value(code: u8, phase: u8) -> Complex64 {
    if code == 0 {
        i_pow(phase) * 2.0
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Scale to unit max-modulus; returns the log of the removed factor.
fn normalize(v: &mut [Complex64]) -> f64 {
    let m = v.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    if m > 0.0 && m.is_finite() {
        for x in v.iter_mut() {
            *x /= m;
        }
        m.ln()
    } else {
        0.0
    }
}

/// `exp(H)` of a multi-term block as weights over its group elements, plus log scale.
fn block_expansion(u: &Unit, theta: &dyn Fn(&Source) -> f64) -> Result<(Vec<f64>, f64)> {
    let w = u.width();
    let local = |codes: &[u8]| -> PauliString {
        let sites: Vec<(usize, char)> = codes.iter().enumerate().map(|(q, c)| (q, ['I', 'X', 'Z', 'Y'][*c as usize])).collect();
        PauliString::from_sites(w, &sites).expect("codes are valid")
    };
    let mut h = PauliOperator::new(w);
    for (p, s) in &u.paulis {
        let codes: Vec<u8> = (u.lo..=u.hi).map(|q| code_of(p, q)).collect();
        h.add_term(local(&codes), theta(s))?;
    }
    let dense = operator_dense(&h)?;
    let eig = nalgebra::SymmetricEigen::new(dense);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("non-finite block spectrum".into()));
    }
    let mut v = eig.eigenvectors.clone();
    for (k, mut col) in v.column_iter_mut().enumerate() {
        col *= Complex64::new(((eig.eigenvalues[k] - max) / 2.0).exp(), 0.0);
    }
    // M = V diag(e^{λ-max}) V†; dense_expectation returns Re tr(P M), and tr(M) ≤ 2^w.
    let m = &v * v.adjoint();
    let d = (1usize << w) as f64;
    let weights = u
        .terms
        .iter()
        .map(|codes| {
            let op = PauliOperator::from_terms(w, [(local(codes), 1.0)]).expect("dimension matches");
            dense_expectation(&op, &m) / d
        })
        .collect();
    Ok((weights, max))
}

fn sources_commute(a: &[(PauliString, Source)], b: &[(PauliString, Source)]) -> bool {
    // Each unit exponent is λ_C·(objective part) + Σ λ_A Z_A with independent multipliers,
    // so the objective parts and every constraint term must commute separately.
    let obj = |u: &[(PauliString, Source)]| -> Vec<(PauliString, f64)> {
        u.iter()
            .filter_map(|(p, s)| match s {
                Source::Objective(c) => Some((p.clone(), *c)),
                _ => None,
            })
            .collect()
    };
    let cons = |u: &[(PauliString, Source)]| -> Vec<Vec<(PauliString, f64)>> {
        u.iter()
            .filter_map(|(p, s)| match s {
                Source::Constraint(_) => Some(vec![(p.clone(), 1.0)]),
                _ => None,
            })
            .collect()
    };
    let (oa, ob) = (obj(a), obj(b));
    if !operators_commute(&oa, &ob, 1e-12) {
        return false;
    }
    for z in cons(b) {
        if !operators_commute(&oa, &z, 1e-12) {
            return false;
        }
    }
    for z in cons(a) {
        if !operators_commute(&z, &ob, 1e-12) {
            return false;
        }
    }
    true
}

fn span_of(paulis: &[(PauliString, Source)]) -> (usize, usize) {
    let mut lo = usize::MAX;
    let mut hi = 0;
    for (p, _) in paulis {
        if let Some((a, b)) = p.span() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    (lo, hi)
}

fn build_units(problem: &GibbsProblem, cfg: &CommutingConfig) -> Result<Vec<Unit>> {
    let mut groups: Vec<Vec<(PauliString, Source)>> = Vec::new();
    for b in &problem.blocks {
        let terms: Vec<_> = b
            .terms
            .iter()
            .filter(|(p, _)| !p.is_identity())
            .map(|(p, c)| (p.clone(), Source::Objective(*c)))
            .collect();
        if !terms.is_empty() {
            groups.push(terms);
        }
    }
    for (i, z) in problem.constraints.z_strings.iter().enumerate() {
        groups.push(vec![(PauliString::z_string(z.clone()), Source::Constraint(i))]);
    }

    // Merge blocks that fail to commute until every pair commutes.
    loop {
        let spans: Vec<(usize, usize)> = groups.iter().map(|g| span_of(g)).collect();
        let mut merged = None;
        'scan: for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                if spans[i].1 < spans[j].0 || spans[j].1 < spans[i].0 {
                    continue;
                }
                if !sources_commute(&groups[i], &groups[j]) {
                    merged = Some((i, j));
                    break 'scan;
                }
            }
        }
        match merged {
            Some((i, j)) => {
                let g = groups.remove(j);
                groups[i].extend(g);
            }
            None => break,
        }
    }

    let mut units = Vec::with_capacity(groups.len());
    for paulis in groups {
        let (lo, hi) = span_of(&paulis);
        let w = hi - lo + 1;
        let terms: Vec<Vec<u8>> = if paulis.len() == 1 {
            let p = &paulis[0].0;
            vec![vec![0; w], (lo..=hi).map(|q| code_of(p, q)).collect()]
        } else {
            if w > cfg.max_block_qubits {
                return Err(Error::BackendCapability {
                    backend: "commuting1d",
                    reason: format!(
                        "a merged block spans qubits {}..{} ({w} > {} qubits)",
                        lo + 1,
                        hi + 1,
                        cfg.max_block_qubits
                    ),
                });
            }
            group_elements(&paulis, lo, hi)
        };
        let steps = class_steps(&terms);
        units.push(Unit { lo, hi, paulis, terms, steps });
    }
    units.sort_by(|a, b| (a.lo, a.hi, &a.paulis[0].0).cmp(&(b.lo, b.hi, &b.paulis[0].0)));
    Ok(units)
}

/// All elements (mod phase) of the group generated by the block's Paulis, restricted to
/// `lo..=hi`, as site codes.
fn group_elements(paulis: &[(PauliString, Source)], lo: usize, hi: usize) -> Vec<Vec<u8>> {
    let w = hi - lo + 1;
    let rows: Vec<Bits> = paulis
        .iter()
        .map(|(p, _)| {
            let mut r = Bits::zeros(2 * w);
            for q in lo..=hi {
                let (x, z) = p.site(q);
                r.set(q - lo, x);
                r.set(w + q - lo, z);
            }
            r
        })
        .collect();
    let basis = crate::bits::reduced_basis(&rows);
    let mut out = Vec::with_capacity(1 << basis.len());
    let mut cur = Bits::zeros(2 * w);
    out.push(cur.clone());
    for i in 1u64..(1u64 << basis.len()) {
        cur.xor_assign(&basis[i.trailing_zeros() as usize]);
        out.push(cur.clone());
    }
    out.into_iter()
        .map(|r| (0..w).map(|q| r.get(q) as u8 | ((r.get(w + q) as u8) << 1)).collect())
        .collect()
}

fn class_steps(terms: &[Vec<u8>]) -> Vec<ClassStep> {
    let w = terms[0].len();
    // class_of[t][j]: class of term j's suffix starting at offset t.
    let mut class_of: Vec<Vec<u32>> = Vec::with_capacity(w);
    let mut reps: Vec<Vec<usize>> = Vec::with_capacity(w);
    for t in 0..w {
        let mut map: HashMap<&[u8], u32> = HashMap::new();
        let mut cls = Vec::with_capacity(terms.len());
        let mut rep = Vec::new();
        for (j, term) in terms.iter().enumerate() {
            let key = &term[t..];
            let next_id = map.len() as u32;
            let id = *map.entry(key).or_insert_with(|| {
                rep.push(j);
                next_id
            });
            cls.push(id);
        }
        class_of.push(cls);
        reps.push(rep);
    }
    (0..w)
        .map(|t| ClassStep {
            code: reps[t].iter().map(|&j| terms[j][t]).collect(),
            next: reps[t].iter().map(|&j| if t + 1 < w { class_of[t + 1][j] } else { 0 }).collect(),
        })
        .collect()
}

fn build_plans(n: usize, units: &[Unit], bond_cap: usize) -> Result<Vec<SitePlan>> {
    const MAX_ENTRIES: usize = 1 << 22;
    let mut plans = Vec::with_capacity(n);
    let mut in_size = 1usize;
    for s in 0..n {
        let active: Vec<usize> = (0..units.len()).filter(|&k| units[k].lo <= s && s <= units[k].hi).collect();
        // Strides for the incoming cut (factors open before s) and outgoing cut.
        let mut in_stride = vec![0usize; active.len()];
        let mut out_stride = vec![0usize; active.len()];
        let mut acc_in = 1usize;
        let mut acc_out = 1usize;
        for (a, &k) in active.iter().enumerate().rev() {
            let u = &units[k];
            let t = s - u.lo;
            if t > 0 {
                in_stride[a] = acc_in;
                acc_in *= u.radix_at(t);
            }
            if s < u.hi {
                out_stride[a] = acc_out;
                acc_out = acc_out.checked_mul(u.radix_at(t + 1)).unwrap_or(usize::MAX);
            }
        }
        debug_assert_eq!(acc_in, in_size);
        if acc_out > bond_cap {
            return Err(Error::BondCapExceeded { needed: acc_out, cap: bond_cap, cut: s + 1 });
        }
        let radices: Vec<usize> = active.iter().map(|&k| units[k].radix_at(s - units[k].lo)).collect();
        let total: usize = radices.iter().try_fold(1usize, |a, &r| a.checked_mul(r)).unwrap_or(usize::MAX);
        if total > MAX_ENTRIES {
            return Err(Error::BondCapExceeded { needed: total, cap: MAX_ENTRIES, cut: s });
        }
        let mut entries = Vec::with_capacity(total);
        let mut digits = vec![0usize; active.len()];
        for _ in 0..total {
            let mut code = 0u8;
            let mut phase = 0u8;
            let mut in_idx = 0usize;
            let mut out_idx = 0usize;
            let mut starts = Vec::new();
            for (a, &k) in active.iter().enumerate() {
                let u = &units[k];
                let t = s - u.lo;
                let d = digits[a];
                let (c, next) = if t == 0 {
                    let term = &u.terms[d];
                    starts.push((k as u32, d as u32));
                    (term[0], if s < u.hi { u.steps[0].next[d] } else { 0 })
                } else {
                    in_idx += d * in_stride[a];
                    (u.steps[t].code[d], u.steps[t].next[d])
                };
                let (c2, e) = site_mul(code, c);
                code = c2;
                phase = (phase + e) & 3;
                if s < u.hi {
                    out_idx += next as usize * out_stride[a];
                }
            }
            entries.push(Entry { in_idx: in_idx as u32, out_idx: out_idx as u32, code, phase, starts });
            for a in (0..digits.len()).rev() {
                digits[a] += 1;
                if digits[a] < radices[a] {
                    break;
                }
                digits[a] = 0;
            }
        }
        plans.push(SitePlan { entries, in_size, out_size: acc_out });
        in_size = acc_out;
    }
    Ok(plans)
}

impl GibbsBackend for CommutingBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Commuting1d
    }

    fn problem(&self) -> &GibbsProblem {
        &self.problem
    }

    fn expectations(&self, lambda: &GibbsParams, observables: &[Observable]) -> Result<ExpectationResult> {
        let weights = self.weights(lambda)?;
        let env = self.environments(&weights)?;
        let mut values = Vec::with_capacity(observables.len());
        for o in observables {
            if self.cfg.expectation_mode == ExpectationMode::FiniteDifference {
                if let Some(v) = self.finite_difference(lambda, o)? {
                    values.push(v);
                    continue;
                }
            }
            let v = match o {
                Observable::Objective => self.operator_expectation(&self.problem.objective, &weights, &env),
                Observable::Constraint(i) => {
                    let z = self
                        .problem
                        .constraints
                        .z_strings
                        .get(*i)
                        .ok_or_else(|| Error::InvalidArgument(format!("constraint index {i} out of range")))?;
                    self.pauli_expectation(&PauliString::z_string(z.clone()), &weights, &env)
                }
                Observable::Pauli(p) => {
                    if p.num_qubits() != self.problem.n {
                        return Err(Error::DimensionMismatch(self.problem.n, p.num_qubits()));
                    }
                    self.pauli_expectation(p, &weights, &env)
                }
                Observable::Operator(op) => {
                    if op.num_qubits() != self.problem.n {
                        return Err(Error::DimensionMismatch(self.problem.n, op.num_qubits()));
                    }
                    self.operator_expectation(op, &weights, &env)
                }
            };
            if !v.is_finite() {
                return Err(Error::Numerical("non-finite expectation in commuting contraction".into()));
            }
            values.push(v);
        }
        Ok(ExpectationResult { stderr: vec![0.0; values.len()], values, log_partition: env.log_z })
    }

    fn log_partition(&self, lambda: &GibbsParams) -> Result<f64> {
        let weights = self.weights(lambda)?;
        let n = self.problem.n;
        let mut cur = vec![Complex64::new(1.0, 0.0)];
        let mut scale = 0.0;
        for s in 0..n {
            let mut out = vec![Complex64::new(0.0, 0.0); self.plans[s].out_size];
            self.step_site(s, &weights, 0, &trace_value, &cur, &mut out);
            scale += normalize(&mut out);
            cur = out;
        }
        let z = cur[0];
        if !(z.re > 0.0) || !z.re.is_finite() {
            return Err(Error::Numerical(format!("partition function contraction gave {z}")));
        }
        Ok(scale + z.re.ln() + weights.log_scale)
    }

    fn amplitudes(&self, lambda_half: &GibbsParams, bras: &[Bits], ket: &ProductState) -> Result<Vec<Amplitude>> {
        let n = self.problem.n;
        if ket.num_qubits() != n {
            return Err(Error::DimensionMismatch(n, ket.num_qubits()));
        }
        let weights = self.weights(lambda_half)?;
        bras.iter()
            .map(|bra| {
                if bra.len() != n {
                    return Err(Error::DimensionMismatch(n, bra.len()));
                }
                let mut cur = vec![Complex64::new(1.0, 0.0)];
                let mut scale = 0.0;
                for s in 0..n {
                    let b = bra.get(s);
                    let [k0, k1] = ket.0[s];
                    // ⟨b| i^e τ |ket⟩ for τ ∈ {I, X, Z, Y}
                    let table = [
                        if b { k1 } else { k0 },
                        if b { k0 } else { k1 },
                        if b { -k1 } else { k0 },
                        if b { I * k0 } else { -I * k1 },
                    ];
                    let f = move |code: u8, phase: u8| i_pow(phase) * table[code as usize];
                    let mut out = vec![Complex64::new(0.0, 0.0); self.plans[s].out_size];
                    self.step_site(s, &weights, 0, &f, &cur, &mut out);
                    scale += normalize(&mut out);
                    cur = out;
                }
                Ok(Amplitude { value: cur[0], log_scale: scale + weights.log_scale })
            })
            .collect()
    }
}
