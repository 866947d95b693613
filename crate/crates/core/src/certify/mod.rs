//! Certificates and diagnostics: the exact QUBO by enumeration, the Ξ stability linear
//! program, the `ε^{1/3}` scaling diagnostic, the purity uniqueness test, and the
//! rounded/relaxed sandwich.

pub mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{reduced_basis, Bits};
use crate::dense::operator_dense;
use crate::error::{Error, Result};
use crate::gibbs::{purity, GibbsBackend, GibbsParams};
use crate::hu::SolveReport;
use crate::pauli::{diagonal_group, ConstraintSet, PauliOperator};
use crate::rounding::RoundedSolution;

use simplex::{maximize, LpOutcome};

pub const BRUTE_FORCE_MAX_N: usize = 4;
pub const XI_MAX_CONSTRAINTS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuboSolution {
    pub value: f64,
    pub argmax: Vec<i8>,
}

/// `max_{x ∈ {±1}^{2^n}} ⟨x|C|x⟩` by enumeration. Vectors are visited in lexicographic
/// order with `+1` before `-1`, and the first maximiser is kept.
pub fn brute_force_qubo(c: &PauliOperator, cap_n: usize) -> Result<QuboSolution> {
    let n = c.num_qubits();
    if n > cap_n {
        return Err(Error::CapExceeded { what: "brute-force qubits", needed: n as u128, cap: cap_n as u128 });
    }
    let d = 1usize << n;
    let m = operator_dense(c)?.map(|v| v.re);
    let total = 1u64 << d;
    let eval = |mask: u64| -> f64 {
        let x: Vec<f64> = (0..d).map(|i| if mask >> (d - 1 - i) & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let mut s = 0.0;
        for i in 0..d {
            for k in 0..d {
                s += x[i] * m[(i, k)] * x[k];
            }
        }
        s
    };
    let (best, value) = (0..total)
        .into_par_iter()
        .map(|mask| (mask, eval(mask)))
        .reduce(|| (u64::MAX, f64::NEG_INFINITY), |a, b| {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        });
    let argmax = (0..d).map(|i| if best >> (d - 1 - i) & 1 == 1 { -1 } else { 1 }).collect();
    Ok(QuboSolution { value, argmax })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiResult {
    /// `+∞` when the program is unbounded.
    pub xi: f64,
    pub unbounded: bool,
    /// Number of distinct sign patterns `s(b)`.
    pub patterns: usize,
}

/// Distinct patterns `s(b)_i = (-1)^{z_i·b}` over all basis states `b`. The map is linear
/// over GF(2), so the patterns are the span of its columns.
pub fn sign_patterns(s: &ConstraintSet) -> Vec<Vec<f64>> {
    let m = s.len();
    let columns: Vec<Bits> = (0..s.n)
        .map(|q| Bits::from_bools(&s.z_strings.iter().map(|z| z.get(q)).collect::<Vec<_>>()))
        .collect();
    let basis = reduced_basis(&columns);
    let mut out = Vec::with_capacity(1 << basis.len());
    let mut cur = Bits::zeros(m);
    for i in 0u64..(1u64 << basis.len()) {
        if i > 0 {
            cur.xor_assign(&basis[i.trailing_zeros() as usize]);
        }
        out.push((0..m).map(|k| if cur.get(k) { -1.0 } else { 1.0 }).collect());
    }
    out
}

/// `Ξ = sup ‖ξ‖₁` subject to `Σ_i ξ_i Z_{A_i} ≥ -v·I`, one LP per sign orthant of `ξ`.
pub fn xi_lp(s: &ConstraintSet, v: f64, cap_m: usize) -> Result<XiResult> {
    if !(v > 0.0) {
        return Err(Error::InvalidArgument(format!("v must be positive, got {v}")));
    }
    let m = s.len();
    if m > cap_m {
        return Err(Error::CapExceeded { what: "Ξ constraints", needed: m as u128, cap: cap_m as u128 });
    }
    let patterns = sign_patterns(s);
    Ok(xi_from_patterns(&patterns, m, v))
}

/// The Ξ program for an explicit list of sign patterns.
pub fn xi_from_patterns(patterns: &[Vec<f64>], m: usize, v: f64) -> XiResult {
    if m == 0 {
        return XiResult { xi: 0.0, unbounded: false, patterns: patterns.len() };
    }
    let best = (0u64..1 << m)
        .into_par_iter()
        .map(|orthant| {
            let sigma: Vec<f64> = (0..m).map(|i| if orthant >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            // ξ = σ∘t, t ≥ 0:  -Σ σ_i s_i t_i ≤ v
            let a: Vec<Vec<f64>> = patterns.iter().map(|p| (0..m).map(|i| -sigma[i] * p[i]).collect()).collect();
            match maximize(&vec![1.0; m], &a, &vec![v; patterns.len()]) {
                LpOutcome::Optimal { value, .. } => value,
                LpOutcome::Unbounded => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    XiResult { xi: best, unbounded: best.is_infinite(), patterns: patterns.len() }
}

/// `(2^k - 1)^{1/6} ε^{1/3} ‖C‖`: the scaling of the relaxed-vs-exact gap for a group of
/// rank `k`. A diagnostic only; the true bound carries an unspecified constant.
pub fn stability_diag(k: u32, eps: f64, norm_c: f64) -> f64 {
    (2f64.powi(k as i32) - 1.0).powf(1.0 / 6.0) * eps.cbrt() * norm_c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificatePayload {
    Sandwich { lower: f64, upper: f64, rounded: f64, rounded_stderr: f64, gw_upper: f64, eps: f64, ratio: f64 },
    XiBound { xi: f64, v: f64, patterns: usize, unbounded: bool },
    Purity { scales: Vec<f64>, purities: Vec<f64>, delta: f64, threshold: f64, pass: bool },
    StabilityDiag { k: u32, eps: f64, norm_c: f64, value: f64 },
    Qubo { value: f64, normalized: f64, argmax: Vec<i8> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(flatten)]
    pub payload: CertificatePayload,
    pub summary: String,
}

pub fn xi_certificate(s: &ConstraintSet, v: f64) -> Result<Certificate> {
    let r = xi_lp(s, v, XI_MAX_CONSTRAINTS)?;
    Ok(Certificate {
        summary: if r.unbounded {
            format!("Ξ is unbounded over {} sign patterns", r.patterns)
        } else {
            format!("Ξ = {:.6} = {:.4}·v over {} sign patterns", r.xi, r.xi / v, r.patterns)
        },
        payload: CertificatePayload::XiBound { xi: r.xi, v, patterns: r.patterns, unbounded: r.unbounded },
    })
}

/// Exact QUBO value by enumeration, also reported as `QUBO/(2^n‖C‖)`.
pub fn qubo_certificate(c: &PauliOperator, norm_c: f64) -> Result<Certificate> {
    let q = brute_force_qubo(c, BRUTE_FORCE_MAX_N)?;
    let normalized = q.value / (2f64.powi(c.num_qubits() as i32) * norm_c);
    Ok(Certificate {
        summary: format!("QUBO = {} ({normalized:.6} normalized)", q.value),
        payload: CertificatePayload::Qubo { value: q.value, normalized, argmax: q.argmax },
    })
}

pub fn stability_certificate(k: u32, eps: f64, norm_c: f64) -> Certificate {
    let value = stability_diag(k, eps, norm_c);
    Certificate {
        summary: format!("scaling diagnostic (2^{k}-1)^(1/6) eps^(1/3) |C| = {value:.6}"),
        payload: CertificatePayload::StabilityDiag { k, eps, norm_c, value },
    }
}

/// Purity of `σ(s·λ)` for each scale. Purity increases monotonically towards `1/k` for a
/// `k`-fold degenerate top eigenspace, so any value above `1/2 + δ` certifies a unique
/// leading eigenvector. Only meaningful for a trivial diagonal group.
pub fn purity_uniqueness(
    backend: &dyn GibbsBackend,
    lambda: &GibbsParams,
    scales: &[f64],
    delta: f64,
) -> Result<Certificate> {
    let g = diagonal_group(&backend.problem().objective);
    if !g.is_trivial() {
        return Err(Error::InvalidArgument(format!(
            "purity test needs a trivial diagonal group; this one has rank {}",
            g.rank()
        )));
    }
    let purities = scales.iter().map(|&s| purity(backend, &lambda.scaled(s))).collect::<Result<Vec<_>>>()?;
    let best = purities.iter().copied().fold(0.0, f64::max);
    let threshold = 0.5 + delta;
    let pass = best >= threshold;
    Ok(Certificate {
        summary: format!(
            "max purity {best:.6} {} {threshold}: {}",
            if pass { ">=" } else { "<" },
            if pass { "unique leading eigenvector" } else { "uniqueness not certified" }
        ),
        payload: CertificatePayload::Purity { scales: scales.to_vec(), purities, delta, threshold, pass },
    })
}

/// `QUBO/(2^n‖C‖) ∈ [rounded - stderr, gw_upper + ε]`.
pub fn sandwich_report(gw: &SolveReport, rounded: &RoundedSolution) -> Result<Certificate> {
    if rounded.rotation.num_qubits() != gw.n {
        return Err(Error::DimensionMismatch(gw.n, rounded.rotation.num_qubits()));
    }
    if rounded.lambda_half.lambda_a.len() != gw.constraint_count {
        return Err(Error::InvalidArgument("rounded solution and solve report use different constraint sets".into()));
    }
    let lower = rounded.energy_density - rounded.energy_stderr;
    let upper = gw.gw_upper + gw.eps;
    let ratio = if gw.gw_upper != 0.0 { rounded.energy_density / gw.gw_upper } else { f64::NAN };
    Ok(Certificate {
        summary: format!("QUBO/(2^n |C|) in [{lower:.6}, {upper:.6}], rounded/SDP ratio {ratio:.4}"),
        payload: CertificatePayload::Sandwich {
            lower,
            upper,
            rounded: rounded.energy_density,
            rounded_stderr: rounded.energy_stderr,
            gw_upper: gw.gw_upper,
            eps: gw.eps,
            ratio,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{DenseBackend, GibbsProblem};
    use crate::instances::gen_commuting4;
    use crate::pauli::enumerate_traceless;

    #[test]
    fn xx_qubo() {
        let c = PauliOperator::from_labels(&[("XX", 1.0)]).unwrap();
        let r = brute_force_qubo(&c, 4).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.argmax, vec![1, 1, 1, 1]);
    }

    #[test]
    fn diagonal_cancels() {
        let c = PauliOperator::from_labels(&[("Z", 1.0)]).unwrap();
        assert_eq!(brute_force_qubo(&c, 4).unwrap().value, 0.0);
        assert!(brute_force_qubo(&PauliOperator::new(5), 4).is_err());
    }

    #[test]
    fn xi_values() {
        let v = 0.7;
        let single = ConstraintSet::single_sites(3);
        assert!((xi_lp(&single, v, 12).unwrap().xi - v).abs() < 1e-9);
        let one = ConstraintSet::new(3, [Bits::parse("101").unwrap()]).unwrap();
        assert!((xi_lp(&one, v, 12).unwrap().xi - v).abs() < 1e-9);
        let s = enumerate_traceless(&diagonal_group(&gen_commuting4().op), 1 << 20).unwrap();
        let r = xi_lp(&s, v, 12).unwrap();
        assert_eq!(r.patterns, 4);
        assert!((r.xi - 3.0 * v).abs() < 1e-9);
    }

    #[test]
    fn stability_values() {
        assert_eq!(stability_diag(0, 0.1, 1.0), 0.0);
        assert!((stability_diag(2, 1e-3, 1.0) - 3f64.powf(1.0 / 6.0) * 0.1).abs() < 1e-12);
        assert!(stability_diag(3, 0.1, 1.0) > stability_diag(2, 0.1, 1.0));
        assert!(stability_diag(2, 0.2, 1.0) > stability_diag(2, 0.1, 1.0));
    }

    #[test]
    fn purity_certificates() {
        let nondeg = PauliOperator::from_labels(&[("XI", 0.4), ("IX", 0.35), ("XX", 0.25)]).unwrap();
        let b = DenseBackend::new(GibbsProblem::from_objective(nondeg, ConstraintSet::empty(2)).unwrap()).unwrap();
        let lam = GibbsParams { lambda_c: 1.0, lambda_a: vec![] };
        let c = purity_uniqueness(&b, &lam, &[0.0, 10.0, 100.0], 0.1).unwrap();
        assert!(matches!(c.payload, CertificatePayload::Purity { pass: true, .. }));
        let zero = purity_uniqueness(&b, &lam, &[0.0], 0.1).unwrap();
        match zero.payload {
            CertificatePayload::Purity { pass, ref purities, .. } => {
                assert!(!pass);
                assert!((purities[0] - 0.25).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
        // X⊗I has a trivial diagonal group but a doubly degenerate top eigenspace.
        let deg = PauliOperator::from_labels(&[("XI", 1.0)]).unwrap();
        let b = DenseBackend::new(GibbsProblem::from_objective(deg, ConstraintSet::empty(2)).unwrap()).unwrap();
        let c = purity_uniqueness(&b, &lam, &[1.0, 10.0, 100.0], 0.05).unwrap();
        match c.payload {
            CertificatePayload::Purity { pass, purities, .. } => {
                assert!(!pass);
                assert!(purities.iter().all(|&p| p <= 0.5 + 1e-12));
                assert!(purities[2] > 0.49);
            }
            _ => unreachable!(),
        }
        let c4 = gen_commuting4();
        let b = DenseBackend::new(GibbsProblem::new(&c4, ConstraintSet::empty(c4.num_qubits())).unwrap()).unwrap();
        assert!(purity_uniqueness(&b, &lam, &[1.0], 0.1).is_err());
    }
}
