//! Randomized rounding of a Gibbs solution to a sign vector `x = sign Re(e^{E(λ/2)} U|0⟩)`
//! and estimation of its energy density `2^{-n}⟨x|C'|x⟩`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::gibbs::{log_sum_exp, GibbsBackend, GibbsParams, ProductState};
use crate::pauli::PauliOperator;

/// Largest `n` for which a full sign vector is materialised.
pub const EXPLICIT_MAX_N: usize = 24;

/// Per-qubit Euler angles `(φ, ω, θ)` of the random rotation `U = ⊗_j R_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub angles: Vec<[f64; 3]>,
    pub seed: u64,
}

impl RotationSpec {
    pub fn num_qubits(&self) -> usize {
        self.angles.len()
    }

    /// `R_j|0⟩ = (e^{-i(φ+ω)/2} cos(θ/2), e^{-i(φ-ω)/2} sin(θ/2))` for each qubit.
    pub fn ket(&self) -> ProductState {
        ProductState(
            self.angles
                .iter()
                .map(|&[phi, omega, theta]| {
                    [
                        Complex64::from_polar((theta / 2.0).cos(), -(phi + omega) / 2.0),
                        Complex64::from_polar((theta / 2.0).sin(), -(phi - omega) / 2.0),
                    ]
                })
                .collect(),
        )
    }

    /// Dense `R_j` (columns are `R_j|0⟩`, `R_j|1⟩`).
    pub fn local_matrix(&self, j: usize) -> [[Complex64; 2]; 2] {
        let [phi, omega, theta] = self.angles[j];
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        [
            [Complex64::from_polar(c, -(phi + omega) / 2.0), -Complex64::from_polar(s, (phi - omega) / 2.0)],
            [Complex64::from_polar(s, -(phi - omega) / 2.0), Complex64::from_polar(c, (phi + omega) / 2.0)],
        ]
    }
}

/// I.i.d. uniform angles in `[0, 2π)`.
pub fn sample_rotation(n: usize, seed: u64) -> RotationSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles = (0..n)
        .map(|_| {
            let mut a = [0.0; 3];
            for v in &mut a {
                *v = rng.random_range(0.0..2.0 * PI);
            }
            a
        })
        .collect();
    RotationSpec { angles, seed }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    Explicit,
    Implicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundedSolution {
    pub mode: RoundingMode,
    /// Full sign vector (explicit mode only; not serialised).
    #[serde(skip)]
    pub signs: Option<Vec<i8>>,
    /// `λ/2`; together with `rotation` it defines the vector implicitly.
    pub lambda_half: GibbsParams,
    pub rotation: RotationSpec,
    pub energy_density: f64,
    pub energy_stderr: f64,
    pub samples_used: u64,
    /// Two-sided Hoeffding radius at the requested confidence (0 when exact).
    pub hoeffding_radius: f64,
}

fn check_rotation(backend: &dyn GibbsBackend, rot: &RotationSpec) -> Result<()> {
    let n = backend.problem().n;
    if rot.num_qubits() != n {
        return Err(Error::DimensionMismatch(n, rot.num_qubits()));
    }
    if !backend.problem().real {
        log::warn!("instance is not real symmetric; rounding uses real parts of complex amplitudes");
    }
    Ok(())
}

/// Materialise `x_i = sign Re⟨i|e^{E(λ/2)}U|0⟩` for all `i` and its exact energy density.
pub fn round_explicit(backend: &dyn GibbsBackend, lambda: &GibbsParams, rot: &RotationSpec) -> Result<RoundedSolution> {
    check_rotation(backend, rot)?;
    let n = backend.problem().n;
    if n > EXPLICIT_MAX_N {
        return Err(Error::CapExceeded { what: "explicit rounding qubits", needed: n as u128, cap: EXPLICIT_MAX_N as u128 });
    }
    let half = lambda.scaled(0.5);
    let ket = rot.ket();
    // e^{E(λ)/2} = e^{E(λ/2)}
    let signs: Vec<i8> = match backend.apply_exp_half(lambda, &ket.to_vector()) {
        Ok(v) => v.data.iter().map(|a| if a.re < 0.0 { -1 } else { 1 }).collect(),
        Err(Error::BackendCapability { .. }) => {
            let bras: Vec<Bits> = (0..1u64 << n).map(|i| Bits::from_index_mask(n, i)).collect();
            bras.par_chunks(1 << 10)
                .map(|chunk| backend.amplitudes(&half, chunk, &ket))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .map(|a| a.re_sign() as i8)
                .collect()
        }
        Err(e) => return Err(e),
    };
    let energy = energy_density_exact(&signs, &backend.problem().objective)?;
    Ok(RoundedSolution {
        mode: RoundingMode::Explicit,
        signs: Some(signs),
        lambda_half: half,
        rotation: rot.clone(),
        energy_density: energy,
        energy_stderr: 0.0,
        samples_used: 0,
        hoeffding_radius: 0.0,
    })
}

/// `2^{-n}⟨x|C|x⟩` by applying each Pauli term to the basis.
pub fn energy_density_exact(x: &[i8], c: &PauliOperator) -> Result<f64> {
    let n = c.num_qubits();
    if n > EXPLICIT_MAX_N {
        return Err(Error::CapExceeded { what: "explicit energy qubits", needed: n as u128, cap: EXPLICIT_MAX_N as u128 });
    }
    let d = 1usize << n;
    if x.len() != d {
        return Err(Error::DimensionMismatch(d, x.len()));
    }
    let total: f64 = c
        .terms()
        .map(|(p, coeff)| {
            let m = p.masks();
            // ⟨x|P|x⟩ = Σ_b x_{b⊕x} · phase(b) · x_b
            let s: Complex64 = (0..d)
                .into_par_iter()
                .map(|b| {
                    let (b2, ph) = m.apply(b as u64);
                    ph.to_complex() * (x[b] as f64 * x[b2 as usize] as f64)
                })
                .sum();
            coeff * s.re
        })
        .sum();
    Ok(total / d as f64)
}

/// `N = ⌈2‖α‖₁² ln(2/δ) / ε²⌉`.
pub fn mc_sample_count(alpha_l1: f64, eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((2.0 * alpha_l1 * alpha_l1 * (2.0 / delta).ln() / (eps * eps)).ceil().max(1.0) as u64)
}

/// Monte Carlo estimate of the energy density of the implicit rounded vector.
///
/// Each sample draws a uniform basis index `i` and evaluates
/// `X = x_i Σ_j α_j ⟨k_j|P_j|i⟩ x_{k_j}` from `m + 1` amplitude signs; `E[X]` is the
/// energy density and `|X| ≤ ‖α‖₁`.
pub fn energy_density_mc(
    backend: &dyn GibbsBackend,
    lambda: &GibbsParams,
    rot: &RotationSpec,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<RoundedSolution> {
    check_rotation(backend, rot)?;
    let problem = backend.problem();
    let n = problem.n;
    if n > 64 {
        return Err(Error::CapExceeded { what: "Monte Carlo rounding qubits", needed: n as u128, cap: 64 });
    }
    let alpha = &problem.objective;
    let alpha_l1 = alpha.pauli_l1();
    let samples = mc_sample_count(alpha_l1, eps, delta)?;
    let half = lambda.scaled(0.5);
    let ket = rot.ket();
    let terms: Vec<_> = alpha.terms().map(|(p, c)| (p.masks(), c)).collect();
    let top = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    let xs = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let i = rng.random::<u64>() & top;
            let mut bras = vec![i];
            let moves: Vec<(u64, Complex64)> = terms
                .iter()
                .map(|(m, _)| {
                    let (k, ph) = m.apply(i);
                    (k, ph.to_complex())
                })
                .collect();
            bras.extend(moves.iter().map(|m| m.0));
            bras.sort_unstable();
            bras.dedup();
            let bits: Vec<Bits> = bras.iter().map(|&b| Bits::from_index_mask(n, b)).collect();
            let amps = backend.amplitudes(&half, &bits, &ket)?;
            let sign = |b: u64| amps[bras.binary_search(&b).expect("requested")].re_sign();
            let xi = sign(i);
            let x: f64 = terms.iter().zip(&moves).map(|((_, c), (k, ph))| c * ph.re * sign(*k)).sum::<f64>() * xi;
            assert!(x.abs() <= alpha_l1 * (1.0 + 1e-12), "sample {x} exceeds the Hoeffding range {alpha_l1}");
            Ok(x)
        })
        .collect::<Result<Vec<f64>>>()?;

    let nf = samples as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = if samples > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
    Ok(RoundedSolution {
        mode: RoundingMode::Implicit,
        signs: None,
        lambda_half: half,
        rotation: rot.clone(),
        energy_density: mean,
        energy_stderr: (var / nf).sqrt(),
        samples_used: samples,
        hoeffding_radius: alpha_l1 * (2.0 * (2.0 / delta).ln() / nf).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarEstimate {
    pub value: f64,
    /// Spread of the per-state ratios over `√L′`.
    pub stderr: f64,
    pub states: usize,
}

/// Amplitude-rounding heuristic: random Gaussian states rounded entrywise to
/// `±2^{-n/2}`, then `Σ_l ⟨ψ_l|e^{E/2} C' e^{E/2}|ψ_l⟩ / Σ_l ⟨ψ_l|e^{E}|ψ_l⟩`.
pub fn haar_round_heuristic(
    backend: &dyn GibbsBackend,
    lambda: &GibbsParams,
    l_prime: usize,
    seed: u64,
) -> Result<HaarEstimate> {
    if l_prime == 0 {
        return Err(Error::InvalidArgument("need at least one random state".into()));
    }
    let problem = backend.problem();
    let n = problem.n;
    if n > EXPLICIT_MAX_N {
        return Err(Error::CapExceeded { what: "heuristic rounding qubits", needed: n as u128, cap: EXPLICIT_MAX_N as u128 });
    }
    let d = 1usize << n;
    let amp = (-(n as f64) * 0.5 * 2f64.ln()).exp();
    let per_state = (0..l_prime)
        .map(|l| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(l as u64);
            let psi: Vec<Complex64> = (0..d)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    Complex64::new(if g < 0.0 { -amp } else { amp }, 0.0)
                })
                .collect();
            let u = backend.apply_exp_half(lambda, &psi)?;
            let cu = apply_operator(&problem.objective, &u.data);
            let num: f64 = u.data.iter().zip(&cu).map(|(a, b)| (a.conj() * b).re).sum();
            let den: f64 = u.data.iter().map(|a| a.norm_sqr()).sum();
            Ok((num, den, 2.0 * u.log_scale))
        })
        .collect::<Result<Vec<_>>>()?;
    // Align scales before summing numerators and denominators.
    let top = log_sum_exp(per_state.iter().map(|s| s.2));
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b, ls) in &per_state {
        let w = (ls - top).exp();
        num += a * w;
        den += b * w;
    }
    if !(den > 0.0) {
        return Err(Error::Numerical("vanishing normalisation in heuristic rounding".into()));
    }
    let ratios: Vec<f64> = per_state.iter().map(|(a, b, _)| a / b).collect();
    let mean = ratios.iter().sum::<f64>() / l_prime as f64;
    let var = if l_prime > 1 {
        ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (l_prime - 1) as f64
    } else {
        0.0
    };
    Ok(HaarEstimate { value: num / den, stderr: (var / l_prime as f64).sqrt(), states: l_prime })
}

fn apply_operator(op: &PauliOperator, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (p, c) in op.terms() {
        let m = p.masks();
        for (b, a) in v.iter().enumerate() {
            let (b2, ph) = m.apply(b as u64);
            out[b2 as usize] += ph.to_complex() * a * c;
        }
    }
    out
}
