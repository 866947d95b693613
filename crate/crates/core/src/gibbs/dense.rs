use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{
    Amplitude, BackendKind, ExpectationResult, GibbsBackend, GibbsParams, GibbsProblem, Observable, ProductState,
    ScaledVector,
};
use crate::bits::Bits;
use crate::dense::{operator_dense, operator_dense_real, DENSE_MAX_N};
use crate::error::{Error, Result};
use crate::pauli::PauliOperator;

/// Exact Gibbs oracle by full diagonalisation.
pub struct DenseBackend {
    problem: GibbsProblem,
}

struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
    max: f64,
}

impl DenseBackend {
    pub fn new(problem: GibbsProblem) -> Result<Self> {
        if problem.n > DENSE_MAX_N {
            return Err(Error::BackendCapability { backend: "dense", reason: format!("n = {} > {DENSE_MAX_N}", problem.n) });
        }
        Ok(DenseBackend { problem })
    }

    fn spectrum(&self, lambda: &GibbsParams) -> Result<Spectrum> {
        let e = self.problem.exponent(lambda)?;
        let (values, vectors) = if e.is_real_symmetric() {
            let eig = SymmetricEigen::new(operator_dense_real(&e)?);
            (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors.map(|v| Complex64::new(v, 0.0)))
        } else {
            let eig = SymmetricEigen::new(operator_dense(&e)?);
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite eigenvalue in dense backend".into()));
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Spectrum { values, vectors, max })
    }

    /// `exp(E(λ))` applied to `v`, as `(vector, log_scale)`, with `scale` multiplying `E`.
    fn apply_exp(&self, lambda: &GibbsParams, scale: f64, v: &[Complex64]) -> Result<ScaledVector> {
        let d = 1usize << self.problem.n;
        if v.len() != d {
            return Err(Error::DimensionMismatch(d, v.len()));
        }
        let sp = self.spectrum(lambda)?;
        let v = DVector::from_column_slice(v);
        let mut coeffs = sp.vectors.adjoint() * v;
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= (scale * (sp.values[k] - sp.max)).exp();
        }
        let out = &sp.vectors * coeffs;
        Ok(ScaledVector { data: out.iter().copied().collect(), log_scale: scale * sp.max })
    }
}

/// `tr(P ρ)` for every term of `op` given the dense `ρ`.
pub(crate) fn dense_expectation(op: &PauliOperator, rho: &DMatrix<Complex64>) -> f64 {
    let d = rho.nrows();
    let mut total = Complex64::new(0.0, 0.0);
    for (p, c) in op.terms() {
        let m = p.masks();
        let mut acc = Complex64::new(0.0, 0.0);
        for b in 0..d {
            // tr(Pρ) = Σ_b ⟨b⊕x|P|b⟩ ρ[b, b⊕x]
            let (b2, ph) = m.apply(b as u64);
            acc += ph.to_complex() * rho[(b, b2 as usize)];
        }
        total += acc * c;
    }
    total.re
}

impl GibbsBackend for DenseBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Dense
    }

    fn problem(&self) -> &GibbsProblem {
        &self.problem
    }

    fn expectations(&self, lambda: &GibbsParams, observables: &[Observable]) -> Result<ExpectationResult> {
        let sp = self.spectrum(lambda)?;
        let weights: Vec<f64> = sp.values.iter().map(|w| (w - sp.max).exp()).collect();
        let z: f64 = weights.iter().sum();
        let mut half = sp.vectors.clone();
        for (k, mut col) in half.column_iter_mut().enumerate() {
            col *= Complex64::new((weights[k] / z).sqrt(), 0.0);
        }
        let rho = &half * half.adjoint();
        let values = observables
            .iter()
            .map(|o| Ok(dense_expectation(&self.problem.observable_operator(o)?, &rho)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExpectationResult { stderr: vec![0.0; values.len()], values, log_partition: sp.max + z.ln() })
    }

    fn log_partition(&self, lambda: &GibbsParams) -> Result<f64> {
        let sp = self.spectrum(lambda)?;
        Ok(sp.max + sp.values.iter().map(|w| (w - sp.max).exp()).sum::<f64>().ln())
    }

    fn amplitudes(&self, lambda_half: &GibbsParams, bras: &[Bits], ket: &ProductState) -> Result<Vec<Amplitude>> {
        if ket.num_qubits() != self.problem.n {
            return Err(Error::DimensionMismatch(self.problem.n, ket.num_qubits()));
        }
        let u = self.apply_exp(lambda_half, 1.0, &ket.to_vector())?;
        bras.iter()
            .map(|b| {
                if b.len() != self.problem.n {
                    return Err(Error::DimensionMismatch(self.problem.n, b.len()));
                }
                Ok(Amplitude { value: u.data[b.index_mask() as usize], log_scale: u.log_scale })
            })
            .collect()
    }

    fn apply_exp_half(&self, lambda: &GibbsParams, v: &[Complex64]) -> Result<ScaledVector> {
        self.apply_exp(lambda, 0.5, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::purity;
    use crate::instances::Instance;
    use crate::pauli::ConstraintSet;
    use approx::assert_relative_eq;

    fn z1_problem(n: usize) -> GibbsProblem {
        let mut labels = String::from("Z");
        labels.push_str(&"I".repeat(n - 1));
        let op = PauliOperator::from_labels(&[(labels.as_str(), 1.0)]).unwrap();
        GibbsProblem::new(&Instance::from_operator(op), ConstraintSet::empty(n)).unwrap()
    }

    #[test]
    fn maximally_mixed_at_zero() {
        let b = DenseBackend::new(z1_problem(3)).unwrap();
        let lam = GibbsParams::zeros(0);
        let r = b.expectations(&lam, &[Observable::Objective]).unwrap();
        assert!(r.values[0].abs() < 1e-14);
        assert_relative_eq!(r.log_partition, 3.0 * 2f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(purity(&b, &lam).unwrap(), 0.125, epsilon = 1e-12);
    }

    #[test]
    fn single_z_closed_forms() {
        let n = 3;
        let b = DenseBackend::new(z1_problem(n)).unwrap();
        let theta = 0.7;
        let lam = GibbsParams { lambda_c: theta, lambda_a: vec![] };
        let expect = ((1 << (n - 1)) as f64 * (theta.exp() + (-theta).exp())).ln();
        assert_relative_eq!(b.log_partition(&lam).unwrap(), expect, epsilon = 1e-12);
        let r = b.expectations(&lam, &[Observable::Objective]).unwrap();
        assert_relative_eq!(r.values[0], theta.tanh(), epsilon = 1e-12);
        let amp = b.amplitudes(&lam, &[Bits::zeros(n)], &ProductState::zeros(n)).unwrap();
        assert_relative_eq!(amp[0].to_complex().re, theta.exp(), epsilon = 1e-12);
        let big = GibbsParams { lambda_c: 60.0, lambda_a: vec![] };
        assert_relative_eq!(purity(&b, &big).unwrap(), 0.25, epsilon = 1e-12);
    }
}
