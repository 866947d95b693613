//! Dense matrix forms of Pauli objects, used as the exact oracle at small `n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliOperator, PauliString};

/// Largest qubit count for which dense matrices are built.
pub const DENSE_MAX_N: usize = 12;

fn check_n(n: usize) -> Result<()> {
    if n > DENSE_MAX_N {
        return Err(Error::BackendCapability { backend: "dense", reason: format!("n = {n} > {DENSE_MAX_N}") });
    }
    Ok(())
}

/// `2^n × 2^n` complex matrix of a single Pauli string.
pub fn pauli_dense(p: &PauliString) -> DMatrix<Complex64> {
    let n = p.num_qubits();
    let d = 1usize << n;
    let m = p.masks();
    let mut out = DMatrix::zeros(d, d);
    for b in 0..d as u64 {
        let (b2, ph) = m.apply(b);
        out[(b2 as usize, b as usize)] = ph.to_complex();
    }
    out
}

/// Complex dense form of a Pauli sum.
pub fn operator_dense(op: &PauliOperator) -> Result<DMatrix<Complex64>> {
    let n = op.num_qubits();
    check_n(n)?;
    let d = 1usize << n;
    let mut out = DMatrix::zeros(d, d);
    for (p, c) in op.terms() {
        let m = p.masks();
        for b in 0..d as u64 {
            let (b2, ph) = m.apply(b);
            out[(b2 as usize, b as usize)] += ph.to_complex() * c;
        }
    }
    Ok(out)
}

/// Real dense form; fails if any term has an odd number of `Y` sites.
pub fn operator_dense_real(op: &PauliOperator) -> Result<DMatrix<f64>> {
    let n = op.num_qubits();
    check_n(n)?;
    if !op.is_real_symmetric() {
        return Err(Error::InvalidArgument("operator has imaginary matrix entries".into()));
    }
    let d = 1usize << n;
    let mut out = DMatrix::zeros(d, d);
    for (p, c) in op.terms() {
        let m = p.masks();
        for b in 0..d as u64 {
            let (b2, ph) = m.apply(b);
            out[(b2 as usize, b as usize)] += ph.real_sign() * c;
        }
    }
    Ok(out)
}

/// Pauli coefficients `tr(P a) / 2^k` of a real symmetric matrix.
pub fn decompose_dense(a: &DMatrix<f64>) -> Result<PauliOperator> {
    let d = a.nrows();
    if d != a.ncols() || d == 0 || !d.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("matrix must be square with power-of-two size, got {}x{}", d, a.ncols())));
    }
    let k = d.trailing_zeros() as usize;
    if k > 6 {
        return Err(Error::InvalidArgument(format!("decomposition limited to 6 qubits, got {k}")));
    }
    let scale = a.amax().max(1.0);
    if (a - a.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let mut op = PauliOperator::new(k);
    for xm in 0..d as u64 {
        for zm in 0..d as u64 {
            let p = PauliString::from_bits(
                crate::bits::Bits::from_index_mask(k, xm),
                crate::bits::Bits::from_index_mask(k, zm),
            )?;
            // Odd-Y strings are antisymmetric and cannot appear in a real symmetric matrix.
            if !p.is_real() {
                continue;
            }
            let m = p.masks();
            let mut tr = 0.0;
            for b in 0..d as u64 {
                let (b2, ph) = m.apply(b);
                // tr(P a) = Σ_b ⟨b|P a|b⟩ = Σ_b Σ_c P[b,c] a[c,b]; P[b2,b] = ph, P symmetric here.
                tr += ph.real_sign() * a[(b as usize, b2 as usize)];
            }
            let c = tr / d as f64;
            if c.abs() > 1e-14 * scale {
                op.add_term(p, c)?;
            }
        }
    }
    Ok(op)
}

/// Eigen-decomposition of a Hermitian operator given by Pauli terms.
pub enum DenseEigen {
    Real(SymmetricEigen<f64, nalgebra::Dyn>),
    Complex(SymmetricEigen<Complex64, nalgebra::Dyn>),
}

impl DenseEigen {
    pub fn new(op: &PauliOperator) -> Result<Self> {
        if op.is_real_symmetric() {
            Ok(DenseEigen::Real(SymmetricEigen::new(operator_dense_real(op)?)))
        } else {
            Ok(DenseEigen::Complex(SymmetricEigen::new(operator_dense(op)?)))
        }
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        match self {
            DenseEigen::Real(e) => &e.eigenvalues,
            DenseEigen::Complex(e) => &e.eigenvalues,
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().max()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

/// Largest eigenvalue of a Hermitian Pauli sum.
pub fn max_eigenvalue(op: &PauliOperator) -> Result<f64> {
    Ok(DenseEigen::new(op)?.max_eigenvalue())
}

/// Operator norm of a Hermitian Pauli sum.
pub fn spectral_norm(op: &PauliOperator) -> Result<f64> {
    Ok(DenseEigen::new(op)?.spectral_norm())
}

/// Operator norm of a real symmetric matrix.
pub fn symmetric_norm(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Kronecker product `a ⊗ b` (first factor is the most significant qubit block).
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}
