//! Relaxed Goemans–Williamson SDP values for Pauli-sparse QUBO cost matrices.
//!
//! The solver never forms the `2^n × 2^n` SDP variable. It searches over Gibbs states
//! `σ(λ) ∝ exp(λ_C·C/‖C‖ + Σ_A λ_A Z_A)` with Hamiltonian updates, using one of three
//! backends to evaluate expectations: exact dense linear algebra, a stochastic
//! matrix-free estimator, or an exact contraction for commuting 1D instances.

pub mod bits;
pub mod certify;
pub mod dense;
pub mod error;
pub mod gibbs;
pub mod hu;
pub mod instances;
pub mod pauli;
pub mod rounding;
pub mod sparsifier;

pub use error::{Error, Result};
