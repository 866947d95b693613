//! Pauli strings in symplectic form, real Pauli sums, and the diagonal subgroup machinery
//! that decides which Z-string constraints a relaxation needs.

mod group;
mod operator;
mod string;

pub use group::{
    diagonal_group, enumerate_traceless, krylov_constraints, ConstraintSet, DiagonalGroup, KrylovConstraints,
    DEFAULT_ENUMERATION_CAP,
};
pub use operator::{commutation_report, operators_commute, CommutationReport, PauliOperator};
pub use string::{PauliMasks, PauliString, Phase, SignedPauli};

pub(crate) use string::site_mul;
