use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

/// A unit phase `i^k`, `k ∈ {0,1,2,3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        self.0 & 1 == 0
    }

    /// Real value of a real phase; panics on `±i`.
    pub fn real_sign(self) -> f64 {
        match self.0 {
            0 => 1.0,
            2 => -1.0,
            _ => panic!("phase {self:?} is not real"),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) & 3)
    }
}

/// An `n`-qubit Pauli word `P_(x,z) = ⊗_j i^{x_j z_j} X_j^{x_j} Z_j^{z_j}`.
///
/// Under this convention every string is Hermitian with eigenvalues `±1`; a site with
/// `x_j = z_j = 1` is the usual `Y`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    x: Bits,
    z: Bits,
}

/// A Pauli string with an explicit unit phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedPauli {
    pub phase: Phase,
    pub pauli: PauliString,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { x: Bits::zeros(n), z: Bits::zeros(n) }
    }

    pub fn from_bits(x: Bits, z: Bits) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch(x.len(), z.len()));
        }
        Ok(PauliString { x, z })
    }

    /// Diagonal string `Z_A` for the qubits set in `z`.
    pub fn z_string(z: Bits) -> Self {
        let n = z.len();
        PauliString { x: Bits::zeros(n), z }
    }

    /// Single-qubit operator `op ∈ {I,X,Y,Z}` on qubit `q`.
    pub fn single(n: usize, q: usize, op: char) -> Result<Self> {
        let mut p = PauliString::identity(n);
        p.set_site(q, op)?;
        Ok(p)
    }

    /// Build from `(qubit, op)` pairs.
    pub fn from_sites(n: usize, sites: &[(usize, char)]) -> Result<Self> {
        let mut p = PauliString::identity(n);
        for &(q, op) in sites {
            if q >= n {
                return Err(Error::InvalidPauli(format!("qubit {q} out of range for n={n}")));
            }
            p.set_site(q, op)?;
        }
        Ok(p)
    }

    fn set_site(&mut self, q: usize, op: char) -> Result<()> {
        let (x, z) = match op {
            'I' => (false, false),
            'X' => (true, false),
            'Y' => (true, true),
            'Z' => (false, true),
            _ => return Err(Error::InvalidPauli(format!("unknown site operator {op:?}"))),
        };
        self.x.set(q, x);
        self.z.set(q, z);
        Ok(())
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn x(&self) -> &Bits {
        &self.x
    }

    #[inline]
    pub fn z(&self) -> &Bits {
        &self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn is_diagonal(&self) -> bool {
        self.x.is_zero()
    }

    /// Number of `Y` sites.
    pub fn y_count(&self) -> usize {
        self.x.and_count(&self.z)
    }

    /// Real symmetric iff the `Y` count is even.
    pub fn is_real(&self) -> bool {
        self.y_count() % 2 == 0
    }

    pub fn weight(&self) -> usize {
        self.x.or(&self.z).count_ones()
    }

    pub fn support(&self) -> Bits {
        self.x.or(&self.z)
    }

    /// Site operator as `(x, z)` bits.
    #[inline]
    pub fn site(&self, q: usize) -> (bool, bool) {
        (self.x.get(q), self.z.get(q))
    }

    pub fn site_char(&self, q: usize) -> char {
        match self.site(q) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    /// Product `self · other` with exact phase tracking.
    pub fn mul(&self, other: &PauliString) -> Result<SignedPauli> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> SignedPauli {
        let x = self.x.xor(&other.x);
        let z = self.z.xor(&other.z);
        // X^a Z^b X^c Z^d = (-1)^{b·c} X^{a+c} Z^{b+d}; the i^{xz} factors convert to and from Y.
        let e = self.y_count() as i64 + other.y_count() as i64 + 2 * self.z.and_count(&other.x) as i64
            - x.and_count(&z) as i64;
        SignedPauli { phase: Phase::from_exponent(e), pauli: PauliString { x, z } }
    }

    /// Symplectic test: true iff the two matrices commute.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &PauliString) -> bool {
        (self.x.and_count(&other.z) + self.z.and_count(&other.x)) % 2 == 0
    }

    /// `P|b⟩ = phase·|b'⟩` with `b' = b XOR x`. Requires `n <= 63`.
    pub fn apply_to_basis(&self, b: u64) -> Result<(u64, Phase)> {
        let n = self.num_qubits();
        if n > 63 || b >> n != 0 {
            return Err(Error::IndexOutOfRange { index: b, n });
        }
        Ok(self.masks().apply(b))
    }

    /// Precomputed basis-index masks for fast repeated application.
    pub fn masks(&self) -> PauliMasks {
        PauliMasks {
            x: self.x.index_mask(),
            z: self.z.index_mask(),
            y_phase: Phase::from_exponent(self.y_count() as i64),
        }
    }

    fn check_dim(&self, other: &PauliString) -> Result<()> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::DimensionMismatch(self.num_qubits(), other.num_qubits()));
        }
        Ok(())
    }

    /// Lowest and highest qubit touched, or `None` for the identity.
    pub fn span(&self) -> Option<(usize, usize)> {
        let s = self.support();
        Some((s.first_one()?, s.last_one()?))
    }
}

/// Basis-index form of a Pauli string for matrix-free application.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliMasks {
    pub x: u64,
    pub z: u64,
    pub y_phase: Phase,
}

impl PauliMasks {
    /// `P|b⟩ = i^{#Y} (-1)^{|z ∧ b|} |b ⊕ x⟩`.
    #[inline]
    pub fn apply(&self, b: u64) -> (u64, Phase) {
        let sign = if (self.z & b).count_ones() & 1 == 1 { Phase::MINUS_ONE } else { Phase::ONE };
        (b ^ self.x, self.y_phase * sign)
    }

    /// Matrix element `⟨b ⊕ x| P |b⟩` as a complex number.
    #[inline]
    pub fn phase_at(&self, b: u64) -> Complex64 {
        self.apply(b).1.to_complex()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.num_qubits() {
            write!(f, "{}", self.site_char(q))?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `"XIZY"` style labels; leftmost character is qubit 0.
    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut p = PauliString::identity(n);
        for (q, c) in s.chars().enumerate() {
            p.set_site(q, c)?;
        }
        Ok(p)
    }
}

/// Single-qubit Pauli product table on `(x,z)` codes `0=I, 1=X, 2=Z, 3=Y`
/// (code = x + 2z). Returns `(code, phase exponent)`.
#[inline]
pub(crate) fn site_mul(a: u8, b: u8) -> (u8, u8) {
    let (ax, az) = (a & 1, a >> 1);
    let (bx, bz) = (b & 1, b >> 1);
    let (cx, cz) = (ax ^ bx, az ^ bz);
    let e = (ax & az) as i8 + (bx & bz) as i8 + 2 * (az & bx) as i8 - (cx & cz) as i8;
    (cx | (cz << 1), e.rem_euclid(4) as u8)
}
