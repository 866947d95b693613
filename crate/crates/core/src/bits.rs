//! Fixed-length bit vectors over GF(2).
//!
//! Qubit `j` (0-based) is stored at bit `j`. Serialization writes qubit 0 as the
//! leftmost character. When a bit vector is mapped onto a computational basis index,
//! qubit 0 becomes the most significant bit, matching the Kronecker product order
//! `A_1 ⊗ A_2 ⊗ ...`.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut b = Bits::zeros(len);
        for &i in ones {
            b.set(i, true);
        }
        b
    }

    pub fn from_bools(bools: &[bool]) -> Self {
        let mut b = Bits::zeros(bools.len());
        for (i, &v) in bools.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    /// Parse a `0`/`1` string, leftmost character is qubit 0.
    pub fn parse(s: &str) -> Option<Self> {
        let mut b = Bits::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i, true),
                _ => return None,
            }
        }
        Some(b)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let m = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= m;
        } else {
            self.words[i >> 6] &= !m;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &Bits) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        let mut r = self.clone();
        r.xor_assign(other);
        r
    }

    pub fn and(&self, other: &Bits) -> Bits {
        debug_assert_eq!(self.len, other.len);
        Bits {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn or(&self, other: &Bits) -> Bits {
        debug_assert_eq!(self.len, other.len);
        Bits {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    /// Popcount of `self & other`.
    #[inline]
    pub fn and_count(&self, other: &Bits) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// GF(2) inner product.
    #[inline]
    pub fn dot(&self, other: &Bits) -> bool {
        self.and_count(other) & 1 == 1
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        self.ones().next()
    }

    pub fn last_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate().rev() {
            if w != 0 {
                return Some(wi * 64 + 63 - w.leading_zeros() as usize);
            }
        }
        None
    }

    /// Basis-index mask (qubit 0 is the most significant of `len` bits). Requires `len <= 64`.
    pub fn index_mask(&self) -> u64 {
        assert!(self.len <= 64, "basis index masks need at most 64 qubits");
        let mut m = 0u64;
        for j in self.ones() {
            m |= 1u64 << (self.len - 1 - j);
        }
        m
    }

    /// Inverse of [`Bits::index_mask`].
    pub fn from_index_mask(len: usize, mask: u64) -> Bits {
        let mut b = Bits::zeros(len);
        for j in 0..len {
            if (mask >> (len - 1 - j)) & 1 == 1 {
                b.set(j, true);
            }
        }
        b
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bits::parse(&s).ok_or_else(|| de::Error::custom(format!("invalid bit string {s:?}")))
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

/// Row-reduce a list of vectors over GF(2) and return an independent basis of their
/// span in reduced echelon form (pivots are the lowest set bit of each row).
pub fn reduced_basis(rows: &[Bits]) -> Vec<Bits> {
    let mut basis: Vec<Bits> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for b in &basis {
            let p = b.first_one().expect("basis rows are nonzero");
            if v.get(p) {
                v.xor_assign(b);
            }
        }
        if v.is_zero() {
            continue;
        }
        let p = v.first_one().unwrap();
        for b in basis.iter_mut() {
            if b.get(p) {
                b.xor_assign(&v);
            }
        }
        basis.push(v);
    }
    basis.sort_by_key(|b| b.first_one());
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_roundtrip() {
        let b = Bits::parse("0110100").unwrap();
        assert_eq!(b.to_string(), "0110100");
        assert_eq!(b.ones().collect::<Vec<_>>(), vec![1, 2, 4]);
        assert!(Bits::parse("01a").is_none());
    }

    #[test]
    fn index_mask_is_big_endian() {
        let b = Bits::parse("100").unwrap();
        assert_eq!(b.index_mask(), 0b100);
        assert_eq!(Bits::from_index_mask(3, 0b001).to_string(), "001");
    }

    #[test]
    fn words_beyond_64() {
        let mut b = Bits::zeros(130);
        b.set(129, true);
        b.set(3, true);
        assert_eq!(b.count_ones(), 2);
        assert_eq!(b.last_one(), Some(129));
        assert_eq!(b.ones().collect::<Vec<_>>(), vec![3, 129]);
    }

    #[test]
    fn reduced_basis_drops_dependent_rows() {
        let rows: Vec<Bits> = ["110", "011", "101", "000"]
            .iter()
            .map(|s| Bits::parse(s).unwrap())
            .collect();
        let basis = reduced_basis(&rows);
        assert_eq!(basis.len(), 2);
    }
}
