//! Pauli strings and qubit regions.
//!
//! A single-qubit Pauli is encoded by two bits `(x, z)` with code `2z + x`:
//! I = 0, X = 1, Z = 2, Y = 3. The same two bits are the Bell-measurement
//! outcome of `(H ⊗ I)·CNOT`, so Pauli and Bell sampling share one encoding.
//! A string's integer index is `Σ_q code_q · 4^q`; its text form lists qubit 0
//! first.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum PauliOp {
    I = 0,
    X = 1,
    Z = 2,
    Y = 3,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Z, PauliOp::Y];

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PauliOp::I),
            1 => Some(PauliOp::X),
            2 => Some(PauliOp::Z),
            3 => Some(PauliOp::Y),
            _ => None,
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        Self::ALL[(x as usize) | ((z as usize) << 1)]
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn x_bit(self) -> bool {
        self.code() & 1 == 1
    }

    pub fn z_bit(self) -> bool {
        self.code() & 2 == 2
    }

    pub fn symbol(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Z => 'Z',
            PauliOp::Y => 'Y',
        }
    }

    pub fn matrix(self) -> Matrix2<C64> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            PauliOp::I => Matrix2::new(l, o, o, l),
            PauliOp::X => Matrix2::new(o, l, l, o),
            PauliOp::Z => Matrix2::new(l, o, o, -l),
            PauliOp::Y => Matrix2::new(o, -i, i, o),
        }
    }
}

/// Tensor product of single-qubit Paulis, without phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    ops: Vec<PauliOp>,
}

impl PauliString {
    pub fn new(ops: Vec<PauliOp>) -> Self {
        Self { ops }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            ops: vec![PauliOp::I; n_qubits],
        }
    }

    /// Inverse of [`PauliString::index`].
    pub fn from_index(n_qubits: usize, index: u64) -> Result<Self> {
        if n_qubits > 32 {
            return Err(Error::SizeGuard {
                what: "integer Pauli index",
                limit: 32,
                got: n_qubits,
            });
        }
        if n_qubits < 32 && index >> (2 * n_qubits) != 0 {
            return Err(Error::invalid(format!(
                "index {index} too large for {n_qubits} qubits"
            )));
        }
        let ops = (0..n_qubits)
            .map(|q| PauliOp::ALL[((index >> (2 * q)) & 3) as usize])
            .collect();
        Ok(Self { ops })
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[PauliOp] {
        &self.ops
    }

    pub fn op(&self, qubit: usize) -> PauliOp {
        self.ops[qubit]
    }

    pub fn set(&mut self, qubit: usize, op: PauliOp) {
        self.ops[qubit] = op;
    }

    pub fn weight(&self) -> usize {
        self.ops.iter().filter(|&&o| o != PauliOp::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    pub fn y_count(&self) -> usize {
        self.ops.iter().filter(|&&o| o == PauliOp::Y).count()
    }

    pub fn index(&self) -> Option<u64> {
        if self.ops.len() > 32 {
            return None;
        }
        Some(
            self.ops
                .iter()
                .enumerate()
                .fold(0u64, |acc, (q, o)| acc | ((o.code() as u64) << (2 * q))),
        )
    }

    /// X and Z bit masks in dense-state index space, where qubit `q` is bit `n-1-q`.
    /// Only meaningful for strings on at most 63 qubits.
    pub fn index_masks(&self) -> (usize, usize) {
        let n = self.ops.len();
        debug_assert!(n < usize::BITS as usize);
        let mut x = 0usize;
        let mut z = 0usize;
        for (q, o) in self.ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            if o.x_bit() {
                x |= bit;
            }
            if o.z_bit() {
                z |= bit;
            }
        }
        (x, z)
    }

    /// Build a string on `n_qubits` from dense-index masks (see [`PauliString::index_masks`]).
    pub fn from_index_masks(n_qubits: usize, x: usize, z: usize) -> Self {
        let ops = (0..n_qubits)
            .map(|q| {
                let bit = 1usize << (n_qubits - 1 - q);
                PauliOp::from_bits(x & bit != 0, z & bit != 0)
            })
            .collect();
        Self { ops }
    }

    /// Operators on the qubits of `region`, in region order.
    pub fn restrict(&self, region: &Region) -> Result<PauliString> {
        if region.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                got: region.n_qubits(),
            });
        }
        Ok(Self {
            ops: region.indices().iter().map(|&q| self.ops[q]).collect(),
        })
    }

    /// Keep the operators inside `region` and set the rest to identity.
    pub fn mask(&self, region: &Region) -> Result<PauliString> {
        if region.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                got: region.n_qubits(),
            });
        }
        let mut out = Self::identity(self.n_qubits());
        for &q in region.indices() {
            out.ops[q] = self.ops[q];
        }
        Ok(out)
    }

    pub fn tensor(&self, other: &PauliString) -> PauliString {
        let mut ops = self.ops.clone();
        ops.extend_from_slice(&other.ops);
        Self { ops }
    }

    /// True when the two strings commute as operators.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .ops
            .iter()
            .zip(&other.ops)
            .filter(|(a, b)| **a != PauliOp::I && **b != PauliOp::I && a != b)
            .count();
        anti % 2 == 0
    }

    /// Dense `2^N × 2^N` matrix; limited to 12 qubits.
    pub fn dense_matrix(&self) -> Result<DMatrix<C64>> {
        let n = self.n_qubits();
        if n > 12 {
            return Err(Error::SizeGuard {
                what: "dense Pauli matrix",
                limit: 12,
                got: n,
            });
        }
        let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for o in &self.ops {
            m = m.kronecker(&o.matrix());
        }
        Ok(m)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("empty Pauli string"));
        }
        let ops = s
            .chars()
            .enumerate()
            .map(|(position, c)| match c.to_ascii_uppercase() {
                'I' => Ok(PauliOp::I),
                'X' => Ok(PauliOp::X),
                'Z' => Ok(PauliOp::Z),
                'Y' => Ok(PauliOp::Y),
                symbol => Err(Error::InvalidSymbol { symbol, position }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ops })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.ops {
            write!(f, "{}", o.symbol())?;
        }
        Ok(())
    }
}

/// Sorted, duplicate-free set of qubit indices of an `n_qubits` system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    n_qubits: usize,
    indices: Vec<usize>,
}

impl Region {
    pub fn new(n_qubits: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid(format!(
                    "duplicate qubit {} in region",
                    w[0]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n_qubits {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    n_qubits,
                });
            }
        }
        Ok(Self { n_qubits, indices })
    }

    pub fn interval(n_qubits: usize, start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::invalid(format!("empty interval {start}..{end}")));
        }
        Self::new(n_qubits, (start..end).collect())
    }

    pub fn full(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            indices: (0..n_qubits).collect(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, qubit: usize) -> bool {
        self.indices.binary_search(&qubit).is_ok()
    }

    pub fn complement(&self) -> Region {
        let indices = (0..self.n_qubits).filter(|q| !self.contains(*q)).collect();
        Region {
            n_qubits: self.n_qubits,
            indices,
        }
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        let mut idx: Vec<usize> = self.indices.iter().chain(&other.indices).copied().collect();
        idx.sort_unstable();
        idx.dedup();
        Ok(Region {
            n_qubits: self.n_qubits,
            indices: idx,
        })
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.indices.iter().all(|q| !other.contains(*q))
    }

    /// `Some((start, end))` when the region is a non-empty contiguous block.
    pub fn as_interval(&self) -> Option<(usize, usize)> {
        let (&first, &last) = (self.indices.first()?, self.indices.last()?);
        (last - first + 1 == self.indices.len()).then_some((first, last + 1))
    }

    pub fn mask_vec(&self) -> Vec<bool> {
        let mut m = vec![false; self.n_qubits];
        for &q in &self.indices {
            m[q] = true;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip_and_codes() {
        let p: PauliString = "IXZY".parse().unwrap();
        assert_eq!(p.to_string(), "IXZY");
        assert_eq!(p.index(), Some(1 * 4 + 2 * 16 + 3 * 64));
        assert_eq!(PauliString::from_index(4, p.index().unwrap()).unwrap(), p);
        assert!(matches!(
            "IXA".parse::<PauliString>(),
            Err(Error::InvalidSymbol {
                symbol: 'A',
                position: 2
            })
        ));
    }

    #[test]
    fn bits_match_bell_outcomes() {
        assert_eq!(PauliOp::from_bits(false, false), PauliOp::I);
        assert_eq!(PauliOp::from_bits(true, false), PauliOp::X);
        assert_eq!(PauliOp::from_bits(false, true), PauliOp::Z);
        assert_eq!(PauliOp::from_bits(true, true), PauliOp::Y);
    }

    #[test]
    fn y_is_i_x_z() {
        let i = C64::new(0.0, 1.0);
        let diff = PauliOp::Y.matrix() - PauliOp::X.matrix() * PauliOp::Z.matrix() * i;
        assert!(diff.norm() < 1e-15);
    }

    #[test]
    fn masks_are_big_endian() {
        let p: PauliString = "XIZ".parse().unwrap();
        assert_eq!(p.index_masks(), (0b100, 0b001));
        assert_eq!(PauliString::from_index_masks(3, 0b100, 0b001), p);
    }

    #[test]
    fn region_ops() {
        let r = Region::new(5, vec![3, 1]).unwrap();
        assert_eq!(r.indices(), &[1, 3]);
        assert_eq!(r.complement().indices(), &[0, 2, 4]);
        assert_eq!(r.as_interval(), None);
        assert_eq!(
            Region::interval(5, 1, 4).unwrap().as_interval(),
            Some((1, 4))
        );
        assert!(Region::new(3, vec![1, 1]).is_err());
        assert!(Region::new(3, vec![3]).is_err());
        let p: PauliString = "XYZXY".parse().unwrap();
        assert_eq!(p.restrict(&r).unwrap().to_string(), "YX");
        assert_eq!(p.mask(&r).unwrap().to_string(), "IYIXI");
    }

    #[test]
    fn commutation() {
        let a: PauliString = "XX".parse().unwrap();
        let b: PauliString = "ZZ".parse().unwrap();
        let c: PauliString = "ZI".parse().unwrap();
        assert!(a.commutes_with(&b));
        assert!(!a.commutes_with(&c));
    }
}
