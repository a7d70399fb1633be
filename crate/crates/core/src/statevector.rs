//! Dense statevectors and density operators.
//!
//! Amplitude index bit `N-1-q` holds qubit `q`, so qubit 0 is the most
//! significant bit and every prefix of qubits owns a contiguous slice.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gates;
use crate::pauli::{PauliString, Region};

/// Largest register a dense state may hold.
pub const MAX_DENSE_QUBITS: usize = 30;
const UNITARY_TOL: f64 = 1e-12;
const STATE_MAGIC: &[u8; 4] = b"MGL1";

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n_qubits: usize,
    amps: Vec<C64>,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::SizeGuard {
            what: "dense state",
            limit: MAX_DENSE_QUBITS,
            got: n,
        });
    }
    Ok(())
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Phase of `P|i⟩ = phase · |i ⊕ x⟩` for a string with `y_count` Y factors.
pub(crate) fn pauli_phase(y_count: usize, z_mask: usize, i: usize) -> C64 {
    let base = match y_count % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    if (z_mask & i).count_ones() % 2 == 1 {
        -base
    } else {
        base
    }
}

impl DenseState {
    /// Normalises `amps`; its length must be a power of two.
    pub fn new(mut amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_size(n_qubits)?;
        let norm = norm_sqr(&amps).sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::invalid("state has zero or non-finite norm"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n_qubits, amps })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        if index >= 1 << n_qubits {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Haar-random state from normalised complex Gaussian amplitudes.
    pub fn haar_random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_size(n_qubits)?;
        let amps = (0..1usize << n_qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::new(amps)
    }

    /// Random state with real Gaussian amplitudes.
    pub fn random_real<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_size(n_qubits)?;
        let amps = (0..1usize << n_qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), 0.0))
            .collect();
        Self::new(amps)
    }

    /// Tensor product of single-qubit states, qubit 0 first.
    pub fn product(qubits: &[[C64; 2]]) -> Result<Self> {
        check_size(qubits.len())?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for q in qubits {
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        Self::new(amps)
    }

    /// `((|0⟩ + e^{iπ/4}|1⟩)/√2)^{⊗N}`.
    pub fn t_state(n_qubits: usize) -> Result<Self> {
        let q = [
            C64::new(1.0, 0.0),
            C64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
        ];
        Self::product(&vec![q; n_qubits])
    }

    pub fn ghz(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        amps[(1 << n_qubits) - 1] = C64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    pub fn inner(&self, other: &DenseState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &DenseState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    fn check_site(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Apply a single-qubit unitary to qubit `q`.
    pub fn apply_1q(&mut self, u: &Matrix2<C64>, q: usize) -> Result<()> {
        self.check_site(q)?;
        if !gates::is_unitary2(u, UNITARY_TOL) {
            return Err(Error::invalid("single-qubit gate is not unitary"));
        }
        apply_1q_raw(&mut self.amps, self.n_qubits, u, q);
        Ok(())
    }

    /// Apply a two-qubit unitary; `q0` is the high bit of the gate basis.
    pub fn apply_2q(&mut self, u: &Matrix4<C64>, q0: usize, q1: usize) -> Result<()> {
        self.check_site(q0)?;
        self.check_site(q1)?;
        if q0 == q1 {
            return Err(Error::invalid("two-qubit gate on a repeated site"));
        }
        if (u.adjoint() * u - Matrix4::identity()).camax() > UNITARY_TOL {
            return Err(Error::invalid("two-qubit gate is not unitary"));
        }
        let b0 = 1usize << (self.n_qubits - 1 - q0);
        let b1 = 1usize << (self.n_qubits - 1 - q1);
        for i in 0..self.amps.len() {
            if i & (b0 | b1) != 0 {
                continue;
            }
            let idx = [i, i | b1, i | b0, i | b0 | b1];
            let v = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.amps[k] = (0..4).map(|c| u[(r, c)] * v[c]).sum();
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_site(control)?;
        self.check_site(target)?;
        if control == target {
            return Err(Error::invalid("CNOT on a repeated site"));
        }
        let c = 1usize << (self.n_qubits - 1 - control);
        let t = 1usize << (self.n_qubits - 1 - target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
        Ok(())
    }

    /// Apply a 1- or 2-qubit unitary given as a dense matrix.
    pub fn apply_gate(&mut self, u: &DMatrix<C64>, sites: &[usize]) -> Result<()> {
        match (sites, u.shape()) {
            ([q], (2, 2)) => self.apply_1q(&Matrix2::from_iterator(u.iter().copied()), *q),
            ([q0, q1], (4, 4)) => {
                self.apply_2q(&Matrix4::from_iterator(u.iter().copied()), *q0, *q1)
            }
            _ => Err(Error::invalid(format!(
                "gate of shape {:?} does not match {} sites",
                u.shape(),
                sites.len()
            ))),
        }
    }

    /// `P|ψ⟩` as raw amplitudes.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<Vec<C64>> {
        self.check_pauli(p)?;
        let (x, z) = p.index_masks();
        let y = p.y_count();
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            out[i ^ x] = pauli_phase(y, z, i) * a;
        }
        Ok(out)
    }

    fn check_pauli(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: p.n_qubits(),
            });
        }
        Ok(())
    }

    /// `⟨ψ|P|ψ⟩`, real for Hermitian `P`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        self.check_pauli(p)?;
        let (x, z) = p.index_masks();
        Ok(pauli_expectation_raw(&self.amps, x, z, p.y_count()))
    }

    /// `⟨ψ*|P|ψ⟩`, the Bell-sampling amplitude.
    pub fn conjugate_expectation(&self, p: &PauliString) -> Result<C64> {
        self.check_pauli(p)?;
        let (x, z) = p.index_masks();
        let y = p.y_count();
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| self.amps[i ^ x] * pauli_phase(y, z, i) * a)
            .sum())
    }

    /// Split amplitudes into `M[a][b]` with `a` the region bits (first region
    /// qubit high) and `b` the complement bits.
    fn bipartite_matrix(&self, region: &Region) -> Result<DMatrix<C64>> {
        if region.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: region.n_qubits(),
            });
        }
        let comp = region.complement();
        let n = self.n_qubits;
        let gather = |i: usize, qs: &[usize]| {
            qs.iter()
                .fold(0usize, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1))
        };
        let mut m = DMatrix::zeros(1 << region.len(), 1 << comp.len());
        for (i, a) in self.amps.iter().enumerate() {
            m[(gather(i, region.indices()), gather(i, comp.indices()))] = *a;
        }
        Ok(m)
    }

    /// Reduced density operator on `region`; limited to 14 region qubits.
    pub fn reduced_density(&self, region: &Region) -> Result<DenseOperator> {
        if region.len() > 14 {
            return Err(Error::SizeGuard {
                what: "reduced density",
                limit: 14,
                got: region.len(),
            });
        }
        let m = self.bipartite_matrix(region)?;
        Ok(DenseOperator {
            n_qubits: region.len(),
            matrix: &m * m.adjoint(),
        })
    }

    /// `-ln tr ρ_A²`.
    pub fn renyi2_entropy(&self, region: &Region) -> Result<f64> {
        let m = self.bipartite_matrix(region)?;
        let g = if m.nrows() <= m.ncols() {
            &m * m.adjoint()
        } else {
            m.adjoint() * &m
        };
        let purity: f64 = g.iter().map(|c| c.norm_sqr()).sum();
        Ok(-purity.ln())
    }

    /// Apply the same single-qubit unitary `v` to every qubit.
    pub fn rotate_local_basis(&mut self, v: &Matrix2<C64>) -> Result<()> {
        for q in 0..self.n_qubits {
            self.apply_1q(v, q)?;
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(STATE_MAGIC)?;
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != STATE_MAGIC {
            return Err(Error::Format("missing MGL1 header".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        check_size(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut b8 = [0u8; 8];
        for _ in 0..1usize << n {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            amps.push(C64::new(re, f64::from_le_bytes(b8)));
        }
        let norm = norm_sqr(&amps);
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::Format(format!("stored state has norm² {norm}")));
        }
        Ok(Self { n_qubits: n, amps })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

pub(crate) fn pauli_expectation_raw(amps: &[C64], x: usize, z: usize, y_count: usize) -> f64 {
    amps.iter()
        .enumerate()
        .map(|(i, a)| (amps[i ^ x].conj() * pauli_phase(y_count, z, i) * a).re)
        .sum()
}

/// In-place `u` on qubit `q` of an `n`-qubit amplitude vector, no checks.
pub(crate) fn apply_1q_raw(amps: &mut [C64], n: usize, u: &Matrix2<C64>, q: usize) {
    let stride = 1usize << (n - 1 - q);
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    for block in amps.chunks_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a, *b);
            *a = u00 * x0 + u01 * x1;
            *b = u10 * x0 + u11 * x1;
        }
    }
}

/// Validated density operator on `n_qubits` qubits.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    /// Checks shape, Hermiticity and unit trace to `1e-10`, positivity to `1e-9`.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || !r.is_power_of_two() {
            return Err(Error::invalid(format!("density matrix shape {r}x{c}")));
        }
        let n_qubits = r.trailing_zeros() as usize;
        if (&matrix - matrix.adjoint()).camax() > 1e-10 {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        if (matrix.trace() - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::invalid("density matrix trace is not 1"));
        }
        let op = Self { n_qubits, matrix };
        if op.eigenvalues().iter().any(|&e| e < -1e-9) {
            return Err(Error::invalid(
                "density matrix is not positive semidefinite",
            ));
        }
        Ok(op)
    }

    pub fn from_state(state: &DenseState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            n_qubits: state.n_qubits(),
            matrix: &v * v.adjoint(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn renyi2_entropy(&self) -> f64 {
        -self.purity().ln()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn von_neumann_entropy(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .filter(|&&e| e > 1e-14)
            .map(|&e| -e * e.ln())
            .sum()
    }

    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: p.n_qubits(),
            });
        }
        let (x, z) = p.index_masks();
        let y = p.y_count();
        // tr(ρP) = Σ_i ρ[i, i⊕x]·phase(i)
        Ok((0..self.matrix.nrows())
            .map(|i| (self.matrix[(i, i ^ x)] * pauli_phase(y, z, i)).re)
            .sum())
    }
}
