//! Open-boundary matrix product states.
//!
//! Site `k` holds the two matrices `A_k^0, A_k^1` of shape `χ_{k} × χ_{k+1}`,
//! with `χ_0 = χ_N = 1`. Every public constructor and transformation leaves
//! the state normalized.

pub mod dmrg;
pub(crate) mod linalg;

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, Region};
use crate::statevector::{DenseState, MAX_DENSE_QUBITS};
use linalg::truncated_svd;

const MPS_MAGIC: &[u8; 4] = b"MGM1";
const IMAG_TOL: f64 = 1e-8;

pub type SiteMatrices = [DMatrix<C64>; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Canonical {
    None,
    Left,
    Right,
    /// Sites left of the centre are left-orthonormal, sites right of it right-orthonormal.
    Mixed(usize),
}

#[derive(Clone, Debug)]
pub struct MatrixProductState {
    sites: Vec<SiteMatrices>,
    canonical: Canonical,
}

fn zeros(r: usize, c: usize) -> DMatrix<C64> {
    DMatrix::zeros(r, c)
}

/// Rows `(a, s)` → `a·2 + s`, columns right bond.
fn left_matrix(a: &SiteMatrices) -> DMatrix<C64> {
    let (l, r) = a[0].shape();
    DMatrix::from_fn(2 * l, r, |row, b| a[row % 2][(row / 2, b)])
}

fn from_left_matrix(m: &DMatrix<C64>) -> SiteMatrices {
    let l = m.nrows() / 2;
    let r = m.ncols();
    [
        DMatrix::from_fn(l, r, |a, b| m[(2 * a, b)]),
        DMatrix::from_fn(l, r, |a, b| m[(2 * a + 1, b)]),
    ]
}

/// Rows left bond, columns `(s, b)` → `s·χ_r + b`.
fn right_matrix(a: &SiteMatrices) -> DMatrix<C64> {
    let (l, r) = a[0].shape();
    DMatrix::from_fn(l, 2 * r, |a_, col| a[col / r][(a_, col % r)])
}

fn from_right_matrix(m: &DMatrix<C64>) -> SiteMatrices {
    let r = m.ncols() / 2;
    let l = m.nrows();
    [
        DMatrix::from_fn(l, r, |a, b| m[(a, b)]),
        DMatrix::from_fn(l, r, |a, b| m[(a, r + b)]),
    ]
}

/// `E' = Σ_{s',s} op[s',s] A^{s'†} E A^s`, with `E` indexed (bra bond, ket bond).
pub(crate) fn transfer(e: &DMatrix<C64>, a: &SiteMatrices, op: &Matrix2<C64>) -> DMatrix<C64> {
    let f = [e * &a[0], e * &a[1]];
    let mut out = zeros(a[0].ncols(), a[0].ncols());
    for sp in 0..2 {
        let adj = a[sp].adjoint();
        for s in 0..2 {
            let w = op[(sp, s)];
            if w != C64::new(0.0, 0.0) {
                out += (&adj * &f[s]) * w;
            }
        }
    }
    out
}

/// Right-to-left version: `Y' = Σ_{s',s} op[s',s] A^s Y A^{s'†}`, indexed (ket, bra).
pub(crate) fn transfer_right(
    y: &DMatrix<C64>,
    a: &SiteMatrices,
    op: &Matrix2<C64>,
) -> DMatrix<C64> {
    let f = [&a[0] * y, &a[1] * y];
    let mut out = zeros(a[0].nrows(), a[0].nrows());
    for s in 0..2 {
        for sp in 0..2 {
            let w = op[(sp, s)];
            if w != C64::new(0.0, 0.0) {
                out += (&f[s] * a[sp].adjoint()) * w;
            }
        }
    }
    out
}

fn frobenius_sqr(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum()
}

impl MatrixProductState {
    /// Validates bond shapes and normalizes.
    pub fn new(sites: Vec<SiteMatrices>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("an MPS needs at least one site"));
        }
        let mut left = 1;
        for (k, s) in sites.iter().enumerate() {
            if s[0].shape() != s[1].shape() || s[0].nrows() != left {
                return Err(Error::invalid(format!(
                    "site {k} has inconsistent bond shapes"
                )));
            }
            left = s[0].ncols();
        }
        if left != 1 {
            return Err(Error::invalid("right boundary bond must be 1"));
        }
        let mut mps = Self {
            sites,
            canonical: Canonical::None,
        };
        mps.right_canonicalize()?;
        Ok(mps)
    }

    /// Product state, qubit 0 first; each factor is normalized.
    pub fn product(qubits: &[[C64; 2]]) -> Result<Self> {
        let sites = qubits
            .iter()
            .map(|q| {
                let n = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
                if !(n > 0.0) {
                    return Err(Error::invalid("zero single-qubit factor"));
                }
                Ok([
                    DMatrix::from_element(1, 1, q[0] / n),
                    DMatrix::from_element(1, 1, q[1] / n),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        if sites.is_empty() {
            return Err(Error::invalid("an MPS needs at least one site"));
        }
        Ok(Self {
            sites,
            canonical: Canonical::Left,
        })
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
        if n_qubits < 2 {
            return Err(Error::invalid("GHZ needs two or more qubits"));
        }
        let one = C64::new(1.0, 0.0);
        let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut sites = Vec::with_capacity(n_qubits);
        sites.push([
            DMatrix::from_row_slice(1, 2, &[r, 0.0.into()]),
            DMatrix::from_row_slice(1, 2, &[0.0.into(), r]),
        ]);
        for _ in 1..n_qubits - 1 {
            sites.push([
                DMatrix::from_row_slice(2, 2, &[one, 0.0.into(), 0.0.into(), 0.0.into()]),
                DMatrix::from_row_slice(2, 2, &[0.0.into(), 0.0.into(), 0.0.into(), one]),
            ]);
        }
        sites.push([
            DMatrix::from_row_slice(2, 1, &[one, 0.0.into()]),
            DMatrix::from_row_slice(2, 1, &[0.0.into(), one]),
        ]);
        Ok(Self {
            sites,
            canonical: Canonical::Left,
        })
    }

    /// Random complex-Gaussian tensors with bonds `min(χ, 2^k, 2^{N−k})`.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, max_bond: usize, rng: &mut R) -> Result<Self> {
        if n_qubits == 0 || max_bond == 0 {
            return Err(Error::invalid("random MPS needs N ≥ 1 and χ ≥ 1"));
        }
        let bond = |k: usize| -> usize {
            let edge = k.min(n_qubits - k).min(30);
            (1usize << edge).min(max_bond)
        };
        let mut gauss = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let sites = (0..n_qubits)
            .map(|k| {
                let (l, r) = (bond(k), bond(k + 1));
                [
                    DMatrix::from_fn(l, r, |_, _| gauss()),
                    DMatrix::from_fn(l, r, |_, _| gauss()),
                ]
            })
            .collect();
        Self::new(sites)
    }

    /// Successive truncated SVDs; returns the state and the summed discarded weight.
    pub fn from_dense(state: &DenseState, max_bond: usize, cutoff: f64) -> Result<(Self, f64)> {
        if max_bond == 0 {
            return Err(Error::invalid("χ must be at least 1"));
        }
        let n = state.n_qubits();
        let mut rest = DMatrix::from_row_slice(1, state.dim(), state.amplitudes());
        let mut sites = Vec::with_capacity(n);
        let mut discarded = 0.0;
        for k in 0..n - 1 {
            let cols = 1usize << (n - k - 1);
            let m = DMatrix::from_fn(2 * rest.nrows(), cols, |row, c| {
                rest[(row / 2, (row % 2) * cols + c)]
            });
            let t = truncated_svd(m, max_bond, cutoff)?;
            discarded += t.discarded;
            sites.push(from_left_matrix(&t.u));
            let mut next = t.vt;
            for (i, s) in t.s.iter().enumerate() {
                next.row_mut(i).scale_mut(*s);
            }
            rest = next;
        }
        let last = DMatrix::from_fn(rest.nrows(), 1, |a, _| rest[(a, 0)]);
        let last1 = DMatrix::from_fn(rest.nrows(), 1, |a, _| rest[(a, 1)]);
        sites.push([last, last1]);
        let mut mps = Self {
            sites,
            canonical: Canonical::Left,
        };
        mps.normalize_site(n - 1)?;
        Ok((mps, discarded))
    }

    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SiteMatrices] {
        &self.sites
    }

    pub fn canonical(&self) -> Canonical {
        self.canonical
    }

    /// `χ_0, …, χ_N`.
    pub fn bond_dims(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.sites.iter().map(|s| s[0].ncols()))
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn normalize_site(&mut self, k: usize) -> Result<()> {
        let norm = (frobenius_sqr(&self.sites[k][0]) + frobenius_sqr(&self.sites[k][1])).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical("MPS has zero norm".into()));
        }
        for m in &mut self.sites[k] {
            m.unscale_mut(norm);
        }
        Ok(())
    }

    fn left_step(&mut self, k: usize) {
        let qr = left_matrix(&self.sites[k]).qr();
        let (q, r) = (qr.q(), qr.r());
        self.sites[k] = from_left_matrix(&q);
        for m in &mut self.sites[k + 1] {
            *m = &r * &*m;
        }
    }

    fn right_step(&mut self, k: usize) {
        let qr = right_matrix(&self.sites[k]).adjoint().qr();
        let (q, r) = (qr.q(), qr.r());
        self.sites[k] = from_right_matrix(&q.adjoint());
        let r_adj = r.adjoint();
        for m in &mut self.sites[k - 1] {
            *m = &*m * &r_adj;
        }
    }

    pub fn left_canonicalize(&mut self) -> Result<()> {
        let n = self.n_qubits();
        for k in 0..n - 1 {
            self.left_step(k);
        }
        self.normalize_site(n - 1)?;
        self.canonical = Canonical::Left;
        Ok(())
    }

    pub fn right_canonicalize(&mut self) -> Result<()> {
        for k in (1..self.n_qubits()).rev() {
            self.right_step(k);
        }
        self.normalize_site(0)?;
        self.canonical = Canonical::Right;
        Ok(())
    }

    /// Orthogonality centre at `center`.
    pub fn mixed_canonicalize(&mut self, center: usize) -> Result<()> {
        let n = self.n_qubits();
        if center >= n {
            return Err(Error::IndexOutOfRange {
                index: center,
                n_qubits: n,
            });
        }
        self.right_canonicalize()?;
        for k in 0..center {
            self.left_step(k);
        }
        self.canonical = Canonical::Mixed(center);
        Ok(())
    }

    /// Largest deviation of `Σ_s A^{s†}A^s` from identity over sites `< upto`.
    pub fn left_isometry_error(&self, upto: usize) -> f64 {
        self.sites[..upto]
            .iter()
            .map(|a| {
                let g = a[0].adjoint() * &a[0] + a[1].adjoint() * &a[1];
                (g - DMatrix::identity(a[0].ncols(), a[0].ncols())).camax()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `Σ_s A^s A^{s†}` from identity over sites `≥ from`.
    pub fn right_isometry_error(&self, from: usize) -> f64 {
        self.sites[from..]
            .iter()
            .map(|a| {
                let g = &a[0] * a[0].adjoint() + &a[1] * a[1].adjoint();
                (g - DMatrix::identity(a[0].nrows(), a[0].nrows())).camax()
            })
            .fold(0.0, f64::max)
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &MatrixProductState) -> Result<C64> {
        if self.n_qubits() != other.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                got: other.n_qubits(),
            });
        }
        let mut e = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (a, b) in self.sites.iter().zip(&other.sites) {
            e = a[0].adjoint() * &e * &b[0] + a[1].adjoint() * &e * &b[1];
        }
        Ok(e[(0, 0)])
    }

    pub fn to_dense(&self) -> Result<DenseState> {
        let n = self.n_qubits();
        if n > MAX_DENSE_QUBITS.min(24) {
            return Err(Error::SizeGuard {
                what: "MPS to dense",
                limit: 24,
                got: n,
            });
        }
        let mut v = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for a in &self.sites {
            let parts = [&v * &a[0], &v * &a[1]];
            v = DMatrix::from_fn(2 * v.nrows(), a[0].ncols(), |row, b| {
                parts[row % 2][(row / 2, b)]
            });
        }
        DenseState::new(v.column(0).iter().copied().collect())
    }

    /// Bond dimension reduced to `max_bond` by a left-to-right SVD sweep
    /// from right-canonical form; returns the state and `|⟨new|old⟩|²`.
    pub fn truncate(&self, max_bond: usize) -> Result<(Self, f64)> {
        if max_bond == 0 {
            return Err(Error::invalid("χ must be at least 1"));
        }
        let mut out = self.clone();
        out.right_canonicalize()?;
        let n = out.n_qubits();
        for k in 0..n - 1 {
            let t = truncated_svd(left_matrix(&out.sites[k]), max_bond, 0.0)?;
            out.sites[k] = from_left_matrix(&t.u);
            let mut carry = t.vt;
            for (i, s) in t.s.iter().enumerate() {
                carry.row_mut(i).scale_mut(*s);
            }
            for m in &mut out.sites[k + 1] {
                *m = &carry * &*m;
            }
        }
        out.normalize_site(n - 1)?;
        out.canonical = Canonical::Left;
        let fidelity = out.overlap(self)?.norm_sqr();
        Ok((out, fidelity))
    }

    fn check_string(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                got: p.n_qubits(),
            });
        }
        Ok(())
    }

    /// `⟨ψ|P|ψ⟩` in `O(Nχ³)`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        self.check_string(p)?;
        let mut e = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (a, op) in self.sites.iter().zip(p.ops()) {
            e = transfer(&e, a, &op.matrix());
        }
        let v = e[(0, 0)];
        if v.im.abs() > IMAG_TOL {
            return Err(Error::Numerical(format!(
                "Pauli expectation has imaginary part {:e}",
                v.im
            )));
        }
        Ok(v.re)
    }

    /// Schmidt values across the bond between sites `cut − 1` and `cut`.
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        let n = self.n_qubits();
        if cut == 0 || cut >= n {
            return Err(Error::invalid(format!("cut {cut} must lie in 1..{n}")));
        }
        let mut m = self.clone();
        m.mixed_canonicalize(cut)?;
        Ok(truncated_svd(right_matrix(&m.sites[cut]), usize::MAX, 0.0)?.s)
    }

    /// `−ln Σ λ⁴` at the cut before site `cut`.
    pub fn renyi2_entropy(&self, cut: usize) -> Result<f64> {
        Ok(-self
            .schmidt_values(cut)?
            .iter()
            .map(|l| l.powi(4))
            .sum::<f64>()
            .ln())
    }

    /// `tr(ρ_A P_A ρ_A P_A)` for a contiguous region `A`; `P_A = I` gives `tr ρ_A²`.
    pub fn subsystem_pauli_purity(&self, region: &Region, p: &PauliString) -> Result<f64> {
        let n = self.n_qubits();
        if region.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: region.n_qubits(),
            });
        }
        if p.n_qubits() != region.len() {
            return Err(Error::DimensionMismatch {
                expected: region.len(),
                got: p.n_qubits(),
            });
        }
        let (start, end) = region
            .as_interval()
            .ok_or_else(|| Error::invalid("subsystem contraction needs a contiguous region"))?;
        let mut m = self.clone();
        m.mixed_canonicalize(start)?;
        // Complement contracted by orthonormality; one transfer chain per
        // pair of left boundary indices.
        let chi = m.sites[start][0].nrows();
        let ops: Vec<Matrix2<C64>> = p.ops().iter().map(|o| o.matrix()).collect();
        let mut total = 0.0;
        for a in 0..chi {
            for ap in 0..chi {
                let mut e = zeros(chi, chi);
                e[(ap, a)] = C64::new(1.0, 0.0);
                for (site, op) in m.sites[start..end].iter().zip(&ops) {
                    e = transfer(&e, site, op);
                }
                total += frobenius_sqr(&e);
            }
        }
        Ok(total)
    }

    /// `S_2` of a contiguous region.
    pub fn region_renyi2(&self, region: &Region) -> Result<f64> {
        let id = PauliString::identity(region.len());
        Ok(-self.subsystem_pauli_purity(region, &id)?.ln())
    }

    /// Apply `u` on every site.
    pub fn rotate_local_basis(&mut self, u: &Matrix2<C64>) {
        for a in &mut self.sites {
            let (a0, a1) = (a[0].clone(), a[1].clone());
            a[0] = &a0 * u[(0, 0)] + &a1 * u[(0, 1)];
            a[1] = &a0 * u[(1, 0)] + &a1 * u[(1, 1)];
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MPS_MAGIC)?;
        w.write_all(&(self.n_qubits() as u32).to_le_bytes())?;
        for d in self.bond_dims() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for a in &self.sites {
            let (l, r) = a[0].shape();
            for i in 0..l {
                for s in a {
                    for b in 0..r {
                        let c = s[(i, b)];
                        w.write_all(&c.re.to_le_bytes())?;
                        w.write_all(&c.im.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MPS_MAGIC {
            return Err(Error::Format("missing MGM1 header".into()));
        }
        let read_u32 = |r: &mut R| -> Result<usize> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b) as usize)
        };
        let n = read_u32(&mut r)?;
        if n == 0 {
            return Err(Error::Format("MPS with zero sites".into()));
        }
        let bonds = (0..=n)
            .map(|_| read_u32(&mut r))
            .collect::<Result<Vec<_>>>()?;
        if bonds[0] != 1 || bonds[n] != 1 || bonds.iter().any(|&d| d == 0 || d > 4096) {
            return Err(Error::Format(format!("bad bond dimensions {bonds:?}")));
        }
        let mut b8 = [0u8; 8];
        let mut sites = Vec::with_capacity(n);
        for k in 0..n {
            let (l, rr) = (bonds[k], bonds[k + 1]);
            let mut site = [zeros(l, rr), zeros(l, rr)];
            for i in 0..l {
                for s in &mut site {
                    for b in 0..rr {
                        r.read_exact(&mut b8)?;
                        let re = f64::from_le_bytes(b8);
                        r.read_exact(&mut b8)?;
                        s[(i, b)] = C64::new(re, f64::from_le_bytes(b8));
                    }
                }
            }
            sites.push(site);
        }
        Self::new(sites)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn dense_purity(state: &DenseState, region: &Region, p: &PauliString) -> f64 {
        let rho = state.reduced_density(region).unwrap();
        let pm = p.dense_matrix().unwrap();
        let rp = rho.matrix() * pm;
        (&rp * &rp).trace().re
    }

    #[test]
    fn exact_decompositions() {
        let ghz = DenseState::ghz(8).unwrap();
        let (m, d) = MatrixProductState::from_dense(&ghz, 2, 0.0).unwrap();
        assert!(d < 1e-20 && m.max_bond() == 2);
        assert!((m.to_dense().unwrap().fidelity(&ghz).unwrap() - 1.0).abs() < 1e-10);
        let prod = DenseState::t_state(5).unwrap();
        let (m, _) = MatrixProductState::from_dense(&prod, 4, 0.0).unwrap();
        assert_eq!(m.max_bond(), 1);
        let haar = DenseState::haar_random(8, &mut stream_rng(1, 0)).unwrap();
        let (m, _) = MatrixProductState::from_dense(&haar, 16, 0.0).unwrap();
        assert!((m.to_dense().unwrap().fidelity(&haar).unwrap() - 1.0).abs() < 1e-10);
        assert!(m.left_isometry_error(7) < 1e-10);
    }

    #[test]
    fn truncation_fidelity() {
        let g = MatrixProductState::ghz(8).unwrap();
        let (same, f) = g.truncate(2).unwrap();
        assert!((f - 1.0).abs() < 1e-10 && same.max_bond() == 2);
        let (one, f) = g.truncate(1).unwrap();
        assert!((f - 0.5).abs() < 1e-9 && one.max_bond() == 1);
        let r = MatrixProductState::random(10, 8, &mut stream_rng(2, 0)).unwrap();
        let fids: Vec<f64> = (1..=8).map(|c| r.truncate(c).unwrap().1).collect();
        assert!(fids.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        assert!((fids[7] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn canonical_forms_and_gauge_invariance() {
        let mut m = MatrixProductState::random(9, 6, &mut stream_rng(3, 0)).unwrap();
        assert!(m.right_isometry_error(1) < 1e-10);
        let p: PauliString = "XYZIZXYIZ".parse().unwrap();
        let (e_right, s_right) = (m.expectation(&p).unwrap(), m.renyi2_entropy(4).unwrap());
        m.left_canonicalize().unwrap();
        assert!(m.left_isometry_error(8) < 1e-10);
        assert!((m.expectation(&p).unwrap() - e_right).abs() < 1e-9);
        assert!((m.renyi2_entropy(4).unwrap() - s_right).abs() < 1e-9);
        m.mixed_canonicalize(5).unwrap();
        assert!(m.left_isometry_error(5) < 1e-10 && m.right_isometry_error(6) < 1e-10);
        assert!((m.overlap(&m).unwrap().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expectations_match_dense() {
        let g = MatrixProductState::ghz(4).unwrap();
        for (s, v) in [("ZZII", 1.0), ("XXXX", 1.0), ("XXXI", 0.0)] {
            assert!(
                (g.expectation(&s.parse().unwrap()).unwrap() - v).abs() < 1e-12,
                "{s}"
            );
        }
        let mut rng = stream_rng(4, 0);
        let m = MatrixProductState::random(10, 8, &mut rng).unwrap();
        let dense = m.to_dense().unwrap();
        for _ in 0..100 {
            let p = PauliString::from_index(10, rng.random::<u64>() & ((1 << 20) - 1)).unwrap();
            assert!((m.expectation(&p).unwrap() - dense.expectation(&p).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn entropies_match_dense() {
        let g = MatrixProductState::ghz(6).unwrap();
        assert!((g.renyi2_entropy(3).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(
            MatrixProductState::t_state(4)
                .unwrap()
                .renyi2_entropy(2)
                .unwrap()
                .abs()
                < 1e-12
        );
        let m = MatrixProductState::random(8, 5, &mut stream_rng(5, 0)).unwrap();
        let d = m.to_dense().unwrap();
        for cut in 1..8 {
            let a = Region::interval(8, 0, cut).unwrap();
            assert!((m.renyi2_entropy(cut).unwrap() - d.renyi2_entropy(&a).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn subsystem_purities_match_dense() {
        let g = MatrixProductState::ghz(8).unwrap();
        let half = Region::interval(8, 0, 4).unwrap();
        assert!(
            (g.subsystem_pauli_purity(&half, &PauliString::identity(4))
                .unwrap()
                - 0.5)
                .abs()
                < 1e-12
        );
        let bell = MatrixProductState::ghz(2).unwrap();
        let a = Region::interval(2, 0, 1).unwrap();
        assert!(
            (bell
                .subsystem_pauli_purity(&a, &"X".parse().unwrap())
                .unwrap()
                - 0.5)
                .abs()
                < 1e-12
        );
        let mut rng = stream_rng(6, 0);
        let m = MatrixProductState::random(10, 6, &mut rng).unwrap();
        let d = m.to_dense().unwrap();
        for (s, e) in [(0usize, 4usize), (3, 7), (6, 10), (2, 3)] {
            let r = Region::interval(10, s, e).unwrap();
            for _ in 0..12 {
                let p = PauliString::from_index(
                    e - s,
                    rng.random::<u64>() & ((1 << (2 * (e - s))) - 1),
                )
                .unwrap();
                assert!(
                    (m.subsystem_pauli_purity(&r, &p).unwrap() - dense_purity(&d, &r, &p)).abs()
                        < 1e-8
                );
            }
            let purity = m
                .subsystem_pauli_purity(&r, &PauliString::identity(e - s))
                .unwrap();
            assert!((purity * d.renyi2_entropy(&r).unwrap().exp() - 1.0).abs() < 1e-8);
        }
        assert!(m
            .subsystem_pauli_purity(
                &Region::new(10, vec![0, 2]).unwrap(),
                &"XX".parse().unwrap()
            )
            .is_err());
    }

    #[test]
    fn file_round_trip() {
        let m = MatrixProductState::random(6, 4, &mut stream_rng(7, 0)).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = MatrixProductState::read_from(buf.as_slice()).unwrap();
        assert!((back.overlap(&m).unwrap().norm() - 1.0).abs() < 1e-12);
        assert_eq!(back.bond_dims(), m.bond_dims());
        assert!(MatrixProductState::read_from(&b"XXXX"[..]).is_err());
    }
}
