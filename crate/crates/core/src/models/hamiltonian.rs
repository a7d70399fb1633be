//! Open-chain TFIM and XXZ Hamiltonians as lists of local product terms.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates;
use crate::lanczos::{lowest_eigenpair, LanczosConfig};
use crate::pauli::PauliOp;
use crate::statevector::{apply_1q_raw, DenseState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    /// `−Σ X_k X_{k+1} − h Σ Z_k`
    Tfim { h: f64 },
    /// `−Σ (X_k X_{k+1} + Y_k Y_{k+1} + Δ Z_k Z_{k+1})`
    Xxz { delta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub model: Model,
    pub n_qubits: usize,
    /// Single-site unitary `V`; the Hamiltonian becomes `V^{⊗N} H V^{⊗N†}`.
    pub rotation: Option<Matrix2<C64>>,
}

impl HamiltonianSpec {
    pub fn new(model: Model, n_qubits: usize) -> Self {
        Self {
            model,
            n_qubits,
            rotation: None,
        }
    }

    pub fn with_rotation(mut self, v: Matrix2<C64>) -> Self {
        self.rotation = Some(v);
        self
    }

    fn unrotated(&self) -> Self {
        Self {
            rotation: None,
            ..self.clone()
        }
    }

    /// `V^{⊗N}|ψ⟩` when a rotation is configured.
    pub fn rotate_state(&self, state: &mut DenseState) -> Result<()> {
        match &self.rotation {
            Some(v) => state.rotate_local_basis(v),
            None => Ok(()),
        }
    }
}

/// `coeff · ⊗_{(site, op)} op`, identity elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, Matrix2<C64>)>,
}

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<LocalTerm>,
}

pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<Hamiltonian> {
    let n = spec.n_qubits;
    if n < 2 {
        return Err(Error::invalid("chain needs at least two sites"));
    }
    let (x, y, z) = (
        PauliOp::X.matrix(),
        PauliOp::Y.matrix(),
        PauliOp::Z.matrix(),
    );
    let mut terms = Vec::new();
    match spec.model {
        Model::Tfim { h } => {
            for k in 0..n - 1 {
                terms.push(LocalTerm {
                    coeff: -1.0,
                    ops: vec![(k, x), (k + 1, x)],
                });
            }
            for k in 0..n {
                terms.push(LocalTerm {
                    coeff: -h,
                    ops: vec![(k, z)],
                });
            }
        }
        Model::Xxz { delta } => {
            for k in 0..n - 1 {
                terms.push(LocalTerm {
                    coeff: -1.0,
                    ops: vec![(k, x), (k + 1, x)],
                });
                terms.push(LocalTerm {
                    coeff: -1.0,
                    ops: vec![(k, y), (k + 1, y)],
                });
                terms.push(LocalTerm {
                    coeff: -delta,
                    ops: vec![(k, z), (k + 1, z)],
                });
            }
        }
    }
    if let Some(v) = &spec.rotation {
        if !gates::is_unitary2(v, 1e-12) {
            return Err(Error::invalid("basis rotation is not unitary"));
        }
        for t in &mut terms {
            for (_, op) in &mut t.ops {
                *op = v * *op * v.adjoint();
            }
        }
    }
    Ok(Hamiltonian { n_qubits: n, terms })
}

impl Hamiltonian {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    /// `out = H·psi` on raw amplitudes.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        let mut scratch = psi.to_vec();
        for t in &self.terms {
            scratch.copy_from_slice(psi);
            for (q, op) in &t.ops {
                apply_1q_raw(&mut scratch, self.n_qubits, op, *q);
            }
            out.iter_mut()
                .zip(&scratch)
                .for_each(|(o, s)| *o += s * t.coeff);
        }
    }

    pub fn energy(&self, state: &DenseState) -> Result<f64> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); state.dim()];
        self.apply(state.amplitudes(), &mut out);
        Ok(state
            .amplitudes()
            .iter()
            .zip(&out)
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }

    /// Dense matrix, limited to 12 sites.
    pub fn dense_matrix(&self) -> Result<DMatrix<C64>> {
        if self.n_qubits > 12 {
            return Err(Error::SizeGuard {
                what: "dense Hamiltonian",
                limit: 12,
                got: self.n_qubits,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }
}

/// Basis states the unrotated model's ground state lives in: even Z-parity
/// for TFIM, `N_p = Σ Z = 0` for XXZ.
fn in_sector(model: &Model, n: usize, index: usize) -> bool {
    match model {
        Model::Tfim { .. } => index.count_ones() % 2 == 0,
        Model::Xxz { .. } => 2 * index.count_ones() as usize == n,
    }
}

/// `⟨Σ_k Z_k⟩`.
pub fn total_magnetization(state: &DenseState) -> f64 {
    let n = state.n_qubits() as i64;
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * (n - 2 * i.count_ones() as i64) as f64)
        .sum()
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: DenseState,
    pub residual: f64,
}

/// Exact ground state by Lanczos on at most 20 sites.
///
/// The unrotated model is solved inside its symmetry sector and the rotation,
/// if any, is applied to the resulting state afterwards.
pub fn lanczos_ground_state(spec: &HamiltonianSpec) -> Result<GroundState> {
    let n = spec.n_qubits;
    if n > 20 {
        return Err(Error::SizeGuard {
            what: "Lanczos ground state",
            limit: 20,
            got: n,
        });
    }
    if matches!(spec.model, Model::Xxz { .. }) && n % 2 == 1 {
        return Err(Error::invalid(
            "XXZ half filling needs an even number of sites",
        ));
    }
    let h = build_hamiltonian(&spec.unrotated())?;
    let mut rng = crate::rng::stream_rng(0x5eed, n as u64);
    let start: Vec<C64> = (0..1usize << n)
        .map(|i| {
            if in_sector(&spec.model, n, i) {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let pair = lowest_eigenpair(|v, out| h.apply(v, out), start, &LanczosConfig::default())?;
    let mut state = DenseState::new(pair.vector)?;
    if matches!(spec.model, Model::Xxz { .. }) {
        let np = total_magnetization(&state);
        if np.abs() > 1e-6 {
            return Err(Error::Numerical(format!(
                "ground state left the N_p=0 sector: ⟨N_p⟩={np}"
            )));
        }
    }
    spec.rotate_state(&mut state)?;
    Ok(GroundState {
        energy: pair.value,
        state,
        residual: pair.residual,
    })
}
