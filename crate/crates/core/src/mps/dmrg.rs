//! Two-site DMRG for the chain models.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::linalg::truncated_svd;
use super::{from_left_matrix, from_right_matrix, MatrixProductState, SiteMatrices};
use crate::error::{Error, Result};
use crate::lanczos::{lowest_eigenpair, LanczosConfig};
use crate::models::{HamiltonianSpec, Model};
use crate::pauli::{PauliOp, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmrgConfig {
    pub max_bond: usize,
    /// Discarded-weight threshold per bond.
    pub cutoff: f64,
    /// Maximum number of sweeps (one sweep = left-to-right plus back).
    pub sweeps: usize,
    pub energy_tol: f64,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self {
            max_bond: 16,
            cutoff: 1e-14,
            sweeps: 20,
            energy_tol: 1e-10,
        }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_bond < 1 {
            return Err(Error::invalid("DMRG needs χ ≥ 1"));
        }
        if !(0.0..=1e-6).contains(&self.cutoff) {
            return Err(Error::invalid(format!(
                "DMRG cutoff {} outside [0, 1e-6]",
                self.cutoff
            )));
        }
        if self.sweeps < 2 {
            return Err(Error::invalid("DMRG needs at least two sweeps"));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::invalid("energy tolerance must be positive"));
        }
        Ok(())
    }
}

/// Operator-valued bond matrix stored as its non-zero entries.
#[derive(Clone, Debug)]
pub struct Mpo {
    dim: usize,
    entries: Vec<(usize, usize, Matrix2<C64>)>,
    n_sites: usize,
}

impl Mpo {
    /// Finite-state-automaton MPO: row 0 is "nothing placed yet", column
    /// `D−1` is "term complete", rows `1..D−1` carry an open bond term.
    pub fn for_model(model: &Model, n_sites: usize) -> Self {
        let (x, y, z) = (
            PauliOp::X.matrix(),
            PauliOp::Y.matrix(),
            PauliOp::Z.matrix(),
        );
        let (bonds, onsite): (Vec<(f64, Matrix2<C64>, Matrix2<C64>)>, Matrix2<C64>) = match *model {
            Model::Tfim { h } => (vec![(-1.0, x, x)], z * C64::new(-h, 0.0)),
            Model::Xxz { delta } => (
                vec![(-1.0, x, x), (-1.0, y, y), (-delta, z, z)],
                Matrix2::zeros(),
            ),
        };
        let dim = bonds.len() + 2;
        let last = dim - 1;
        let id = Matrix2::identity();
        let mut entries = vec![(0, 0, id), (last, last, id)];
        if onsite != Matrix2::zeros() {
            entries.push((0, last, onsite));
        }
        for (t, (c, a, b)) in bonds.into_iter().enumerate() {
            entries.push((0, 1 + t, a * C64::new(c, 0.0)));
            entries.push((1 + t, last, b));
        }
        Self {
            dim,
            entries,
            n_sites,
        }
    }

    /// Adds `λ(Σ_k Z_k)²`, which vanishes on the `N_p = 0` sector and lifts
    /// every other sector by at least `4λ`.
    pub fn with_sector_penalty(mut self, lambda: f64) -> Self {
        let (z, id) = (PauliOp::Z.matrix(), Matrix2::<C64>::identity());
        let old_last = self.dim - 1;
        let (channel, last) = (old_last, old_last + 1);
        for e in &mut self.entries {
            if e.0 == old_last {
                e.0 = last;
            }
            if e.1 == old_last {
                e.1 = last;
            }
        }
        self.dim += 1;
        self.entries.push((0, last, id * C64::new(lambda, 0.0)));
        self.entries
            .push((0, channel, z * C64::new(2.0 * lambda, 0.0)));
        self.entries.push((channel, channel, id));
        self.entries.push((channel, last, z));
        self
    }

    pub fn bond_dim(&self) -> usize {
        self.dim
    }

    /// `⟨ψ|H|ψ⟩` by direct contraction.
    pub fn expectation(&self, mps: &MatrixProductState) -> Result<f64> {
        if mps.n_qubits() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                got: mps.n_qubits(),
            });
        }
        let mut env = self.left_boundary();
        for a in mps.sites() {
            env = self.grow_left(&env, a);
        }
        let v = env[self.dim - 1][(0, 0)];
        Ok(v.re)
    }

    fn left_boundary(&self) -> Vec<DMatrix<C64>> {
        let mut env = vec![DMatrix::zeros(1, 1); self.dim];
        env[0][(0, 0)] = C64::new(1.0, 0.0);
        env
    }

    fn right_boundary(&self) -> Vec<DMatrix<C64>> {
        let mut env = vec![DMatrix::zeros(1, 1); self.dim];
        env[self.dim - 1][(0, 0)] = C64::new(1.0, 0.0);
        env
    }

    /// `L'[w'] = Σ W[w][w'][s',s] A^{s'†} L[w] A^s`, `L[w]` indexed (bra, ket).
    fn grow_left(&self, env: &[DMatrix<C64>], a: &SiteMatrices) -> Vec<DMatrix<C64>> {
        let chi = a[0].ncols();
        let adj = [a[0].adjoint(), a[1].adjoint()];
        let dressed: Vec<[[DMatrix<C64>; 2]; 2]> = env
            .iter()
            .map(|l| {
                let f = [l * &a[0], l * &a[1]];
                [
                    [&adj[0] * &f[0], &adj[0] * &f[1]],
                    [&adj[1] * &f[0], &adj[1] * &f[1]],
                ]
            })
            .collect();
        let mut out = vec![DMatrix::zeros(chi, chi); self.dim];
        for (w, wp, op) in &self.entries {
            for sp in 0..2 {
                for s in 0..2 {
                    if op[(sp, s)] != C64::new(0.0, 0.0) {
                        out[*wp] += &dressed[*w][sp][s] * op[(sp, s)];
                    }
                }
            }
        }
        out
    }

    /// `R'[w] = Σ W[w][w'][s',s] A^s R[w'] A^{s'†}`, `R[w]` indexed (ket, bra).
    fn grow_right(&self, env: &[DMatrix<C64>], a: &SiteMatrices) -> Vec<DMatrix<C64>> {
        let chi = a[0].nrows();
        let adj = [a[0].adjoint(), a[1].adjoint()];
        let dressed: Vec<[[DMatrix<C64>; 2]; 2]> = env
            .iter()
            .map(|r| {
                let f = [&a[0] * r, &a[1] * r];
                [
                    [&f[0] * &adj[0], &f[1] * &adj[0]],
                    [&f[0] * &adj[1], &f[1] * &adj[1]],
                ]
            })
            .collect();
        let mut out = vec![DMatrix::zeros(chi, chi); self.dim];
        for (w, wp, op) in &self.entries {
            for sp in 0..2 {
                for s in 0..2 {
                    if op[(sp, s)] != C64::new(0.0, 0.0) {
                        out[*w] += &dressed[*wp][sp][s] * op[(sp, s)];
                    }
                }
            }
        }
        out
    }

    /// Effective two-site Hamiltonian applied to `θ[a, s1, s2, c]`.
    fn apply_two_site(
        &self,
        left: &[DMatrix<C64>],
        right: &[DMatrix<C64>],
        theta: &[DMatrix<C64>; 4],
    ) -> [DMatrix<C64>; 4] {
        let (cl, cr) = theta[0].shape();
        let d = self.dim;
        // X[w1][s1 s2] = L[w1]^T-side contraction: bra index out.
        let x: Vec<Vec<DMatrix<C64>>> = left
            .iter()
            .map(|l| theta.iter().map(|t| l * t).collect())
            .collect();
        let mut y = vec![vec![DMatrix::<C64>::zeros(cl, cr); 4]; d];
        for (w1, w2, op) in &self.entries {
            for t1 in 0..2 {
                for s1 in 0..2 {
                    let c = op[(t1, s1)];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for s2 in 0..2 {
                        y[*w2][2 * t1 + s2] += &x[*w1][2 * s1 + s2] * c;
                    }
                }
            }
        }
        let mut z = vec![vec![DMatrix::<C64>::zeros(cl, cr); 4]; d];
        for (w2, w3, op) in &self.entries {
            for t2 in 0..2 {
                for s2 in 0..2 {
                    let c = op[(t2, s2)];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for t1 in 0..2 {
                        z[*w3][2 * t1 + t2] += &y[*w2][2 * t1 + s2] * c;
                    }
                }
            }
        }
        let mut out: [DMatrix<C64>; 4] = std::array::from_fn(|_| DMatrix::zeros(cl, cr));
        for (w3, zs) in z.iter().enumerate() {
            if right[w3].iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            for (o, zz) in out.iter_mut().zip(zs) {
                *o += zz * &right[w3];
            }
        }
        out
    }
}

fn flatten(theta: &[DMatrix<C64>; 4]) -> Vec<C64> {
    theta.iter().flat_map(|m| m.iter().copied()).collect()
}

fn unflatten(v: &[C64], rows: usize, cols: usize) -> [DMatrix<C64>; 4] {
    let len = rows * cols;
    std::array::from_fn(|i| DMatrix::from_column_slice(rows, cols, &v[i * len..(i + 1) * len]))
}

fn two_site(a: &SiteMatrices, b: &SiteMatrices) -> [DMatrix<C64>; 4] {
    std::array::from_fn(|i| &a[i / 2] * &b[i % 2])
}

/// `θ` as the `(a,s1) × (s2,c)` matrix.
fn theta_matrix(theta: &[DMatrix<C64>; 4]) -> DMatrix<C64> {
    let (cl, cr) = theta[0].shape();
    DMatrix::from_fn(2 * cl, 2 * cr, |row, col| {
        theta[2 * (row % 2) + col / cr][(row / 2, col % cr)]
    })
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    pub energy: f64,
    pub state: MatrixProductState,
    /// Energy at the end of every sweep.
    pub sweep_energies: Vec<f64>,
    /// Largest discarded weight over all bond updates of the final sweep.
    pub max_discarded: f64,
}

fn initial_state(model: &Model, n: usize) -> Result<MatrixProductState> {
    let (up, down) = (
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    );
    let qubits: Vec<[C64; 2]> = match model {
        Model::Tfim { .. } => vec![up; n],
        Model::Xxz { .. } => (0..n).map(|k| if k % 2 == 0 { up } else { down }).collect(),
    };
    MatrixProductState::product(&qubits)
}

/// Ground state of the configured chain. The unrotated model is solved from
/// a symmetric product state and the basis rotation applied afterwards.
pub fn dmrg_ground_state(spec: &HamiltonianSpec, cfg: &DmrgConfig) -> Result<DmrgResult> {
    cfg.validate()?;
    let n = spec.n_qubits;
    if n < 2 {
        return Err(Error::invalid("chain needs at least two sites"));
    }
    if matches!(spec.model, Model::Xxz { .. }) && n % 2 == 1 {
        return Err(Error::invalid(
            "XXZ half filling needs an even number of sites",
        ));
    }
    let mpo = Mpo::for_model(&spec.model, n);
    // Rounding noise would otherwise let the sweeps drift into a sector with
    // lower energy.
    let search = match spec.model {
        Model::Xxz { delta } => mpo.clone().with_sector_penalty(1.0 + delta.abs()),
        Model::Tfim { .. } => mpo.clone(),
    };
    let mut mps = initial_state(&spec.model, n)?;
    mps.right_canonicalize()?;
    let mut sites: Vec<SiteMatrices> = mps.sites.clone();

    let mut rights = vec![search.right_boundary(); n + 1];
    for k in (1..n).rev() {
        rights[k] = search.grow_right(&rights[k + 1], &sites[k]);
    }
    let mut lefts = vec![search.left_boundary(); n + 1];
    let inner = LanczosConfig {
        max_krylov: 60,
        tol: 1e-10,
        max_restarts: 10,
        fail_above: 1e-4,
    };

    let mut energies = Vec::new();
    let mut converged = false;
    let mut max_discarded = 0.0;
    for _ in 0..cfg.sweeps {
        let mut energy = f64::NAN;
        max_discarded = 0.0f64;
        let order: Vec<(usize, bool)> = (0..n - 1)
            .map(|k| (k, true))
            .chain((0..n - 1).rev().map(|k| (k, false)))
            .collect();
        for (k, rightward) in order {
            let theta = two_site(&sites[k], &sites[k + 1]);
            let (cl, cr) = theta[0].shape();
            let (l, r) = (&lefts[k], &rights[k + 2]);
            let pair = lowest_eigenpair(
                |v, out| {
                    let hv = search.apply_two_site(l, r, &unflatten(v, cl, cr));
                    out.copy_from_slice(&flatten(&hv));
                },
                flatten(&theta),
                &LanczosConfig {
                    max_krylov: inner.max_krylov.min(4 * cl * cr),
                    ..inner
                },
            )
            .map_err(|e| match e {
                Error::NoConvergence { .. } => Error::DmrgNoConvergence {
                    energies: energies.clone(),
                },
                other => other,
            })?;
            energy = pair.value;
            let svd = truncated_svd(
                theta_matrix(&unflatten(&pair.vector, cl, cr)),
                cfg.max_bond,
                cfg.cutoff,
            )?;
            max_discarded = max_discarded.max(svd.discarded);
            let norm: f64 = svd.s.iter().map(|s| s * s).sum::<f64>().sqrt();
            let mut sv = svd.vt.clone();
            let mut us = svd.u.clone();
            for (i, s) in svd.s.iter().enumerate() {
                sv.row_mut(i).scale_mut(s / norm);
                us.column_mut(i).scale_mut(s / norm);
            }
            if rightward {
                sites[k] = from_left_matrix(&svd.u);
                sites[k + 1] = from_right_matrix(&sv);
                lefts[k + 1] = search.grow_left(&lefts[k], &sites[k]);
            } else {
                sites[k] = from_left_matrix(&us);
                sites[k + 1] = from_right_matrix(&svd.vt);
                rights[k + 1] = search.grow_right(&rights[k + 2], &sites[k + 1]);
            }
        }
        let done = energies
            .last()
            .is_some_and(|prev: &f64| (prev - energy).abs() < cfg.energy_tol);
        energies.push(energy);
        if done && energies.len() >= 2 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::DmrgNoConvergence { energies });
    }
    let mut state = MatrixProductState {
        sites,
        canonical: super::Canonical::Right,
    };
    state.right_canonicalize()?;
    if matches!(spec.model, Model::Tfim { .. }) {
        state = even_parity(state, cfg.max_bond)?;
    }
    if matches!(spec.model, Model::Xxz { .. }) {
        let np = total_magnetization(&state)?;
        if np.abs() > 1e-6 {
            return Err(Error::Numerical(format!(
                "DMRG state left the N_p=0 sector: ⟨N_p⟩={np}"
            )));
        }
    }
    let energy = mpo.expectation(&state)?;
    if let Some(v) = &spec.rotation {
        state.rotate_local_basis(v);
    }
    Ok(DmrgResult {
        energy,
        state,
        sweep_energies: energies,
        max_discarded,
    })
}

/// Projects onto `∏_k Z_k = +1`. At exact degeneracy (the TFIM at `h = 0`)
/// the sweeps may return any mixture of the two parity sectors; elsewhere the
/// state is already even and is returned unchanged.
fn even_parity(state: MatrixProductState, max_bond: usize) -> Result<MatrixProductState> {
    let n = state.n_qubits();
    let parity = state.expectation(&PauliString::new(vec![PauliOp::Z; n]))?;
    if (1.0 - parity).abs() < 1e-12 {
        return Ok(state);
    }
    if (1.0 + parity) / 2.0 < 1e-6 {
        return Err(Error::Numerical(format!(
            "DMRG state has no even-parity component: ⟨∏Z⟩={parity}"
        )));
    }
    // ψ + (∏Z)ψ as an MPS of doubled bond dimension, then compressed.
    let sites: Vec<SiteMatrices> = state
        .sites()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let mut out = a.clone();
            for (s, m) in out.iter_mut().enumerate() {
                let flipped = if s == 1 { -a[s].clone() } else { a[s].clone() };
                let (r, c) = a[s].shape();
                *m = if n == 1 {
                    &a[s] + &flipped
                } else if k == 0 {
                    let mut b = DMatrix::zeros(1, 2 * c);
                    b.view_mut((0, 0), (1, c)).copy_from(&a[s]);
                    b.view_mut((0, c), (1, c)).copy_from(&flipped);
                    b
                } else if k == n - 1 {
                    let mut b = DMatrix::zeros(2 * r, 1);
                    b.view_mut((0, 0), (r, 1)).copy_from(&a[s]);
                    b.view_mut((r, 0), (r, 1)).copy_from(&flipped);
                    b
                } else {
                    let mut b = DMatrix::zeros(2 * r, 2 * c);
                    b.view_mut((0, 0), (r, c)).copy_from(&a[s]);
                    b.view_mut((r, c), (r, c)).copy_from(&flipped);
                    b
                };
            }
            out
        })
        .collect();
    let (mut even, _) = MatrixProductState::new(sites)?.truncate(max_bond)?;
    even.right_canonicalize()?;
    Ok(even)
}

/// `⟨Σ_k Z_k⟩`.
pub fn total_magnetization(state: &MatrixProductState) -> Result<f64> {
    let n = state.n_qubits();
    (0..n)
        .map(|k| {
            let mut p = PauliString::identity(n);
            p.set(k, PauliOp::Z);
            state.expectation(&p)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_hamiltonian, lanczos_ground_state};

    #[test]
    fn mpo_matches_dense_energy() {
        for model in [Model::Tfim { h: 0.7 }, Model::Xxz { delta: 0.4 }] {
            let spec = HamiltonianSpec::new(model, 6);
            let mps = MatrixProductState::random(6, 4, &mut crate::rng::stream_rng(1, 0)).unwrap();
            let dense = mps.to_dense().unwrap();
            let e = build_hamiltonian(&spec).unwrap().energy(&dense).unwrap();
            assert!((Mpo::for_model(&model, 6).expectation(&mps).unwrap() - e).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_tfim_returns_even_ghz() {
        let n = 8;
        let spec = HamiltonianSpec::new(Model::Tfim { h: 0.0 }, n);
        let r = dmrg_ground_state(&spec, &DmrgConfig::default()).unwrap();
        let parity = PauliString::new(vec![PauliOp::Z; n]);
        assert!((r.state.expectation(&parity).unwrap() - 1.0).abs() < 1e-10);
        assert!((r.energy + 7.0).abs() < 1e-10);
        // (|+…+⟩ + |−…−⟩)/√2 is a stabilizer state.
        let m1 = crate::oracle::pure_moments(&r.state.to_dense().unwrap())
            .unwrap()
            .m1;
        assert!(m1.abs() < 1e-10, "M_1 = {m1}");
    }

    #[test]
    fn even_projection_keeps_even_states() {
        let spec = HamiltonianSpec::new(Model::Tfim { h: 0.9 }, 8);
        let r = dmrg_ground_state(&spec, &DmrgConfig::default()).unwrap();
        let exact = lanczos_ground_state(&spec).unwrap().state;
        assert!(r.state.to_dense().unwrap().fidelity(&exact).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn sector_penalty_vanishes_at_half_filling() {
        let model = Model::Xxz { delta: 0.3 };
        let up = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let down = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let neel = MatrixProductState::product(&[up, down, up, down]).unwrap();
        let polarized = MatrixProductState::product(&[up, up, up, down]).unwrap();
        let (bare, penalized) = (
            Mpo::for_model(&model, 4),
            Mpo::for_model(&model, 4).with_sector_penalty(2.0),
        );
        assert!(
            (bare.expectation(&neel).unwrap() - penalized.expectation(&neel).unwrap()).abs()
                < 1e-12
        );
        let lift =
            penalized.expectation(&polarized).unwrap() - bare.expectation(&polarized).unwrap();
        assert!((lift - 8.0).abs() < 1e-12);
    }

    #[test]
    fn ferromagnetic_xxz_stays_at_half_filling() {
        let spec = HamiltonianSpec::new(Model::Xxz { delta: 1.4 }, 8);
        let r = dmrg_ground_state(&spec, &DmrgConfig::default()).unwrap();
        let exact = lanczos_ground_state(&spec).unwrap();
        assert!((r.energy - exact.energy).abs() < 1e-8);
    }

    #[test]
    fn tfim_classical_limit() {
        let cfg = DmrgConfig {
            max_bond: 8,
            ..Default::default()
        };
        let r = dmrg_ground_state(&HamiltonianSpec::new(Model::Tfim { h: 0.0 }, 12), &cfg).unwrap();
        assert!((r.energy + 11.0).abs() < 1e-8);
    }

    #[test]
    fn matches_lanczos() {
        let cases = [
            (Model::Tfim { h: 1.0 }, 16usize),
            (Model::Xxz { delta: 0.5 }, 20),
        ];
        for (model, chi) in cases {
            let spec = HamiltonianSpec::new(model, 12);
            let cfg = DmrgConfig {
                max_bond: chi,
                ..Default::default()
            };
            let r = dmrg_ground_state(&spec, &cfg).unwrap();
            let exact = lanczos_ground_state(&spec).unwrap();
            assert!(
                (r.energy - exact.energy).abs() < 1e-6,
                "{model:?}: {} vs {}",
                r.energy,
                exact.energy
            );
            assert!(
                r.sweep_energies.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                "{:?}",
                r.sweep_energies
            );
        }
    }

    #[test]
    fn rotated_state_is_rotated_ground_state() {
        let v = crate::gates::rotation(PauliOp::Y, std::f64::consts::FRAC_PI_4);
        let spec = HamiltonianSpec::new(Model::Tfim { h: 0.8 }, 8).with_rotation(v);
        let r = dmrg_ground_state(&spec, &DmrgConfig::default()).unwrap();
        let h = build_hamiltonian(&spec).unwrap();
        let e = h.energy(&r.state.to_dense().unwrap()).unwrap();
        assert!((e - r.energy).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_config() {
        let spec = HamiltonianSpec::new(Model::Tfim { h: 1.0 }, 4);
        assert!(dmrg_ground_state(
            &spec,
            &DmrgConfig {
                cutoff: 1e-3,
                ..Default::default()
            }
        )
        .is_err());
        assert!(dmrg_ground_state(
            &spec,
            &DmrgConfig {
                sweeps: 1,
                ..Default::default()
            }
        )
        .is_err());
    }
}
