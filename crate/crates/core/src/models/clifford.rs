//! Uniformly random Clifford circuits and doped Clifford+T states.
//!
//! The symplectic part is drawn with the Bravyi–Maslov canonical form
//! (quantum Mallows permutation plus random triangular layers), synthesised
//! into H/S/CNOT gates by tableau reduction, and followed by a uniformly
//! random Pauli layer to randomise the signs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates;
use crate::rng::{derive_seed, stream_rng, StreamRng};
use crate::statevector::DenseState;

/// Largest register a random Clifford may act on.
pub const MAX_CLIFFORD_QUBITS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GateRecord", try_from = "GateRecord")]
pub enum Gate {
    H(usize),
    S(usize),
    T(usize),
    Cnot { control: usize, target: usize },
}

#[derive(Serialize, Deserialize)]
struct GateRecord {
    gate: String,
    targets: Vec<usize>,
}

impl From<Gate> for GateRecord {
    fn from(g: Gate) -> Self {
        let (gate, targets) = match g {
            Gate::H(q) => ("h", vec![q]),
            Gate::S(q) => ("s", vec![q]),
            Gate::T(q) => ("t", vec![q]),
            Gate::Cnot { control, target } => ("cx", vec![control, target]),
        };
        GateRecord {
            gate: gate.to_string(),
            targets,
        }
    }
}

impl TryFrom<GateRecord> for Gate {
    type Error = String;

    fn try_from(r: GateRecord) -> std::result::Result<Self, String> {
        match (r.gate.as_str(), r.targets.as_slice()) {
            ("h", [q]) => Ok(Gate::H(*q)),
            ("s", [q]) => Ok(Gate::S(*q)),
            ("t", [q]) => Ok(Gate::T(*q)),
            ("cx", [c, t]) => Ok(Gate::Cnot {
                control: *c,
                target: *t,
            }),
            (g, t) => Err(format!("unknown gate {g} on {} targets", t.len())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn apply(&self, state: &mut DenseState) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        let (h, s, t) = (gates::hadamard(), gates::phase_s(), gates::t_gate());
        for g in &self.gates {
            match *g {
                Gate::H(q) => state.apply_1q(&h, q)?,
                Gate::S(q) => state.apply_1q(&s, q)?,
                Gate::T(q) => state.apply_1q(&t, q)?,
                Gate::Cnot { control, target } => state.apply_cnot(control, target)?,
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.gates).expect("gate list serialises")
    }
}

/// Binary `2n × 2n` matrix; row `i < n` is the image of `X_i`, row `n+i` the
/// image of `Z_i`, each written as `(x_0..x_{n-1} | z_0..z_{n-1})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymplecticMatrix {
    n: usize,
    rows: Vec<Vec<u8>>,
}

impl SymplecticMatrix {
    pub fn identity(n: usize) -> Self {
        let rows = (0..2 * n)
            .map(|i| (0..2 * n).map(|j| (i == j) as u8).collect())
            .collect();
        Self { n, rows }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    /// `M Ω Mᵀ = Ω` over GF(2) with `Ω = [[0, I], [I, 0]]`.
    pub fn is_symplectic(&self) -> bool {
        let n = self.n;
        let form = |a: &[u8], b: &[u8]| {
            (0..n).fold(0u8, |acc, k| acc ^ (a[k] & b[n + k]) ^ (a[n + k] & b[k]))
        };
        (0..2 * n).all(|i| {
            (0..2 * n).all(|j| {
                let expected = (i + n == j || j + n == i) as u8;
                form(&self.rows[i], &self.rows[j]) == expected
            })
        })
    }

    /// Conjugate every row by `gate` (phases dropped).
    pub fn apply_gate(&mut self, gate: Gate) {
        let n = self.n;
        for r in &mut self.rows {
            match gate {
                Gate::H(q) => r.swap(q, n + q),
                Gate::S(q) => r[n + q] ^= r[q],
                Gate::T(_) => panic!("T is not a Clifford gate"),
                Gate::Cnot { control, target } => {
                    r[target] ^= r[control];
                    r[n + control] ^= r[n + target];
                }
            }
        }
    }
}

fn gf2_matmul(a: &[Vec<u8>], b: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let m = b[0].len();
    a.iter()
        .map(|row| {
            let mut out = vec![0u8; m];
            for (k, &aik) in row.iter().enumerate() {
                if aik == 1 {
                    out.iter_mut().zip(&b[k]).for_each(|(o, &bk)| *o ^= bk);
                }
            }
            out
        })
        .collect()
}

/// Inverse of a unit lower-triangular matrix over GF(2).
fn inverse_unit_lower(l: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let n = l.len();
    let mut inv = vec![vec![0u8; n]; n];
    for col in 0..n {
        // Forward substitution for L x = e_col.
        for i in 0..n {
            let mut v = (i == col) as u8;
            for k in 0..i {
                v ^= l[i][k] & inv[k][col];
            }
            inv[i][col] = v;
        }
    }
    inv
}

fn sample_quantum_mallows(n: usize, rng: &mut StreamRng) -> (Vec<bool>, Vec<usize>) {
    let mut had = vec![false; n];
    let mut perm = vec![0usize; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let m = n - i;
        let eps = 4f64.powi(-(m as i32));
        let r: f64 = rng.random();
        let index = -((r + (1.0 - r) * eps).log2().ceil()) as usize;
        had[i] = index < m;
        let k = if index < m { index } else { 2 * m - index - 1 };
        perm[i] = remaining.remove(k);
    }
    (had, perm)
}

fn random_layers(n: usize, rng: &mut StreamRng) -> Vec<Vec<u8>> {
    let mut gamma = vec![vec![0u8; n]; n];
    for (i, row) in gamma.iter_mut().enumerate() {
        row[i] = rng.random::<bool>() as u8;
    }
    for i in 0..n {
        for j in 0..i {
            let b = rng.random::<bool>() as u8;
            gamma[i][j] = b;
            gamma[j][i] = b;
        }
    }
    let mut delta: Vec<Vec<u8>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8).collect())
        .collect();
    for i in 0..n {
        for j in 0..i {
            delta[i][j] = rng.random::<bool>() as u8;
        }
    }
    let prod = gf2_matmul(&gamma, &delta);
    let inv = inverse_unit_lower(&delta);
    let mut table = vec![vec![0u8; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            table[i][j] = delta[i][j];
            table[n + i][j] = prod[i][j];
            table[n + i][n + j] = inv[j][i];
        }
    }
    table
}

/// Uniformly random element of `Sp(2n, 2)`.
pub fn random_symplectic(n: usize, rng: &mut StreamRng) -> SymplecticMatrix {
    let (had, perm) = sample_quantum_mallows(n, rng);
    let table1 = random_layers(n, rng);
    let table2 = random_layers(n, rng);
    let mut table: Vec<Vec<u8>> = (0..n).map(|i| table2[perm[i]].clone()).collect();
    table.extend((0..n).map(|i| table2[n + perm[i]].clone()));
    for (i, &h) in had.iter().enumerate() {
        if h {
            table.swap(i, n + i);
        }
    }
    SymplecticMatrix {
        n,
        rows: gf2_matmul(&table1, &table),
    }
}

/// Gates whose product realises `target` (up to Pauli signs).
pub fn synthesize(target: &SymplecticMatrix) -> Vec<Gate> {
    let n = target.n;
    let mut m = target.clone();
    let mut reduce: Vec<Gate> = Vec::new();
    let mut push = |m: &mut SymplecticMatrix, g: Gate| {
        m.apply_gate(g);
        reduce.push(g);
    };
    for i in 0..n {
        // Image of X_i -> X_i.
        for k in i..n {
            let (x, z) = (m.rows[i][k], m.rows[i][n + k]);
            if x == 0 && z == 1 {
                push(&mut m, Gate::H(k));
            } else if x == 1 && z == 1 {
                push(&mut m, Gate::S(k));
            }
        }
        if m.rows[i][i] == 0 {
            let k = (i + 1..n)
                .find(|&k| m.rows[i][k] == 1)
                .expect("symplectic row has support");
            push(
                &mut m,
                Gate::Cnot {
                    control: k,
                    target: i,
                },
            );
        }
        for k in i + 1..n {
            if m.rows[i][k] == 1 {
                push(
                    &mut m,
                    Gate::Cnot {
                        control: i,
                        target: k,
                    },
                );
            }
        }
        // Image of Z_i -> Z_i.
        let zi = n + i;
        for k in i + 1..n {
            let (x, z) = (m.rows[zi][k], m.rows[zi][n + k]);
            if x == 1 && z == 0 {
                push(&mut m, Gate::H(k));
            } else if x == 1 && z == 1 {
                push(&mut m, Gate::S(k));
                push(&mut m, Gate::H(k));
            }
        }
        for k in i + 1..n {
            if m.rows[zi][n + k] == 1 {
                push(
                    &mut m,
                    Gate::Cnot {
                        control: k,
                        target: i,
                    },
                );
            }
        }
        if m.rows[zi][i] == 1 {
            push(&mut m, Gate::H(i));
            push(&mut m, Gate::S(i));
            push(&mut m, Gate::H(i));
        }
    }
    debug_assert_eq!(m, SymplecticMatrix::identity(n));
    // target = (g_1 ... g_m)^{-1}, so run the inverses in reverse order.
    let mut out = Vec::with_capacity(reduce.len() * 2);
    for g in reduce.into_iter().rev() {
        match g {
            Gate::S(q) => out.extend([Gate::S(q); 3]),
            other => out.push(other),
        }
    }
    out
}

/// Uniformly random `n`-qubit Clifford as an H/S/CNOT circuit.
pub fn random_clifford(n: usize, seed: u64) -> Result<Circuit> {
    if n == 0 || n > MAX_CLIFFORD_QUBITS {
        return Err(Error::SizeGuard {
            what: "random Clifford",
            limit: MAX_CLIFFORD_QUBITS,
            got: n,
        });
    }
    let mut rng = stream_rng(seed, 0);
    let sym = random_symplectic(n, &mut rng);
    let mut gates = synthesize(&sym);
    for q in 0..n {
        let (x, z): (bool, bool) = (rng.random(), rng.random());
        if x {
            gates.extend([Gate::H(q), Gate::S(q), Gate::S(q), Gate::H(q)]);
        }
        if z {
            gates.extend([Gate::S(q), Gate::S(q)]);
        }
    }
    Ok(Circuit { n_qubits: n, gates })
}

/// `U_C^(0) Π_{k=1}^{N_T} (T ⊗ I) U_C^(k) |0⟩` with fresh random Cliffords.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordTSpec {
    pub n_qubits: usize,
    pub n_t: usize,
    pub seed: u64,
}

impl CliffordTSpec {
    /// T-gate density `N_T / N`.
    pub fn density(&self) -> f64 {
        self.n_t as f64 / self.n_qubits as f64
    }
}

pub fn clifford_t_state(spec: &CliffordTSpec) -> Result<DenseState> {
    let n = spec.n_qubits;
    let mut state = DenseState::zero(n)?;
    random_clifford(n, derive_seed(spec.seed, spec.n_t as u64))?.apply(&mut state)?;
    let t = gates::t_gate();
    for k in (0..spec.n_t).rev() {
        state.apply_1q(&t, 0)?;
        random_clifford(n, derive_seed(spec.seed, k as u64))?.apply(&mut state)?;
    }
    Ok(state)
}

/// Saturation-transition densities `(z_c0, z_c1, z_c2)` of doped Clifford circuits.
pub fn transition_constants() -> (f64, f64, f64) {
    (1.0, 2.0, std::f64::consts::LN_2 / (4.0f64 / 3.0).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use std::collections::HashMap;

    #[test]
    fn synthesis_reproduces_tableau() {
        for seed in 0..50 {
            let n = 1 + seed as usize % 6;
            let sym = random_symplectic(n, &mut stream_rng(seed, 0));
            assert!(sym.is_symplectic());
            let mut m = SymplecticMatrix::identity(n);
            for g in synthesize(&sym) {
                m.apply_gate(g);
            }
            assert_eq!(m, sym);
        }
    }

    #[test]
    fn symplectic_sampling_is_uniform_on_two_qubits() {
        // |Sp(4,2)| = 720.
        let draws = 72_000;
        let mut counts: HashMap<SymplecticMatrix, usize> = HashMap::new();
        let mut rng = stream_rng(99, 0);
        for _ in 0..draws {
            *counts.entry(random_symplectic(2, &mut rng)).or_default() += 1;
        }
        assert_eq!(counts.len(), 720);
        let expected = draws as f64 / 720.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 719 degrees of freedom: mean 719, sd ≈ 37.9.
        assert!(chi2 < 719.0 + 5.0 * 37.9, "chi2 = {chi2}");
    }

    #[test]
    fn single_qubit_stabilizer_states_uniform() {
        let draws = 100_000;
        let mut counts: HashMap<(i64, i64, i64), usize> = HashMap::new();
        let paulis: Vec<PauliString> = ["X", "Y", "Z"].iter().map(|s| s.parse().unwrap()).collect();
        for seed in 0..draws {
            let mut s = DenseState::zero(1).unwrap();
            random_clifford(1, seed).unwrap().apply(&mut s).unwrap();
            let e: Vec<i64> = paulis
                .iter()
                .map(|p| s.expectation(p).unwrap().round() as i64)
                .collect();
            *counts.entry((e[0], e[1], e[2])).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts.values() {
            assert!(
                (*c as f64 - draws as f64 * p).abs() < 3.0 * sigma,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn clifford_output_is_stabilizer() {
        let n = 4;
        let mut s = DenseState::zero(n).unwrap();
        random_clifford(n, 5).unwrap().apply(&mut s).unwrap();
        let mut nonzero = 0;
        for idx in 0..4u64.pow(n as u32) {
            let e = s
                .expectation(&PauliString::from_index(n, idx).unwrap())
                .unwrap();
            assert!(e.abs() < 1e-9 || (e.abs() - 1.0).abs() < 1e-9);
            if e.abs() > 0.5 {
                nonzero += 1;
            }
        }
        assert_eq!(nonzero, 1 << n);
    }

    #[test]
    fn circuit_json_roundtrip() {
        let c = random_clifford(3, 8).unwrap();
        let back: Vec<Gate> = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c.gates);
        assert!(c.to_json().starts_with("[{\"gate\":"));
    }

    #[test]
    fn transition_values() {
        let (a, b, c) = transition_constants();
        assert_eq!((a, b), (1.0, 2.0));
        assert!((c - 2.409).abs() < 1e-3);
    }
}
