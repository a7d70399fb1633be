//! Exact enumeration of Pauli spectra and every SRE-type quantity derived
//! from them. Exponential cost; used as ground truth at small N.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, Region};
use crate::special::trigamma;
use crate::statevector::{DenseOperator, DenseState};

/// Spectral values below this are treated as exact zeros before logs.
pub const ZERO_TOL: f64 = 1e-14;
pub const MAX_PURE_QUBITS: usize = 10;
pub const MAX_MIXED_QUBITS: usize = 8;
pub const MAX_STREAMING_QUBITS: usize = 14;

/// In-place unnormalised Walsh–Hadamard transform.
fn walsh_hadamard(v: &mut [C64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Spread dense-index masks into Pauli-index bit positions.
struct IndexMap {
    x: Vec<u64>,
    z: Vec<u64>,
}

impl IndexMap {
    fn new(n: usize) -> Self {
        let spread = |m: usize, offset: usize| {
            (0..n).fold(0u64, |acc, q| {
                acc | ((((m >> (n - 1 - q)) & 1) as u64) << (2 * q + offset))
            })
        };
        let dim = 1usize << n;
        Self {
            x: (0..dim).map(|m| spread(m, 0)).collect(),
            z: (0..dim).map(|m| spread(m, 1)).collect(),
        }
    }

    fn index(&self, x: usize, z: usize) -> usize {
        (self.x[x] | self.z[z]) as usize
    }
}

fn check(limit: usize, n: usize, what: &'static str) -> Result<()> {
    if n > limit {
        return Err(Error::SizeGuard {
            what,
            limit,
            got: n,
        });
    }
    Ok(())
}

/// `tr(ρP)²` for every Pauli string, indexed by [`PauliString::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSpectrum {
    n_qubits: usize,
    values: Vec<f64>,
    purity: f64,
}

impl PauliSpectrum {
    /// Pure-state spectrum in `O(N·4^N)`; limited to 10 qubits.
    pub fn from_state(state: &DenseState) -> Result<Self> {
        let n = state.n_qubits();
        check(MAX_PURE_QUBITS, n, "pure-state Pauli spectrum")?;
        let amps = state.amplitudes();
        Ok(Self::from_rows(n, 1.0, |x, buf| {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = amps[i ^ x].conj() * amps[i];
            }
        }))
    }

    /// Mixed-state spectrum; limited to 8 qubits.
    pub fn from_operator(rho: &DenseOperator) -> Result<Self> {
        let n = rho.n_qubits();
        check(MAX_MIXED_QUBITS, n, "mixed-state Pauli spectrum")?;
        let m = rho.matrix();
        Ok(Self::from_rows(n, rho.purity(), |x, buf| {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = m[(i, i ^ x)];
            }
        }))
    }

    /// `fill(x, buf)` writes `h_x(i)` with `tr(ρP_{x,z}) ∝ Σ_i (−1)^{z·i} h_x(i)`.
    fn from_rows(n: usize, purity: f64, mut fill: impl FnMut(usize, &mut [C64])) -> Self {
        let dim = 1usize << n;
        let map = IndexMap::new(n);
        let mut values = vec![0.0; dim * dim];
        let mut buf = vec![C64::new(0.0, 0.0); dim];
        for x in 0..dim {
            fill(x, &mut buf);
            walsh_hadamard(&mut buf);
            for (z, f) in buf.iter().enumerate() {
                values[map.index(x, z)] = f.norm_sqr();
            }
        }
        Self {
            n_qubits: n,
            values,
            purity,
        }
    }

    /// Build from explicit values (e.g. analytic toy spectra).
    pub fn from_values(n_qubits: usize, values: Vec<f64>, purity: f64) -> Result<Self> {
        if values.len() != 1usize << (2 * n_qubits) {
            return Err(Error::DimensionMismatch {
                expected: 1 << (2 * n_qubits),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0))
            || !(purity > 0.0 && purity <= 1.0 + 1e-12)
        {
            return Err(Error::invalid(
                "spectrum values must be finite and non-negative",
            ));
        }
        Ok(Self {
            n_qubits,
            values,
            purity,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, p: &PauliString) -> f64 {
        self.values[p.index().expect("spectrum strings fit the index") as usize]
    }

    pub fn purity(&self) -> f64 {
        self.purity
    }

    pub fn is_pure(&self) -> bool {
        (self.purity - 1.0).abs() < 1e-9
    }

    /// `p(P) = 2^{−N} tr(ρP)² / tr ρ²`.
    pub fn p(&self) -> Vec<f64> {
        let scale = 1.0 / ((1u64 << self.n_qubits) as f64 * self.purity);
        self.values.iter().map(|v| v * scale).collect()
    }

    fn cleaned_p(&self) -> impl Iterator<Item = f64> + '_ {
        let scale = 1.0 / ((1u64 << self.n_qubits) as f64 * self.purity);
        self.values
            .iter()
            .filter(|&&v| v >= ZERO_TOL)
            .map(move |v| v * scale)
    }

    fn offset(&self) -> f64 {
        -self.purity.ln() - self.n_qubits as f64 * LN_2
    }

    /// `M̃_α = H_α(p) + S_2(ρ) − N ln 2` for `α ≥ 0, α ≠ 1`.
    pub fn sre(&self, alpha: f64) -> Result<f64> {
        if !(alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "Rényi index {alpha} must be non-negative"
            )));
        }
        if (alpha - 1.0).abs() < 1e-12 {
            return Err(Error::invalid("use von_neumann_sre for α = 1"));
        }
        Ok(renyi_entropy(self.cleaned_p(), alpha) + self.offset())
    }

    /// `M̃_1 = H_1(p) + S_2(ρ) − N ln 2`; `M_1` for pure states.
    pub fn von_neumann_sre(&self) -> f64 {
        shannon_entropy(self.cleaned_p()) + self.offset()
    }

    /// Variance of `−ln⟨P⟩²` under `p`; pure states only.
    pub fn magic_capacity(&self) -> Result<f64> {
        if !self.is_pure() {
            return Err(Error::invalid("magic capacity is defined for pure states"));
        }
        let scale = 1.0 / (1u64 << self.n_qubits) as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for &v in self.values.iter().filter(|&&v| v >= ZERO_TOL) {
            let (p, l) = (v * scale, v.ln());
            m1 += p * l;
            m2 += p * l * l;
        }
        Ok((m2 - m1 * m1).max(0.0))
    }

    /// Central second difference of `F(α) = (1−α) M_α` at `α = 1`.
    pub fn capacity_via_alpha_derivative(&self, step: f64) -> Result<f64> {
        if !(1e-4..=1e-2).contains(&step) {
            return Err(Error::invalid(format!("step {step} outside [1e-4, 1e-2]")));
        }
        let f = |a: f64| -> Result<f64> { Ok((1.0 - a) * self.sre(a)?) };
        Ok((f(1.0 + step)? + f(1.0 - step)?) / (step * step))
    }

    /// `Π(P) ∝ tr(ρP)⁴`.
    pub fn pi_distribution(&self) -> Vec<f64> {
        let total: f64 = self.values.iter().map(|v| v * v).sum();
        self.values.iter().map(|v| v * v / total).collect()
    }

    /// `M_α − M_{2α−1}` and the predicted relative variance of the
    /// `M_α` sampling estimator, for `α > 1`.
    pub fn antiflatness(&self, alpha: f64) -> Result<Antiflatness> {
        if !(alpha > 1.0) {
            return Err(Error::invalid("anti-flatness needs α > 1"));
        }
        let gap = self.sre(alpha)? - self.sre(2.0 * alpha - 1.0)?;
        let variance = ((2.0 * (alpha - 1.0) * gap).exp() - 1.0) / (alpha - 1.0).abs();
        Ok(Antiflatness { gap, variance })
    }

    /// Rows for the spectrum CSV export.
    pub fn rows(&self, q: Option<&QSpectrum>) -> Vec<SpectrumRow> {
        let p = self.p();
        let pi = self.pi_distribution();
        (0..self.values.len())
            .map(|i| SpectrumRow {
                pauli_text: PauliString::from_index(self.n_qubits, i as u64)
                    .expect("in range")
                    .to_string(),
                trP_sq: self.values[i],
                p: p[i],
                q: q.map_or(p[i], |q| q.values[i]),
                pi: pi[i],
            })
            .collect()
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub pauli_text: String,
    pub trP_sq: f64,
    pub p: f64,
    pub q: f64,
    pub pi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Antiflatness {
    pub gap: f64,
    pub variance: f64,
}

fn shannon_entropy(p: impl Iterator<Item = f64>) -> f64 {
    p.filter(|&x| x > 0.0).map(|x| -x * x.ln()).sum()
}

fn renyi_entropy(p: impl Iterator<Item = f64>, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return (p.filter(|&x| x > 0.0).count() as f64).ln();
    }
    p.filter(|&x| x > 0.0)
        .map(|x| x.powf(alpha))
        .sum::<f64>()
        .ln()
        / (1.0 - alpha)
}

/// `M_1`, `M_2` and `C_M` of a pure state, accumulated without storing the
/// spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureMoments {
    pub m1: f64,
    pub m2: f64,
    pub capacity: f64,
}

/// Streams the spectrum one `x` row at a time, in parallel over rows;
/// `O(N·4^N)` time, `O(2^N)` memory per worker, up to 14 qubits. Row sums
/// are combined in a fixed order so the result does not depend on threads.
pub fn pure_moments(state: &DenseState) -> Result<PureMoments> {
    let n = state.n_qubits();
    check(MAX_STREAMING_QUBITS, n, "streaming Pauli moments")?;
    let amps = state.amplitudes();
    let dim = 1usize << n;
    let rows: Vec<[f64; 3]> = (0..dim)
        .into_par_iter()
        .map_init(
            || vec![C64::new(0.0, 0.0); dim],
            |buf, x| {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = amps[i ^ x].conj() * amps[i];
                }
                walsh_hadamard(buf);
                let mut acc = [0.0; 3];
                for f in buf.iter() {
                    let v = f.norm_sqr();
                    acc[2] += v * v;
                    if v >= ZERO_TOL {
                        let l = v.ln();
                        acc[0] += v * l;
                        acc[1] += v * l * l;
                    }
                }
                acc
            },
        )
        .collect();
    let mut total = [0.0; 3];
    for r in &rows {
        for (t, v) in total.iter_mut().zip(r) {
            *t += v;
        }
    }
    let scale = 1.0 / dim as f64;
    let mean = total[0] * scale;
    Ok(PureMoments {
        m1: -mean,
        m2: -(total[2] * scale).ln(),
        capacity: (total[1] * scale - mean * mean).max(0.0),
    })
}

/// `Σ p ln(p/q)`; infinite when `q` misses support of `p`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| {
            if *b > 0.0 {
                a * (a / b).ln()
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// `q(P) = 2^{−N} tr(ρPρP)` for every Pauli string.
#[derive(Clone, Debug, PartialEq)]
pub struct QSpectrum {
    n_qubits: usize,
    values: Vec<f64>,
}

impl QSpectrum {
    /// Limited to 8 qubits; `O(8^N)`.
    pub fn from_operator(rho: &DenseOperator) -> Result<Self> {
        let n = rho.n_qubits();
        check(MAX_MIXED_QUBITS, n, "q spectrum")?;
        let dim = 1usize << n;
        let m = rho.matrix();
        let map = IndexMap::new(n);
        let scale = 1.0 / dim as f64;
        let mut values = vec![0.0; dim * dim];
        let mut g = vec![C64::new(0.0, 0.0); dim];
        for x in 0..dim {
            // tr(ρPρP) = Σ_d (−1)^{z·d} Σ_i ρ[i, i⊕d] ρ[i⊕d⊕x, i⊕x]
            for (d, gd) in g.iter_mut().enumerate() {
                *gd = (0..dim)
                    .map(|i| m[(i, i ^ d)] * m[(i ^ d ^ x, i ^ x)])
                    .sum();
            }
            walsh_hadamard(&mut g);
            for (z, v) in g.iter().enumerate() {
                values[map.index(x, z)] = (v.re * scale).max(0.0);
            }
        }
        Ok(Self {
            n_qubits: n,
            values,
        })
    }

    pub fn from_state(state: &DenseState) -> Result<Self> {
        Self::from_operator(&DenseOperator::from_state(state))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, p: &PauliString) -> f64 {
        self.values[p.index().expect("spectrum strings fit the index") as usize]
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(self.values.iter().copied().filter(|&v| v >= ZERO_TOL))
    }

    pub fn renyi_entropy(&self, alpha: f64) -> f64 {
        renyi_entropy(
            self.values.iter().copied().filter(|&v| v >= ZERO_TOL),
            alpha,
        )
    }

    /// Sum over the four Paulis of `qubit`, giving the q of the reduced state.
    pub fn marginalize(&self, qubit: usize) -> Result<QSpectrum> {
        let n = self.n_qubits;
        if qubit >= n {
            return Err(Error::IndexOutOfRange {
                index: qubit,
                n_qubits: n,
            });
        }
        let mut values = vec![0.0; 1usize << (2 * (n - 1))];
        for (i, v) in self.values.iter().enumerate() {
            let low = i & ((1 << (2 * qubit)) - 1);
            let high = i >> (2 * qubit + 2);
            values[low | (high << (2 * qubit))] += v;
        }
        Ok(QSpectrum {
            n_qubits: n - 1,
            values,
        })
    }
}

/// Which mutual-SRE flavour to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutualVariant {
    /// Built on `p_ρ ∝ tr(ρP)²`.
    P,
    /// Built on `q_ρ = 2^{−N} tr(ρPρP)`.
    Q,
}

/// `M̃_α` of a density operator in the chosen flavour.
pub fn mixed_sre(rho: &DenseOperator, alpha: f64, variant: MutualVariant) -> Result<f64> {
    let n = rho.n_qubits();
    match variant {
        MutualVariant::P => {
            let s = PauliSpectrum::from_operator(rho)?;
            if (alpha - 1.0).abs() < 1e-12 {
                Ok(s.von_neumann_sre())
            } else {
                s.sre(alpha)
            }
        }
        MutualVariant::Q => {
            if alpha != 1.0 && alpha != 2.0 {
                return Err(Error::invalid("the q flavour is defined for α ∈ {1, 2}"));
            }
            let q = QSpectrum::from_operator(rho)?;
            let h = if alpha == 1.0 {
                q.entropy()
            } else {
                q.renyi_entropy(2.0)
            };
            Ok(h - rho.renyi2_entropy() - n as f64 * LN_2)
        }
    }
}

fn check_regions(state: &DenseState, a: &Region, b: &Region) -> Result<()> {
    if a.n_qubits() != state.n_qubits() || b.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: state.n_qubits(),
            got: a.n_qubits(),
        });
    }
    if a.is_empty() || b.is_empty() || !a.is_disjoint(b) {
        return Err(Error::invalid("regions must be non-empty and disjoint"));
    }
    Ok(())
}

/// `I_α = M̃_α(ρ_AB) − M̃_α(ρ_A) − M̃_α(ρ_B)` with `ρ_AB` the reduced state of `A ∪ B`.
pub fn mutual_sre_regions(
    state: &DenseState,
    a: &Region,
    b: &Region,
    alpha: f64,
    variant: MutualVariant,
) -> Result<f64> {
    check_regions(state, a, b)?;
    let ab = a.union(b)?;
    check(MAX_MIXED_QUBITS, ab.len(), "mutual SRE")?;
    let whole = mixed_sre(&state.reduced_density(&ab)?, alpha, variant)?;
    let part_a = mixed_sre(&state.reduced_density(a)?, alpha, variant)?;
    let part_b = mixed_sre(&state.reduced_density(b)?, alpha, variant)?;
    Ok(whole - part_a - part_b)
}

/// Mutual SRE across the bipartition `(A, complement)`.
pub fn mutual_sre(
    state: &DenseState,
    a: &Region,
    alpha: f64,
    variant: MutualVariant,
) -> Result<f64> {
    mutual_sre_regions(state, a, &a.complement(), alpha, variant)
}

fn fourth_power_sum(rho: &DenseOperator) -> Result<f64> {
    Ok(PauliSpectrum::from_operator(rho)?
        .values()
        .iter()
        .map(|v| v * v)
        .sum())
}

/// `B = −ln(Σ tr(ρ_A P_A)⁴ · Σ tr(ρ_B P_B)⁴ / Σ tr(ρ_AB P)⁴)`.
pub fn b_term(state: &DenseState, a: &Region, b: &Region) -> Result<f64> {
    check_regions(state, a, b)?;
    let ab = a.union(b)?;
    check(MAX_MIXED_QUBITS, ab.len(), "B term")?;
    let whole = fourth_power_sum(&state.reduced_density(&ab)?)?;
    let sa = fourth_power_sum(&state.reduced_density(a)?)?;
    let sb = fourth_power_sum(&state.reduced_density(b)?)?;
    Ok(-(sa * sb / whole).ln())
}

/// 2-Rényi mutual information `S_2(A) + S_2(B) − S_2(AB)`.
pub fn renyi2_mutual_information(state: &DenseState, a: &Region, b: &Region) -> Result<f64> {
    check_regions(state, a, b)?;
    let ab = a.union(b)?;
    Ok(state.renyi2_entropy(a)? + state.renyi2_entropy(b)? - state.renyi2_entropy(&ab)?)
}

/// `(M_1, C_M)` of a state whose non-identity spectrum is flat at `1/(2^N+1)`.
pub fn uniform_reference(n_qubits: usize) -> (f64, f64) {
    let d = 2f64.powi(n_qubits as i32);
    let l = (d + 1.0).ln();
    ((1.0 - 1.0 / d) * l, (1.0 - 1.0 / d) / d * l * l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Complex,
    Real,
}

/// Gaussian-spectrum model of typical states: non-identity expectations are
/// i.i.d. normal with the ensemble's exact variance.
#[derive(Clone, Copy, Debug)]
pub struct TypicalReference {
    dim: f64,
    /// Number of Paulis with non-vanishing typical expectation, minus identity.
    active: f64,
    variance: f64,
}

impl TypicalReference {
    pub fn new(n_qubits: usize, ensemble: Ensemble) -> Result<Self> {
        if n_qubits < 1 {
            return Err(Error::invalid("typical reference needs N ≥ 1"));
        }
        let d = 2f64.powi(n_qubits as i32);
        let (eta, variance) = match ensemble {
            Ensemble::Complex => (d * d, 1.0 / (d + 1.0)),
            Ensemble::Real => (d * (d + 1.0) / 2.0, 2.0 / (d + 2.0)),
        };
        Ok(Self {
            dim: d,
            active: eta - 1.0,
            variance,
        })
    }

    fn weight(&self) -> f64 {
        self.active * self.variance / self.dim
    }

    fn log_scale(&self) -> f64 {
        (2.0 * self.variance).ln()
    }

    /// `M_α` for `α ≠ 1`.
    pub fn m_alpha(&self, alpha: f64) -> f64 {
        let moment = (alpha * self.log_scale() + ln_gamma(alpha + 0.5)).exp() / PI.sqrt();
        let g = self.active * moment / self.dim + 1.0 / self.dim;
        g.ln() / (1.0 - alpha)
    }

    pub fn m1(&self) -> f64 {
        -self.weight() * (self.log_scale() + digamma(1.5))
    }

    pub fn capacity(&self) -> f64 {
        let w = self.weight();
        let a = self.log_scale() + digamma(1.5);
        w * (a * a + trigamma(1.5)) - w * w * a * a
    }
}

/// Large-N limit of the typical-state capacity, `ψ'(3/2) = π²/2 − 4`.
pub fn typical_capacity_limit() -> f64 {
    trigamma(1.5)
}
