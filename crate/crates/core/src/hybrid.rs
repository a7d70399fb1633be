//! Hybrid Schrödinger–Feynman sampling of Pauli strings from a dense state.
//!
//! The first `k0 = ⌈N/2⌉` qubit pairs are drawn from marginals built on the
//! Gram matrices of prefix slices of the amplitude vector. The state of the
//! remaining pairs, conditioned on that prefix outcome, is then materialized
//! once (`2^{N−k0} × 2^{N−k0}` entries) and measured pair by pair.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{sample_stats, EstimateReport};
use crate::pauli::PauliString;
use crate::rng::stream_rng;
use crate::statevector::{pauli_expectation_raw, DenseState};

pub const MAX_SAMPLER_QUBITS: usize = 20;
/// Negative candidate probabilities above this (relative) are clamped to 0.
const CLAMP_TOL: f64 = 1e-9;
/// Relative probability deficit that aborts a draw.
const DEFICIT_TOL: f64 = 1e-6;
/// Expectations this close to ±1 are snapped so stabilizer terms are exactly 0.
const SNAP_TOL: f64 = 1e-12;
/// A sampled string with smaller `⟨P⟩²` has zero probability under `p`.
const MIN_SQUARED_EXPECTATION: f64 = 1e-12;

/// Which two-copy state is measured in the Bell basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// `|ψ*⟩|ψ⟩`: strings drawn from `2^{−N}⟨ψ|P|ψ⟩²`.
    Pauli,
    /// `|ψ⟩|ψ⟩`: strings drawn from `2^{−N}|⟨ψ*|P|ψ⟩|²`.
    Bell,
}

/// Gram matrices `S_k[y][y'] = ⟨ψ̃_y|ψ̃_{y'}⟩` of length-`2^{N−k}` prefix slices.
#[derive(Clone, Debug)]
struct GramLadder {
    /// `levels[k]` is `2^k × 2^k`, row-major, for `k = 0..=k0`.
    levels: Vec<Vec<C64>>,
}

impl GramLadder {
    fn new(amps: &[C64], k0: usize) -> Self {
        let rows = 1usize << k0;
        let len = amps.len() / rows;
        let slices: Vec<&[C64]> = amps.chunks(len).collect();
        let mut top = vec![C64::new(0.0, 0.0); rows * rows];
        top.par_chunks_mut(rows).enumerate().for_each(|(y, row)| {
            for (yp, entry) in row.iter_mut().enumerate().skip(y) {
                *entry = slices[y]
                    .iter()
                    .zip(slices[yp])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
            }
        });
        for y in 0..rows {
            for yp in 0..y {
                top[y * rows + yp] = top[yp * rows + y].conj();
            }
        }
        let mut levels = vec![top];
        for k in (0..k0).rev() {
            let fine = levels.last().expect("non-empty");
            let (r, fr) = (1usize << k, 1usize << (k + 1));
            let mut coarse = vec![C64::new(0.0, 0.0); r * r];
            for a in 0..r {
                for b in 0..r {
                    coarse[a * r + b] =
                        fine[(2 * a) * fr + 2 * b] + fine[(2 * a + 1) * fr + 2 * b + 1];
                }
            }
            levels.push(coarse);
        }
        levels.reverse();
        Self { levels }
    }

    fn entries(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// Unnormalized probability `2^k P_k(x, z)` split by the parity of the last
/// bit of `y ⊕ y'`: returns `(even, odd)` so that `P = 2^{−k}(even ± odd)`
/// for last z bit 0 / 1. `z_prev` holds the first `k−1` z bits.
fn level_sums(gram: &[C64], k: usize, x: usize, z_prev: usize, mode: SamplingMode) -> (f64, f64) {
    let r = 1usize << k;
    let z_high = z_prev << 1;
    let (mut even, mut odd) = (0.0, 0.0);
    for y in 0..r {
        for yp in 0..r {
            let c = match mode {
                SamplingMode::Pauli => gram[(y ^ x) * r + (yp ^ x)] * gram[y * r + yp].conj(),
                SamplingMode::Bell => gram[(yp ^ x) * r + (y ^ x)] * gram[yp * r + y],
            };
            let d = y ^ yp;
            let v = if (z_high & d).count_ones() % 2 == 1 {
                -c.re
            } else {
                c.re
            };
            if d & 1 == 0 {
                even += v;
            } else {
                odd += v;
            }
        }
    }
    (even, odd)
}

/// Level-`k` marginal probability of the prefix outcome `(x, z)` (k-bit masks).
pub fn prefix_probability(
    state: &DenseState,
    k: usize,
    x: usize,
    z: usize,
    mode: SamplingMode,
) -> Result<f64> {
    let n = state.n_qubits();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("prefix length {k} outside 1..={n}")));
    }
    let ladder = GramLadder::new(state.amplitudes(), k);
    let (even, odd) = level_sums(&ladder.levels[k], k, x, z >> 1, mode);
    let sign = if z & 1 == 1 { -1.0 } else { 1.0 };
    Ok((even + sign * odd) / (1u64 << k) as f64)
}

/// Pick among candidate weights given the parent's weight; clamps tiny
/// negative residues and aborts on a real deficit.
fn choose<R: Rng + ?Sized>(weights: &mut [f64; 4], parent: f64, rng: &mut R) -> Result<usize> {
    for w in weights.iter_mut() {
        if *w < 0.0 {
            if *w < -CLAMP_TOL * parent {
                return Err(Error::Numerical(format!(
                    "negative branch probability {w:e}"
                )));
            }
            *w = 0.0;
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || (1.0 - total / parent).abs() > DEFICIT_TOL {
        return Err(Error::Numerical(format!(
            "probability deficit: branches sum to {total:e}, parent {parent:e}"
        )));
    }
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return Ok(i);
        }
        u -= w;
    }
    Ok(weights
        .iter()
        .rposition(|w| *w > 0.0)
        .expect("positive total"))
}

/// Per-state sampler; cheap to share across threads.
#[derive(Clone, Debug)]
pub struct HybridSampler<'a> {
    state: &'a DenseState,
    mode: SamplingMode,
    switch_level: usize,
    ladder: GramLadder,
}

impl<'a> HybridSampler<'a> {
    pub fn new(state: &'a DenseState, mode: SamplingMode) -> Result<Self> {
        let n = state.n_qubits();
        if n > MAX_SAMPLER_QUBITS {
            return Err(Error::SizeGuard {
                what: "hybrid sampler",
                limit: MAX_SAMPLER_QUBITS,
                got: n,
            });
        }
        let switch_level = n.div_ceil(2);
        let ladder = GramLadder::new(state.amplitudes(), switch_level);
        Ok(Self {
            state,
            mode,
            switch_level,
            ladder,
        })
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    /// Number of qubit pairs drawn from Gram marginals before the switch.
    pub fn switch_level(&self) -> usize {
        self.switch_level
    }

    /// Peak number of complex numbers held besides the state itself.
    pub fn workspace_peak(&self) -> usize {
        let rest = 1usize << (self.state.n_qubits() - self.switch_level);
        self.ladder.entries() + 2 * rest * rest
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PauliString> {
        let n = self.state.n_qubits();
        let k0 = self.switch_level;
        let (mut x, mut z) = (0usize, 0usize);
        let mut parent = 1.0;
        for k in 1..=k0 {
            let gram = &self.ladder.levels[k];
            let scale = 1.0 / (1u64 << k) as f64;
            let mut weights = [0.0; 4];
            for xb in 0..2 {
                let (even, odd) = level_sums(gram, k, (x << 1) | xb, z, self.mode);
                weights[2 * xb] = (even + odd) * scale;
                weights[2 * xb + 1] = (even - odd) * scale;
            }
            let pick = choose(&mut weights, parent, rng)?;
            parent = weights[pick];
            x = (x << 1) | (pick >> 1);
            z = (z << 1) | (pick & 1);
        }
        let rest = n - k0;
        if rest > 0 {
            let mut w = self.conditioned_pairs(x, z);
            let mut dim = 1usize << rest;
            while dim > 1 {
                let half = dim / 2;
                // A_b[u'][v'] = W[(b ⊕ xb, u')][(b, v')]
                let block = |w: &[C64], xb: usize, b: usize| -> Vec<C64> {
                    let mut out = Vec::with_capacity(half * half);
                    for u in 0..half {
                        let row = ((b ^ xb) * half + u) * dim + b * half;
                        out.extend_from_slice(&w[row..row + half]);
                    }
                    out
                };
                let mut weights = [0.0; 4];
                let mut blocks = Vec::with_capacity(2);
                for xb in 0..2 {
                    let (a0, a1) = (block(&w, xb, 0), block(&w, xb, 1));
                    let n0: f64 = a0.iter().map(|c| c.norm_sqr()).sum();
                    let n1: f64 = a1.iter().map(|c| c.norm_sqr()).sum();
                    let cross: f64 = a0.iter().zip(&a1).map(|(p, q)| (p.conj() * q).re).sum();
                    weights[2 * xb] = 0.5 * (n0 + n1) + cross;
                    weights[2 * xb + 1] = 0.5 * (n0 + n1) - cross;
                    blocks.push((a0, a1));
                }
                let pick = choose(&mut weights, parent, rng)?;
                parent = weights[pick];
                let (xb, zb) = (pick >> 1, pick & 1);
                let sign = if zb == 1 {
                    -FRAC_1_SQRT_2
                } else {
                    FRAC_1_SQRT_2
                };
                let (a0, a1) = &blocks[xb];
                w = a0
                    .iter()
                    .zip(a1)
                    .map(|(p, q)| p * FRAC_1_SQRT_2 + q * sign)
                    .collect();
                x = (x << 1) | xb;
                z = (z << 1) | zb;
                dim = half;
            }
        }
        Ok(PauliString::from_index_masks(n, x, z))
    }

    /// `W[u][v] = 2^{−k0/2} Σ_y (−1)^{z·y} ψ̄_{y⊕x}[u] ψ_y[v]`, bar = conjugate
    /// in Pauli mode only.
    fn conditioned_pairs(&self, x: usize, z: usize) -> Vec<C64> {
        let k0 = self.switch_level;
        let dim = 1usize << (self.state.n_qubits() - k0);
        let amps = self.state.amplitudes();
        let scale = 1.0 / ((1u64 << k0) as f64).sqrt();
        let mut w = vec![C64::new(0.0, 0.0); dim * dim];
        for y in 0..1usize << k0 {
            let src = y ^ x;
            let left = &amps[src * dim..(src + 1) * dim];
            let right = &amps[y * dim..(y + 1) * dim];
            let sign = if (z & y).count_ones() % 2 == 1 {
                -scale
            } else {
                scale
            };
            for (u, l) in left.iter().enumerate() {
                let l = match self.mode {
                    SamplingMode::Pauli => l.conj(),
                    SamplingMode::Bell => *l,
                } * sign;
                if l.norm_sqr() == 0.0 {
                    continue;
                }
                for (entry, r) in w[u * dim..(u + 1) * dim].iter_mut().zip(right) {
                    *entry += l * r;
                }
            }
        }
        w
    }

    /// Draw `index` of a run seeded with `seed`, on its own stream.
    pub fn sample_indexed(&self, seed: u64, index: u64) -> Result<PauliString> {
        self.sample(&mut stream_rng(seed, index))
    }

    /// `count` draws, parallel over samples; identical for any thread count.
    pub fn sample_batch(&self, seed: u64, count: usize) -> Result<Vec<PauliString>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample_indexed(seed, i))
            .collect()
    }
}

/// `ln⟨ψ|P|ψ⟩²` for a sampled string; zero-probability strings abort.
fn log_squared_expectation(state: &DenseState, p: &PauliString) -> Result<f64> {
    let (x, z) = p.index_masks();
    let e = pauli_expectation_raw(state.amplitudes(), x, z, p.y_count());
    let sq = e * e;
    if (sq - 1.0).abs() < SNAP_TOL {
        return Ok(0.0);
    }
    if sq < MIN_SQUARED_EXPECTATION {
        return Err(Error::Numerical(format!(
            "sampled {p} has ⟨P⟩² = {sq:e}; sampler defect"
        )));
    }
    Ok(sq.ln())
}

/// `ln⟨P⟩²` for `count` independent draws from `p`.
pub fn sample_log_expectations(state: &DenseState, count: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = HybridSampler::new(state, SamplingMode::Pauli)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| log_squared_expectation(state, &sampler.sample_indexed(seed, i)?))
        .collect()
}

/// Unbiased `M_1 = −E_p[ln⟨P⟩²]`.
pub fn estimate_m1(
    state: &DenseState,
    count: usize,
    seed: u64,
    keep_samples: bool,
) -> Result<EstimateReport> {
    if count < 100 {
        return Err(Error::invalid("M_1 estimation needs K ≥ 100"));
    }
    let start = Instant::now();
    let logs = sample_log_expectations(state, count, seed)?;
    let stats = sample_stats(&logs)?;
    Ok(EstimateReport {
        estimator: "m1_hybrid".into(),
        value: -stats.mean,
        stderr: stats.stderr_mean,
        k: count,
        seed,
        samples: keep_samples.then_some(logs),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// `C_M = Var_p(ln⟨P⟩²)` with the `K − 1` denominator.
pub fn estimate_capacity(
    state: &DenseState,
    count: usize,
    seed: u64,
    keep_samples: bool,
) -> Result<EstimateReport> {
    if count < 1000 {
        return Err(Error::invalid("capacity estimation needs K ≥ 1000"));
    }
    let start = Instant::now();
    let logs = sample_log_expectations(state, count, seed)?;
    let stats = sample_stats(&logs)?;
    Ok(EstimateReport {
        estimator: "capacity_hybrid".into(),
        value: stats.variance,
        stderr: stats.stderr_variance,
        k: count,
        seed,
        samples: keep_samples.then_some(logs),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{histogram, total_variation};
    use crate::gates;
    use crate::oracle::PauliSpectrum;

    fn labels(samples: &[PauliString]) -> impl Iterator<Item = usize> + '_ {
        samples.iter().map(|p| p.index().unwrap() as usize)
    }

    #[test]
    fn level_one_matches_gram_formula() {
        let s = DenseState::haar_random(3, &mut stream_rng(11, 0)).unwrap();
        let ladder = GramLadder::new(s.amplitudes(), 1);
        let e = &ladder.levels[1];
        let (e00, e01, e10, e11) = (e[0], e[1], e[2], e[3]);
        let expected =
            0.5 * (e00.norm_sqr() + (e01.conj() * e10).re + (e10.conj() * e01).re + e11.norm_sqr());
        let got = prefix_probability(&s, 1, 0, 0, SamplingMode::Bell).unwrap();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn prefix_marginals_sum_to_one() {
        let s = DenseState::haar_random(5, &mut stream_rng(12, 0)).unwrap();
        for k in 1..=5 {
            let total: f64 = (0..1usize << k)
                .flat_map(|x| (0..1usize << k).map(move |z| (x, z)))
                .map(|(x, z)| prefix_probability(&s, k, x, z, SamplingMode::Pauli).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn zero_state_draws_z_strings() {
        let s = DenseState::zero(5).unwrap();
        let sampler = HybridSampler::new(&s, SamplingMode::Pauli).unwrap();
        let draws = sampler.sample_batch(1, 2000).unwrap();
        assert!(draws.iter().all(|p| p.ops().iter().all(|o| !o.x_bit())));
        let h = histogram(draws.iter().map(|p| p.index_masks().1), 32);
        assert!(total_variation(&h, &[1.0 / 32.0; 32]) < 0.1);
    }

    #[test]
    fn bell_pair_draws_stabilizers() {
        let s = DenseState::ghz(2).unwrap();
        let sampler = HybridSampler::new(&s, SamplingMode::Pauli).unwrap();
        let draws = sampler.sample_batch(2, 100_000).unwrap();
        let exact = PauliSpectrum::from_state(&s).unwrap().p();
        assert!(total_variation(&histogram(labels(&draws), 16), &exact) < 0.02);
    }

    #[test]
    fn odd_and_even_sizes_match_oracle() {
        for n in [1usize, 3, 4, 5] {
            let s = DenseState::haar_random(n, &mut stream_rng(40 + n as u64, 0)).unwrap();
            let exact = PauliSpectrum::from_state(&s).unwrap().p();
            let draws = HybridSampler::new(&s, SamplingMode::Pauli)
                .unwrap()
                .sample_batch(3, 100_000)
                .unwrap();
            let tv = total_variation(&histogram(labels(&draws), 1 << (2 * n)), &exact);
            let bound = 3.0 * ((1u64 << (2 * n)) as f64 / 1e5).sqrt() / 2.0;
            assert!(tv < bound.min(0.15), "N={n} tv={tv}");
        }
    }

    #[test]
    fn bell_mode_on_th_state_matches_dense_construction() {
        let mut s = DenseState::zero(1).unwrap();
        s.apply_1q(&gates::hadamard(), 0).unwrap();
        s.apply_1q(&gates::t_gate(), 0).unwrap();
        // |⟨ψ*|P|ψ⟩|²/2 directly.
        let conj = DenseState::new(s.amplitudes().iter().map(|a| a.conj()).collect()).unwrap();
        let exact: Vec<f64> = (0..4u64)
            .map(|i| {
                let p = PauliString::from_index(1, i).unwrap();
                let v = s.apply_pauli(&p).unwrap();
                let amp: C64 = conj
                    .amplitudes()
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                0.5 * amp.norm_sqr()
            })
            .collect();
        assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let draws = HybridSampler::new(&s, SamplingMode::Bell)
            .unwrap()
            .sample_batch(4, 100_000)
            .unwrap();
        assert!(total_variation(&histogram(labels(&draws), 4), &exact) < 0.01);
    }

    #[test]
    fn estimators_on_simple_states() {
        let stab = DenseState::ghz(4).unwrap();
        let r = estimate_m1(&stab, 500, 5, false).unwrap();
        assert_eq!((r.value, r.stderr), (0.0, 0.0));
        let th = DenseState::t_state(4).unwrap();
        let r = estimate_m1(&th, 10_000, 6, false).unwrap();
        assert!((r.value - 4.0 * std::f64::consts::LN_2 / 2.0).abs() < 3.0 * r.stderr);
        let single = DenseState::t_state(1).unwrap();
        let c = estimate_capacity(&single, 100_000, 7, false).unwrap();
        assert!((c.value - 0.120113).abs() < 3.0 * c.stderr, "{c:?}");
    }

    #[test]
    fn workspace_is_linear_in_dimension() {
        for n in [6usize, 7, 8] {
            let s = DenseState::haar_random(n, &mut stream_rng(9, n as u64)).unwrap();
            let sampler = HybridSampler::new(&s, SamplingMode::Pauli).unwrap();
            assert!(sampler.workspace_peak() <= 4 << n);
        }
    }
}
