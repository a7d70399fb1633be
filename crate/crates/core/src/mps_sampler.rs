//! Perfect sampling of Pauli strings from an MPS, and the estimators built on it.
//!
//! The sampler walks a right-canonical copy of the state from the left. After
//! fixing `P_1 … P_k` it keeps `E = Σ A^{σ†} ⋯ E_0 ⋯ A^σ`, whose squared
//! Frobenius norm is `tr(ρ_{1..k} P ρ_{1..k} P)`. The conditional of the next
//! Pauli is `‖E_σ‖² / (2‖E‖²)`, so a draw costs `O(Nχ³)` and no reduced
//! density matrix is ever formed.

use std::f64::consts::LN_2;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{sample_stats, EstimateReport};
use crate::mps::{transfer_right, Canonical, MatrixProductState};
use crate::pauli::{PauliOp, PauliString, Region};
use crate::rng::stream_rng;

/// Relative deficit of the four conditionals that aborts a draw.
const DEFICIT_TOL: f64 = 1e-6;
/// `ln⟨P⟩²` this close to 0 is snapped so stabilizer terms are exactly 0.
const SNAP_TOL: f64 = 1e-10;
/// Smallest subsystem term `tr(ρ_A P_A ρ_A P_A)` the mutual estimator accepts.
const MIN_SUBSYSTEM_TERM: f64 = 1e-14;

const PAULIS: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Z, PauliOp::Y];

/// One draw from `q_ρ` (equal to `p_ψ` for a pure MPS).
#[derive(Clone, Debug, PartialEq)]
pub struct AncestralDraw {
    pub pauli: PauliString,
    /// `ln q(P)`.
    pub log_q: f64,
    /// `ln tr(ρ_{1..k} P ρ_{1..k} P)` for every prefix length `k = 1..=N`;
    /// the last entry is `ln⟨P⟩²`.
    pub log_prefix_terms: Vec<f64>,
}

impl AncestralDraw {
    pub fn log_squared_expectation(&self) -> f64 {
        let v = *self.log_prefix_terms.last().expect("at least one site");
        if v.abs() < SNAP_TOL {
            0.0
        } else {
            v
        }
    }
}

/// Right-canonical copy of an MPS prepared for repeated draws.
#[derive(Clone, Debug)]
pub struct AncestralSampler {
    mps: MatrixProductState,
    adjoints: Vec<[DMatrix<C64>; 2]>,
}

impl AncestralSampler {
    pub fn new(mps: &MatrixProductState) -> Result<Self> {
        let mut mps = mps.clone();
        if mps.canonical() != Canonical::Right {
            mps.right_canonicalize()?;
        }
        let adjoints = mps
            .sites()
            .iter()
            .map(|a| [a[0].adjoint(), a[1].adjoint()])
            .collect();
        Ok(Self { mps, adjoints })
    }

    pub fn n_qubits(&self) -> usize {
        self.mps.n_qubits()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AncestralDraw> {
        self.walk(|weights| Ok(pick(weights, rng.random::<f64>())))
    }

    /// `ln q(P)` along the same conditionals used for drawing.
    pub fn log_probability(&self, p: &PauliString) -> Result<f64> {
        if p.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                got: p.n_qubits(),
            });
        }
        let mut site = 0;
        let draw = self.walk(|_| {
            let c = code_slot(p.op(site));
            site += 1;
            Ok(c)
        })?;
        Ok(draw.log_q)
    }

    pub fn sample_indexed(&self, seed: u64, index: u64) -> Result<AncestralDraw> {
        self.sample(&mut stream_rng(seed, index))
    }

    /// `count` draws, parallel over samples; identical for any thread count.
    pub fn sample_batch(&self, seed: u64, count: usize) -> Result<Vec<AncestralDraw>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample_indexed(seed, i))
            .collect()
    }

    /// Runs the site-by-site conditionals, letting `choose` select a slot in
    /// `[I, X, Z, Y]` from the normalized weights.
    fn walk<F>(&self, mut choose: F) -> Result<AncestralDraw>
    where
        F: FnMut(&[f64; 4]) -> Result<usize>,
    {
        let n = self.n_qubits();
        let mut e = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let mut ops = Vec::with_capacity(n);
        let mut log_q = 0.0;
        let mut log_norm = 0.0;
        let mut log_prefix_terms = Vec::with_capacity(n);
        for (a, adj) in self.mps.sites().iter().zip(&self.adjoints) {
            let candidates = dressed_environments(&e, a, adj);
            let norms: Vec<f64> = candidates.iter().map(frobenius_sqr).collect();
            let total: f64 = norms.iter().sum();
            // E is kept at unit norm, so the four norms must sum to 2.
            if !((total - 2.0).abs() <= 2.0 * DEFICIT_TOL) {
                return Err(Error::Numerical(format!(
                    "ancestral conditionals sum to {} at site {}",
                    total / 2.0,
                    ops.len()
                )));
            }
            let weights = [
                norms[0] / total,
                norms[1] / total,
                norms[2] / total,
                norms[3] / total,
            ];
            let slot = choose(&weights)?;
            if !(weights[slot] > 0.0) {
                return Err(Error::Numerical(format!(
                    "string has zero probability at site {}",
                    ops.len()
                )));
            }
            log_q += weights[slot].ln();
            log_norm += norms[slot].ln();
            log_prefix_terms.push(log_norm);
            let scale = 1.0 / norms[slot].sqrt();
            e = candidates.into_iter().nth(slot).expect("four candidates") * C64::new(scale, 0.0);
            ops.push(PAULIS[slot]);
        }
        Ok(AncestralDraw {
            pauli: PauliString::new(ops),
            log_q,
            log_prefix_terms,
        })
    }
}

fn code_slot(op: PauliOp) -> usize {
    PAULIS
        .iter()
        .position(|&p| p == op)
        .expect("all four Paulis listed")
}

fn pick(weights: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Round-off at the top end: fall back to the last slot with weight.
    (0..4).rev().find(|&i| weights[i] > 0.0).unwrap_or(0)
}

/// `E_σ` for `σ ∈ [I, X, Z, Y]` from the products `G_{s's} = A^{s'†} E A^s`.
/// `E` stays Hermitian along the walk, so `G_10 = G_01†`.
fn dressed_environments(
    e: &DMatrix<C64>,
    a: &[DMatrix<C64>; 2],
    adj: &[DMatrix<C64>; 2],
) -> [DMatrix<C64>; 4] {
    let f0 = e * &a[0];
    let f1 = e * &a[1];
    let g00 = &adj[0] * &f0;
    let g01 = &adj[0] * &f1;
    let g10 = g01.adjoint();
    let g11 = &adj[1] * &f1;
    let i = C64::new(0.0, 1.0);
    [&g00 + &g11, &g01 + &g10, &g00 - &g11, (&g10 - &g01) * i]
}

fn frobenius_sqr(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum()
}

fn report(
    estimator: &str,
    value: f64,
    stderr: f64,
    k: usize,
    seed: u64,
    samples: Option<Vec<f64>>,
    start: Instant,
) -> EstimateReport {
    EstimateReport {
        estimator: estimator.into(),
        value,
        stderr,
        k,
        seed,
        samples,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// `ln⟨P⟩²` for `count` perfect draws.
pub fn sample_log_expectations_mps(
    mps: &MatrixProductState,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = AncestralSampler::new(mps)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| Ok(sampler.sample_indexed(seed, i)?.log_squared_expectation()))
        .collect()
}

/// `M_1 = −E_p[ln⟨P⟩²]` from perfect samples.
pub fn estimate_m1_mps(
    mps: &MatrixProductState,
    count: usize,
    seed: u64,
    keep_samples: bool,
) -> Result<EstimateReport> {
    if count < 100 {
        return Err(Error::invalid("M_1 estimation needs K ≥ 100"));
    }
    let start = Instant::now();
    let logs = sample_log_expectations_mps(mps, count, seed)?;
    let stats = sample_stats(&logs)?;
    Ok(report(
        "m1_mps",
        -stats.mean,
        stats.stderr_mean,
        count,
        seed,
        keep_samples.then_some(logs),
        start,
    ))
}

/// `C_M = Var_p(ln⟨P⟩²)` with the `K − 1` denominator.
pub fn estimate_capacity_mps(
    mps: &MatrixProductState,
    count: usize,
    seed: u64,
    keep_samples: bool,
) -> Result<EstimateReport> {
    if count < 1000 {
        return Err(Error::invalid("capacity estimation needs K ≥ 1000"));
    }
    let start = Instant::now();
    let logs = sample_log_expectations_mps(mps, count, seed)?;
    let stats = sample_stats(&logs)?;
    Ok(report(
        "capacity_mps",
        stats.variance,
        stats.stderr_variance,
        count,
        seed,
        keep_samples.then_some(logs),
        start,
    ))
}

/// Sign of the expectation term in the sampled `I_1^[q]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutualSign {
    /// `S_2(ρ_A) + S_2(ρ_B) + E_q[ln tr_A + ln tr_B − ln tr]`; a Bell pair gives 0.
    #[default]
    Definitional,
    /// `S_2(ρ_A) + S_2(ρ_B) − E_q[ln tr_A + ln tr_B − ln tr]`; a Bell pair gives `4 ln 2`.
    Paper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutualReport {
    /// Combined `I_1^[q]` with its standard error.
    #[serde(flatten)]
    pub estimate: EstimateReport,
    /// `E_q[ln tr(ρ_A P_A ρ_A P_A) + ln tr(ρ_B P_B ρ_B P_B) − ln tr(ρPρP)]`.
    pub expectation_term: f64,
    pub s2_a: f64,
    pub s2_b: f64,
    pub sign: MutualSign,
}

/// Left-canonical copy used to accumulate suffix terms from the right.
struct SuffixTerms {
    mps: MatrixProductState,
    cut: usize,
}

impl SuffixTerms {
    fn new(mps: &MatrixProductState, cut: usize) -> Result<Self> {
        let mut mps = mps.clone();
        mps.left_canonicalize()?;
        Ok(Self { mps, cut })
    }

    /// `tr(ρ_B P_B ρ_B P_B)` for `B = [cut, N)`.
    fn term(&self, p: &PauliString) -> f64 {
        let mut y = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for k in (self.cut..self.mps.n_qubits()).rev() {
            y = transfer_right(&y, &self.mps.sites()[k], &p.op(k).matrix());
        }
        frobenius_sqr(&y)
    }
}

/// Sampled `I_1^[q]` across the cut separating a prefix from a suffix; `a`
/// must be one of the two.
pub fn estimate_mutual_q(
    mps: &MatrixProductState,
    a: &Region,
    count: usize,
    seed: u64,
    sign: MutualSign,
) -> Result<MutualReport> {
    let n = mps.n_qubits();
    if a.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.n_qubits(),
        });
    }
    if count < 100 {
        return Err(Error::invalid("mutual SRE estimation needs K ≥ 100"));
    }
    let cut = match a.as_interval() {
        Some((0, end)) if end < n && end > 0 => end,
        Some((start, end)) if end == n && start > 0 => start,
        _ => {
            return Err(Error::invalid(
                "the q-mutual estimator needs A to be a proper prefix or suffix",
            ))
        }
    };
    let start = Instant::now();
    let prefix = Region::interval(n, 0, cut)?;
    let suffix = Region::interval(n, cut, n)?;
    let (s2_prefix, s2_suffix) = (mps.region_renyi2(&prefix)?, mps.region_renyi2(&suffix)?);
    let (s2_a, s2_b) = if a.contains(0) {
        (s2_prefix, s2_suffix)
    } else {
        (s2_suffix, s2_prefix)
    };

    let sampler = AncestralSampler::new(mps)?;
    let suffix_terms = SuffixTerms::new(mps, cut)?;
    let integrands: Vec<f64> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let draw = sampler.sample_indexed(seed, i)?;
            let tail = suffix_terms.term(&draw.pauli);
            let head = draw.log_prefix_terms[cut - 1].exp();
            if head < MIN_SUBSYSTEM_TERM || tail < MIN_SUBSYSTEM_TERM {
                return Err(Error::Numerical(format!(
                    "subsystem term below {MIN_SUBSYSTEM_TERM:e} for {} (prefix {head:e}, suffix {tail:e})",
                    draw.pauli
                )));
            }
            Ok(draw.log_prefix_terms[cut - 1] + tail.ln() - draw.log_squared_expectation())
        })
        .collect::<Result<_>>()?;
    let stats = sample_stats(&integrands)?;
    let value = match sign {
        MutualSign::Definitional => s2_a + s2_b + stats.mean,
        MutualSign::Paper => s2_a + s2_b - stats.mean,
    };
    Ok(MutualReport {
        estimate: report(
            "mutual_q_mps",
            value,
            stats.stderr_mean,
            count,
            seed,
            None,
            start,
        ),
        expectation_term: stats.mean,
        s2_a,
        s2_b,
        sign,
    })
}

/// `ln q` of a draw converted to `ln⟨P⟩²` for a pure state.
pub fn log_q_to_log_squared_expectation(log_q: f64, n_qubits: usize) -> f64 {
    log_q + n_qubits as f64 * LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{histogram, total_variation};
    use crate::oracle::{mutual_sre, MutualVariant, PauliSpectrum, QSpectrum};
    use crate::statevector::DenseState;

    fn empirical(draws: &[AncestralDraw], n: usize) -> Vec<f64> {
        histogram(
            draws.iter().map(|d| d.pauli.index().unwrap() as usize),
            1 << (2 * n),
        )
    }

    #[test]
    fn plus_state_draws_x_or_identity() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mps = MatrixProductState::product(&[[C64::new(h, 0.0), C64::new(h, 0.0)]; 4]).unwrap();
        let s = AncestralSampler::new(&mps).unwrap();
        for d in s.sample_batch(3, 200).unwrap() {
            assert!(d
                .pauli
                .ops()
                .iter()
                .all(|&o| o == PauliOp::I || o == PauliOp::X));
            assert!((d.log_q + 4.0 * LN_2).abs() < 1e-12);
            assert_eq!(d.log_squared_expectation(), 0.0);
        }
    }

    #[test]
    fn log_probability_matches_draws_and_oracle() {
        let mut rng = stream_rng(5, 0);
        let mps = MatrixProductState::random(5, 3, &mut rng).unwrap();
        let spectrum = PauliSpectrum::from_state(&mps.to_dense().unwrap()).unwrap();
        let p = spectrum.p();
        let s = AncestralSampler::new(&mps).unwrap();
        for d in s.sample_batch(1, 20).unwrap() {
            let exact = p[d.pauli.index().unwrap() as usize].ln();
            assert!((d.log_q - exact).abs() < 1e-9);
            assert!((s.log_probability(&d.pauli).unwrap() - d.log_q).abs() < 1e-12);
            assert!(
                (log_q_to_log_squared_expectation(d.log_q, 5) - d.log_squared_expectation()).abs()
                    < 1e-9
            );
        }
    }

    #[test]
    fn ghz_draws_cover_stabilizer_group() {
        let mps = MatrixProductState::ghz(4).unwrap();
        let draws = AncestralSampler::new(&mps)
            .unwrap()
            .sample_batch(11, 20_000)
            .unwrap();
        let p = PauliSpectrum::from_state(&DenseState::ghz(4).unwrap())
            .unwrap()
            .p();
        assert!(total_variation(&empirical(&draws, 4), &p) < 0.03);
    }

    #[test]
    fn prefix_marginal_is_reduced_q() {
        let mut rng = stream_rng(8, 0);
        let mps = MatrixProductState::random(5, 4, &mut rng).unwrap();
        let region = Region::interval(5, 0, 2).unwrap();
        let rho = mps.to_dense().unwrap().reduced_density(&region).unwrap();
        let q = QSpectrum::from_operator(&rho).unwrap();
        let draws = AncestralSampler::new(&mps)
            .unwrap()
            .sample_batch(2, 20_000)
            .unwrap();
        let labels = draws
            .iter()
            .map(|d| d.pauli.restrict(&region).unwrap().index().unwrap() as usize);
        assert!(total_variation(&histogram(labels, 16), q.values()) < 0.03);
    }

    #[test]
    fn product_t_states_are_additive() {
        let mps = MatrixProductState::t_state(6).unwrap();
        let r = estimate_m1_mps(&mps, 10_000, 4, false).unwrap();
        assert!((r.value - 3.0 * LN_2).abs() < 3.0 * r.stderr.max(1e-12));
    }

    #[test]
    fn mutual_estimator_matches_oracle() {
        let mut rng = stream_rng(21, 0);
        let mps = MatrixProductState::random(6, 4, &mut rng).unwrap();
        let dense = mps.to_dense().unwrap();
        for a in [
            Region::interval(6, 0, 2).unwrap(),
            Region::interval(6, 3, 6).unwrap(),
        ] {
            let exact = mutual_sre(&dense, &a, 1.0, MutualVariant::Q).unwrap();
            let r = estimate_mutual_q(&mps, &a, 20_000, 6, MutualSign::Definitional).unwrap();
            assert!(
                (r.estimate.value - exact).abs() < 4.0 * r.estimate.stderr,
                "{} vs {exact}",
                r.estimate.value
            );
        }
    }

    #[test]
    fn bell_pair_mutual_terms() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let bell = DenseState::new(vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)]).unwrap();
        let (mps, _) = MatrixProductState::from_dense(&bell, 4, 0.0).unwrap();
        let a = Region::interval(2, 0, 1).unwrap();
        let r = estimate_mutual_q(&mps, &a, 500, 1, MutualSign::Definitional).unwrap();
        assert!(r.estimate.value.abs() < 1e-9);
        assert!(r.estimate.stderr < 1e-9);
        let paper = estimate_mutual_q(&mps, &a, 500, 1, MutualSign::Paper).unwrap();
        assert!((paper.estimate.value - 4.0 * LN_2).abs() < 1e-9);
    }

    #[test]
    fn rejects_interior_region() {
        let mps = MatrixProductState::t_state(4).unwrap();
        let a = Region::interval(4, 1, 3).unwrap();
        assert!(estimate_mutual_q(&mps, &a, 100, 0, MutualSign::Definitional).is_err());
    }
}
