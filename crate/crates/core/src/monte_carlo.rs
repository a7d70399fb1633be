//! Metropolis–Hastings sampling of `Π(P) ∝ tr(ρ_U P)⁴` on `U = A ∪ B`, and the
//! `B(ρ)` / mutual 2-SRE estimators built on it.
//!
//! Proposals are independent draws from a prior whose density is known
//! exactly: either `p_ψ` itself (perfect sampling, `U` = whole chain) or
//! `Π̃(P) ∝ ⟨ψ'|P|ψ'⟩⁴` of a low-bond truncation `ψ'`, drawn by contracting
//! four copies of `ψ'`.

use std::time::Instant;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{block_jackknife, EstimateReport};
use crate::mps::{transfer, MatrixProductState, SiteMatrices};
use crate::mps_sampler::AncestralSampler;
use crate::oracle::{kl_divergence, PauliSpectrum};
use crate::pauli::{PauliOp, PauliString, Region};
use crate::rng::{derive_seed, stream_rng};

pub const DEFAULT_BURN_IN: usize = 1000;
/// Upper bound on jackknife blocks for `B`.
pub const MAX_JACKKNIFE_BLOCKS: usize = 50;
/// Below this, `⟨P⟩²` is treated as zero target weight.
const ZERO_WEIGHT: f64 = 1e-300;
/// Relative size of negative four-copy weights tolerated as round-off.
const CLAMP_TOL: f64 = 1e-10;

const PAULIS: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Z, PauliOp::Y];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Prior {
    /// Perfect samples of `p_ψ`; needs `A ∪ B` to cover the chain.
    PerfectP,
    /// `Π̃` of the state truncated to bond dimension `max_bond`.
    TruncatedMps { max_bond: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub prior: Prior,
    /// Kept samples per chain.
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent chains, merged by inverse-variance weighting.
    pub chains: usize,
    pub a: Region,
    pub b: Region,
}

impl McConfig {
    pub fn new(prior: Prior, samples: usize, seed: u64, a: Region, b: Region) -> Self {
        Self {
            prior,
            samples,
            burn_in: DEFAULT_BURN_IN,
            seed,
            chains: 1,
            a,
            b,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.samples < 100 {
            return Err(Error::invalid("Monte Carlo needs K ≥ 100"));
        }
        if self.chains == 0 {
            return Err(Error::invalid("need at least one chain"));
        }
        for r in [&self.a, &self.b] {
            if r.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    got: r.n_qubits(),
                });
            }
            if r.as_interval().is_none() {
                return Err(Error::invalid(
                    "subsystems must be non-empty contiguous intervals",
                ));
            }
        }
        if !self.a.is_disjoint(&self.b) {
            return Err(Error::invalid("subsystems A and B overlap"));
        }
        match self.prior {
            Prior::PerfectP if self.a.len() + self.b.len() != n_qubits => Err(Error::invalid(
                "the perfect-p prior samples the global state; A ∪ B must cover the chain",
            )),
            Prior::TruncatedMps { max_bond: 0 } => {
                Err(Error::invalid("prior bond dimension must be ≥ 1"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub acceptance_rate: f64,
    /// `tr(ρ_A P_A)⁴ tr(ρ_B P_B)⁴ / tr(ρ_U P)⁴` per kept sample.
    pub integrands: Vec<f64>,
    /// Jackknife error of `B` from this chain alone.
    pub b_error: f64,
}

/// One row of the chain trace export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub step: usize,
    pub pauli_text: String,
    /// Unnormalized `ln Π = 2 ln⟨P⟩²`.
    pub log_pi: f64,
    pub accepted: bool,
    pub integrand: f64,
}

#[derive(Clone, Debug)]
pub struct McChain {
    pub samples: Vec<PauliString>,
    pub trace: Vec<ChainStep>,
    pub diagnostics: ChainDiagnostics,
}

/// Exact-density sampler for `Π̃(P) ∝ ⟨ψ'|P|ψ'⟩⁴` with identity forced
/// outside `support`.
///
/// `right[k]` holds the four-copy environment of sites `k..N`, a tensor with
/// four indices of dimension `χ_k²`; a prefix is carried as a single-copy
/// vector, so a draw costs `O(N χ'^8)`.
pub struct FourCopyPrior {
    /// `transfers[k][σ]`: single-copy transfer `χ_k² × χ_{k+1}²`.
    transfers: Vec<[DMatrix<C64>; 4]>,
    allowed: Vec<bool>,
    right: Vec<Vec<C64>>,
}

fn transfer_matrix(a: &SiteMatrices, op: &Matrix2<C64>) -> DMatrix<C64> {
    let (l, r) = (a[0].nrows(), a[0].ncols());
    let mut t = DMatrix::zeros(l * l, r * r);
    for bra in 0..l {
        for ket in 0..l {
            let mut e = DMatrix::zeros(l, l);
            e[(bra, ket)] = C64::new(1.0, 0.0);
            let out = transfer(&e, a, op);
            for rb in 0..r {
                for rk in 0..r {
                    t[(bra * l + ket, rb * r + rk)] = out[(rb, rk)];
                }
            }
        }
    }
    t
}

/// `out[i1..i4] = Σ_j Π_c t[i_c, j_c] r[j1..j4]`, indices row-major.
fn apply_fourfold(t: &DMatrix<C64>, r: &[C64]) -> Vec<C64> {
    let (rows, cols) = t.shape();
    let mut cur = r.to_vec();
    // Contract one mode at a time; after step m the first m+1 modes are rows-sized.
    let mut dims = [cols; 4];
    for mode in 0..4 {
        let outer: usize = dims[..mode].iter().product();
        let inner: usize = dims[mode + 1..].iter().product();
        let mut next = vec![C64::new(0.0, 0.0); outer * rows * inner];
        for o in 0..outer {
            for j in 0..cols {
                let src = &cur[(o * cols + j) * inner..(o * cols + j + 1) * inner];
                for i in 0..rows {
                    let w = t[(i, j)];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let dst = &mut next[(o * rows + i) * inner..(o * rows + i + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        dims[mode] = rows;
        cur = next;
    }
    cur
}

/// `Σ_j v[j1] v[j2] v[j3] v[j4] r[j1..j4]`.
fn fourfold_weight(v: &[C64], r: &[C64]) -> f64 {
    let d = v.len();
    let mut total = C64::new(0.0, 0.0);
    for (j1, a) in v.iter().enumerate() {
        for (j2, b) in v.iter().enumerate() {
            let ab = a * b;
            let base = (j1 * d + j2) * d * d;
            for (j3, c) in v.iter().enumerate() {
                let abc = ab * c;
                let row = &r[base + j3 * d..base + (j3 + 1) * d];
                total += abc * row.iter().zip(v).map(|(x, y)| x * y).sum::<C64>();
            }
        }
    }
    total.re
}

impl FourCopyPrior {
    pub fn new(mps: &MatrixProductState, max_bond: usize, support: &Region) -> Result<Self> {
        let n = mps.n_qubits();
        if support.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: support.n_qubits(),
            });
        }
        let (trunc, _) = mps.truncate(max_bond)?;
        let transfers: Vec<[DMatrix<C64>; 4]> = trunc
            .sites()
            .iter()
            .map(|a| PAULIS.map(|op| transfer_matrix(a, &op.matrix())))
            .collect();
        let allowed = support.mask_vec();
        let mut right = vec![Vec::new(); n + 1];
        right[n] = vec![C64::new(1.0, 0.0)];
        for k in (0..n).rev() {
            let slots: &[usize] = if allowed[k] { &[0, 1, 2, 3] } else { &[0] };
            let mut acc: Option<Vec<C64>> = None;
            for &s in slots {
                let term = apply_fourfold(&transfers[k][s], &right[k + 1]);
                acc = Some(match acc {
                    None => term,
                    Some(mut a) => {
                        a.iter_mut().zip(&term).for_each(|(x, y)| *x += y);
                        a
                    }
                });
            }
            let mut env = acc.expect("at least one slot");
            let scale = env.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if !(scale > 0.0) {
                return Err(Error::Numerical("four-copy environment vanished".into()));
            }
            env.iter_mut().for_each(|c| *c /= scale);
            right[k] = env;
        }
        Ok(Self {
            transfers,
            allowed,
            right,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.allowed.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(PauliString, f64)> {
        self.walk(|w| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, x) in w.iter().enumerate() {
                acc += x;
                if u < acc {
                    return i;
                }
            }
            (0..4).rev().find(|&i| w[i] > 0.0).unwrap_or(0)
        })
    }

    /// `ln Π̃(P)` from the same conditionals used for drawing; `-∞` outside the support.
    pub fn log_density(&self, p: &PauliString) -> Result<f64> {
        if p.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                got: p.n_qubits(),
            });
        }
        let mut site = 0;
        let out = self.walk(|_| {
            let slot = PAULIS
                .iter()
                .position(|&o| o == p.op(site))
                .expect("four Paulis");
            site += 1;
            slot
        });
        match out {
            Ok((_, l)) => Ok(l),
            Err(Error::Numerical(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }

    fn walk<F: FnMut(&[f64; 4]) -> usize>(&self, mut choose: F) -> Result<(PauliString, f64)> {
        let n = self.n_qubits();
        let mut left = vec![C64::new(1.0, 0.0)];
        let mut ops = Vec::with_capacity(n);
        let mut log_density = 0.0;
        for k in 0..n {
            let mut weights = [0.0; 4];
            let mut vectors: [Vec<C64>; 4] = Default::default();
            for s in 0..4 {
                if s > 0 && !self.allowed[k] {
                    continue;
                }
                let t = &self.transfers[k][s];
                let v: Vec<C64> = (0..t.ncols())
                    .map(|j| left.iter().enumerate().map(|(i, l)| l * t[(i, j)]).sum())
                    .collect();
                weights[s] = fourfold_weight(&v, &self.right[k + 1]);
                vectors[s] = v;
            }
            let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
            if !(total > 0.0) {
                return Err(Error::Numerical(format!(
                    "four-copy prior has no weight at site {k}"
                )));
            }
            for w in &mut weights {
                if *w < 0.0 {
                    if *w < -CLAMP_TOL * total {
                        return Err(Error::Numerical(format!(
                            "negative four-copy weight {w:e} at site {k}"
                        )));
                    }
                    *w = 0.0;
                }
                *w /= total;
            }
            let slot = choose(&weights);
            if !(weights[slot] > 0.0) {
                return Err(Error::Numerical(format!(
                    "string outside the prior support at site {k}"
                )));
            }
            log_density += weights[slot].ln();
            let v = std::mem::take(&mut vectors[slot]);
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            left = v.into_iter().map(|c| c / norm).collect();
            ops.push(PAULIS[slot]);
        }
        Ok((PauliString::new(ops), log_density))
    }
}

enum Proposal {
    Perfect(AncestralSampler),
    Truncated(FourCopyPrior),
}

/// A proposed string with its prior density and target weight.
struct Candidate {
    pauli: PauliString,
    log_prior: f64,
    /// `ln tr(ρ_U P)²`, `-∞` for zero weight.
    log_sq: f64,
}

struct Target<'a> {
    mps: &'a MatrixProductState,
    proposal: Proposal,
    a: &'a Region,
    b: &'a Region,
}

impl Target<'_> {
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Candidate> {
        match &self.proposal {
            Proposal::Perfect(s) => {
                let d = s.sample(rng)?;
                let log_sq = d.log_squared_expectation();
                Ok(Candidate {
                    pauli: d.pauli,
                    log_prior: d.log_q,
                    log_sq,
                })
            }
            Proposal::Truncated(prior) => {
                let (pauli, log_prior) = prior.sample(rng)?;
                let e = self.mps.expectation(&pauli)?;
                let sq = e * e;
                let log_sq = if sq > ZERO_WEIGHT {
                    sq.ln()
                } else {
                    f64::NEG_INFINITY
                };
                Ok(Candidate {
                    pauli,
                    log_prior,
                    log_sq,
                })
            }
        }
    }

    /// `ln` of `Π(P) / g(P)` up to a constant.
    fn log_ratio(&self, c: &Candidate) -> f64 {
        2.0 * c.log_sq - c.log_prior
    }

    fn integrand(&self, c: &Candidate) -> Result<f64> {
        let ea = self.mps.expectation(&c.pauli.mask(self.a)?)?;
        let eb = self.mps.expectation(&c.pauli.mask(self.b)?)?;
        Ok(((ea * ea).ln() * 2.0 + (eb * eb).ln() * 2.0 - 2.0 * c.log_sq).exp())
    }
}

fn minus_log_mean(a: &[f64], b: &[f64]) -> f64 {
    let n = (a.len() + b.len()) as f64;
    -((a.iter().sum::<f64>() + b.iter().sum::<f64>()) / n).ln()
}

fn run_chain(target: &Target<'_>, cfg: &McConfig, chain: u64) -> Result<McChain> {
    let mut rng = stream_rng(derive_seed(cfg.seed, chain), 0);
    let mut current = target.propose(&mut rng)?;
    let mut current_integrand: Option<f64> = None;
    let mut samples = Vec::with_capacity(cfg.samples);
    let mut trace = Vec::with_capacity(cfg.samples);
    let mut integrands = Vec::with_capacity(cfg.samples);
    let mut accepted_count = 0usize;
    let total = cfg.burn_in + cfg.samples;
    for step in 0..total {
        let cand = target.propose(&mut rng)?;
        if !cand.log_prior.is_finite() {
            return Err(Error::Numerical(format!(
                "prior density of proposal {} is not finite",
                cand.pauli
            )));
        }
        let accept = if !current.log_sq.is_finite() {
            cand.log_sq.is_finite()
        } else if !cand.log_sq.is_finite() {
            false
        } else {
            let log_acc = target.log_ratio(&cand) - target.log_ratio(&current);
            log_acc >= 0.0 || rng.random::<f64>() < log_acc.exp()
        };
        if accept {
            current = cand;
            current_integrand = None;
        }
        if step < cfg.burn_in {
            continue;
        }
        if !current.log_sq.is_finite() {
            return Err(Error::Numerical(
                "chain never reached a string with non-zero target weight; the prior misses the support".into(),
            ));
        }
        accepted_count += accept as usize;
        let value = match current_integrand {
            Some(v) => v,
            None => {
                let v = target.integrand(&current)?;
                current_integrand = Some(v);
                v
            }
        };
        integrands.push(value);
        trace.push(ChainStep {
            step: step - cfg.burn_in,
            pauli_text: current.pauli.to_string(),
            log_pi: 2.0 * current.log_sq,
            accepted: accept,
            integrand: value,
        });
        samples.push(current.pauli.clone());
    }
    let (_, b_error) = block_jackknife(&integrands, MAX_JACKKNIFE_BLOCKS, minus_log_mean)?;
    Ok(McChain {
        samples,
        trace,
        diagnostics: ChainDiagnostics {
            acceptance_rate: accepted_count as f64 / cfg.samples as f64,
            integrands,
            b_error,
        },
    })
}

fn build_target<'a>(mps: &'a MatrixProductState, cfg: &'a McConfig) -> Result<Target<'a>> {
    cfg.validate(mps.n_qubits())?;
    let proposal = match cfg.prior {
        Prior::PerfectP => Proposal::Perfect(AncestralSampler::new(mps)?),
        Prior::TruncatedMps { max_bond } => {
            Proposal::Truncated(FourCopyPrior::new(mps, max_bond, &cfg.a.union(&cfg.b)?)?)
        }
    };
    Ok(Target {
        mps,
        proposal,
        a: &cfg.a,
        b: &cfg.b,
    })
}

/// Runs `cfg.chains` independent chains in parallel.
pub fn mh_chains(mps: &MatrixProductState, cfg: &McConfig) -> Result<Vec<McChain>> {
    let target = build_target(mps, cfg)?;
    (0..cfg.chains as u64)
        .into_par_iter()
        .map(|c| run_chain(&target, cfg, c))
        .collect()
}

/// First chain of `cfg`: kept samples from `Π` and diagnostics.
pub fn mh_chain(
    mps: &MatrixProductState,
    cfg: &McConfig,
) -> Result<(Vec<PauliString>, ChainDiagnostics)> {
    let target = build_target(mps, cfg)?;
    let chain = run_chain(&target, cfg, 0)?;
    Ok((chain.samples, chain.diagnostics))
}

/// `B` with its jackknife error, merged over chains by inverse variance.
pub fn b_from_chains(chains: &[McChain]) -> Result<(f64, f64)> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut exact = Vec::new();
    for c in chains {
        let (value, err) = block_jackknife(
            &c.diagnostics.integrands,
            MAX_JACKKNIFE_BLOCKS,
            minus_log_mean,
        )?;
        if !value.is_finite() {
            return Err(Error::Numerical("all-zero integrand batch".into()));
        }
        if err > 0.0 {
            num += value / (err * err);
            den += 1.0 / (err * err);
        } else {
            exact.push(value);
        }
    }
    if !exact.is_empty() {
        // Zero-variance chains (e.g. constant integrands) dominate the merge.
        return Ok((exact.iter().sum::<f64>() / exact.len() as f64, 0.0));
    }
    Ok((num / den, den.recip().sqrt()))
}

fn report(
    estimator: &str,
    value: f64,
    stderr: f64,
    cfg: &McConfig,
    start: Instant,
) -> EstimateReport {
    EstimateReport {
        estimator: estimator.into(),
        value,
        stderr,
        k: cfg.samples * cfg.chains,
        seed: cfg.seed,
        samples: None,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// `B(ρ) = −ln E_Π[tr(ρ_A P_A)⁴ tr(ρ_B P_B)⁴ / tr(ρ_U P)⁴]`.
pub fn estimate_b(mps: &MatrixProductState, cfg: &McConfig) -> Result<EstimateReport> {
    let start = Instant::now();
    let chains = mh_chains(mps, cfg)?;
    let (value, err) = b_from_chains(&chains)?;
    Ok(report("b_mc", value, err, cfg, start))
}

/// Rényi-2 mutual information `S_2(A) + S_2(B) − S_2(A ∪ B)` of a pure MPS.
/// `S_2(A ∪ B)` is taken from `A ∪ B` or its complement, whichever is contiguous.
pub fn renyi2_mutual_information_mps(
    mps: &MatrixProductState,
    a: &Region,
    b: &Region,
) -> Result<f64> {
    let n = mps.n_qubits();
    let union = a.union(b)?;
    let s2_union = if union.len() == n {
        0.0
    } else if union.as_interval().is_some() {
        mps.region_renyi2(&union)?
    } else if union.complement().as_interval().is_some() {
        mps.region_renyi2(&union.complement())?
    } else {
        return Err(Error::invalid("A ∪ B or its complement must be contiguous"));
    };
    Ok(mps.region_renyi2(a)? + mps.region_renyi2(b)? - s2_union)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutualTwoReport {
    #[serde(flatten)]
    pub estimate: EstimateReport,
    pub renyi2_mutual_information: f64,
    pub b: f64,
    pub b_stderr: f64,
    pub acceptance_rate: f64,
}

/// `I_2 = I_2^{Rényi}(A : B) − B(ρ)`.
pub fn estimate_i2(mps: &MatrixProductState, cfg: &McConfig) -> Result<MutualTwoReport> {
    Ok(estimate_i2_with_chains(mps, cfg)?.0)
}

/// [`estimate_i2`] that also returns the chains, for trace export.
pub fn estimate_i2_with_chains(
    mps: &MatrixProductState,
    cfg: &McConfig,
) -> Result<(MutualTwoReport, Vec<McChain>)> {
    let start = Instant::now();
    let info = renyi2_mutual_information_mps(mps, &cfg.a, &cfg.b)?;
    let chains = mh_chains(mps, cfg)?;
    let (b, b_err) = b_from_chains(&chains)?;
    let acceptance = chains
        .iter()
        .map(|c| c.diagnostics.acceptance_rate)
        .sum::<f64>()
        / chains.len() as f64;
    let report = MutualTwoReport {
        estimate: report("i2_mc", info - b, b_err, cfg, start),
        renyi2_mutual_information: info,
        b,
        b_stderr: b_err,
        acceptance_rate: acceptance,
    };
    Ok((report, chains))
}

/// `D_KL(p ‖ Π)` from the exact spectrum; equals `M_1 − M_2`. Up to 8 qubits.
pub fn kl_check(mps: &MatrixProductState) -> Result<f64> {
    if mps.n_qubits() > 8 {
        return Err(Error::SizeGuard {
            what: "exact KL check",
            limit: 8,
            got: mps.n_qubits(),
        });
    }
    let spectrum = PauliSpectrum::from_state(&mps.to_dense()?)?;
    Ok(kl_divergence(&spectrum.p(), &spectrum.pi_distribution()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{histogram, total_variation};
    use crate::oracle::b_term;
    use crate::statevector::DenseState;

    fn th_state() -> MatrixProductState {
        let mut psi = DenseState::zero(1).unwrap();
        psi.apply_1q(&crate::gates::hadamard(), 0).unwrap();
        psi.apply_1q(&crate::gates::t_gate(), 0).unwrap();
        MatrixProductState::from_dense(&psi, 1, 0.0).unwrap().0
    }

    #[test]
    fn four_copy_density_matches_direct_sum() {
        let mut rng = stream_rng(3, 0);
        let mps = MatrixProductState::random(4, 3, &mut rng).unwrap();
        let prior = FourCopyPrior::new(&mps, 3, &Region::full(4)).unwrap();
        let spectrum = PauliSpectrum::from_state(&mps.to_dense().unwrap()).unwrap();
        let pi = spectrum.pi_distribution();
        for i in [0u64, 5, 77, 200] {
            let p = PauliString::from_index(4, i).unwrap();
            let l = prior.log_density(&p).unwrap();
            assert!((l.exp() - pi[i as usize]).abs() < 1e-10, "{i}");
        }
        let mut rng = stream_rng(4, 0);
        let (p, l) = prior.sample(&mut rng).unwrap();
        assert!((prior.log_density(&p).unwrap() - l).abs() < 1e-12);
    }

    #[test]
    fn forced_identity_outside_support() {
        let mut rng = stream_rng(5, 0);
        let mps = MatrixProductState::random(5, 2, &mut rng).unwrap();
        let support = Region::new(5, vec![0, 1, 4]).unwrap();
        let prior = FourCopyPrior::new(&mps, 2, &support).unwrap();
        let mut rng = stream_rng(6, 0);
        for _ in 0..50 {
            let (p, _) = prior.sample(&mut rng).unwrap();
            assert_eq!(p.op(2), PauliOp::I);
            assert_eq!(p.op(3), PauliOp::I);
        }
    }

    #[test]
    fn stabilizer_chain_always_accepts() {
        let mps = MatrixProductState::ghz(4).unwrap();
        let cfg = McConfig::new(
            Prior::PerfectP,
            500,
            1,
            Region::interval(4, 0, 2).unwrap(),
            Region::interval(4, 2, 4).unwrap(),
        );
        let (_, diag) = mh_chain(&mps, &cfg).unwrap();
        assert_eq!(diag.acceptance_rate, 1.0);
    }

    #[test]
    fn th_chain_samples_pi() {
        let mps = th_state();
        let full = Region::full(1);
        let empty = Region::new(1, vec![]).unwrap();
        let pi = PauliSpectrum::from_state(&mps.to_dense().unwrap())
            .unwrap()
            .pi_distribution();
        let target = Target {
            mps: &mps,
            proposal: Proposal::Perfect(AncestralSampler::new(&mps).unwrap()),
            a: &full,
            b: &empty,
        };
        let cfg = McConfig::new(Prior::PerfectP, 50_000, 2, full.clone(), empty.clone());
        let chain = run_chain(&target, &cfg, 0).unwrap();
        let freq = histogram(chain.samples.iter().map(|p| p.index().unwrap() as usize), 4);
        assert!(total_variation(&freq, &pi) < 0.02);
    }

    #[test]
    fn bell_pair_b_is_ln4() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let bell = DenseState::new(vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)]).unwrap();
        let mps = MatrixProductState::from_dense(&bell, 2, 0.0).unwrap().0;
        let (a, b) = (
            Region::interval(2, 0, 1).unwrap(),
            Region::interval(2, 1, 2).unwrap(),
        );
        let r = estimate_i2(&mps, &McConfig::new(Prior::PerfectP, 4000, 3, a, b)).unwrap();
        assert!((r.b - 4f64.ln()).abs() < 3.0 * r.b_stderr.max(1e-3));
        assert!(r.estimate.value.abs() < 3.0 * r.b_stderr.max(1e-3));
    }

    #[test]
    fn separated_regions_match_oracle() {
        let mut rng = stream_rng(9, 0);
        let mps = MatrixProductState::random(6, 3, &mut rng).unwrap();
        let (a, b) = (
            Region::interval(6, 0, 2).unwrap(),
            Region::interval(6, 4, 6).unwrap(),
        );
        let exact = b_term(&mps.to_dense().unwrap(), &a, &b).unwrap();
        let mut cfg = McConfig::new(Prior::TruncatedMps { max_bond: 2 }, 20_000, 4, a, b);
        cfg.burn_in = 200;
        let r = estimate_b(&mps, &cfg).unwrap();
        assert!(
            (r.value - exact).abs() < 4.0 * r.stderr,
            "{} ± {} vs {exact}",
            r.value,
            r.stderr
        );
    }

    #[test]
    fn kl_identity_for_th() {
        let kl = kl_check(&th_state()).unwrap();
        assert!((kl - 0.058892).abs() < 1e-6);
    }

    #[test]
    fn config_checks() {
        let mps = MatrixProductState::t_state(4).unwrap();
        let (a, b) = (
            Region::interval(4, 0, 1).unwrap(),
            Region::interval(4, 3, 4).unwrap(),
        );
        assert!(mh_chain(
            &mps,
            &McConfig::new(Prior::PerfectP, 100, 0, a.clone(), b.clone())
        )
        .is_err());
        let overlap = Region::interval(4, 0, 2).unwrap();
        assert!(mh_chain(
            &mps,
            &McConfig::new(
                Prior::TruncatedMps { max_bond: 1 },
                100,
                0,
                a.clone(),
                overlap
            )
        )
        .is_err());
        assert!(mh_chain(
            &mps,
            &McConfig::new(Prior::TruncatedMps { max_bond: 1 }, 10, 0, a, b)
        )
        .is_err());
    }
}
