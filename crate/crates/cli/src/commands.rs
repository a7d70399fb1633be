//! The single-state subcommands: `spectrum`, `sre`, `capacity`, `mutual`, `mc-i2`.

use std::time::Instant;

use magiclab::estimate::{sample_stats, EstimateReport};
use magiclab::hybrid::{sample_log_expectations, HybridSampler, SamplingMode};
use magiclab::monte_carlo::{
    estimate_i2_with_chains, McConfig, MutualTwoReport, Prior, DEFAULT_BURN_IN,
};
use magiclab::mps_sampler::{
    estimate_mutual_q, sample_log_expectations_mps, AncestralSampler, MutualSign,
};
use magiclab::oracle::{mutual_sre_regions, MutualVariant, PauliSpectrum, QSpectrum};
use magiclab::statevector::DenseOperator;
use magiclab::Region;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::Artifacts;
use crate::states::{BuiltState, StateSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Full enumeration.
    Exact,
    /// Hybrid Schrödinger–Feynman sampling of a dense state.
    Hybrid,
    /// Perfect sampling of an MPS.
    Mps,
}

fn default_samples() -> usize {
    10_000
}

fn default_alphas() -> Vec<f64> {
    vec![2.0]
}

pub(crate) fn region(n: usize, indices: &[usize], what: &str) -> CliResult<Region> {
    Region::new(n, indices.to_vec()).map_err(|e| CliError::Config(format!("region {what}: {e}")))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub state: StateSpec,
}

#[derive(Debug, Serialize)]
struct SpectrumSummary {
    n_qubits: usize,
    purity: f64,
    m1: f64,
    m2: f64,
    capacity: Option<f64>,
}

pub fn cmd_spectrum(cfg: &SpectrumConfig, seed: u64, out: &Artifacts) -> CliResult<()> {
    let state = cfg.state.build(seed)?.dense()?;
    let spectrum = PauliSpectrum::from_state(&state)?;
    let q = QSpectrum::from_operator(&DenseOperator::from_state(&state)).ok();
    out.write_csv("spectrum.csv", &spectrum.rows(q.as_ref()))?;
    let summary = SpectrumSummary {
        n_qubits: state.n_qubits(),
        purity: 1.0,
        m1: spectrum.von_neumann_sre(),
        m2: spectrum.sre(2.0)?,
        capacity: spectrum.magic_capacity().ok(),
    };
    out.write_json("summary.json", &summary)?;
    Ok(())
}

/// Shared by `sre` and `capacity`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub state: StateSpec,
    pub estimator: Estimator,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Rényi indices reported by the exact estimator besides `α = 1`.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Write the drawn Pauli strings, one per line.
    #[serde(default)]
    pub write_samples: bool,
    /// Keep per-sample `ln⟨P⟩²` in the report.
    #[serde(default)]
    pub keep_values: bool,
}

#[derive(Debug, Serialize)]
struct ExactSre {
    m1: f64,
    capacity: f64,
    renyi: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Quantity {
    M1,
    Capacity,
}

fn sampled_logs(
    state: &BuiltState,
    estimator: Estimator,
    count: usize,
    seed: u64,
) -> CliResult<Vec<f64>> {
    Ok(match estimator {
        Estimator::Hybrid => sample_log_expectations(&state.dense()?, count, seed)?,
        Estimator::Mps => sample_log_expectations_mps(&state.mps()?, count, seed)?,
        Estimator::Exact => unreachable!("exact estimator does not sample"),
    })
}

fn write_samples(
    state: &BuiltState,
    estimator: Estimator,
    count: usize,
    seed: u64,
    out: &Artifacts,
) -> CliResult<()> {
    let lines: Vec<String> = match estimator {
        Estimator::Hybrid => {
            let dense = state.dense()?;
            HybridSampler::new(&dense, SamplingMode::Pauli)?
                .sample_batch(seed, count)?
                .iter()
                .map(|p| p.to_string())
                .collect()
        }
        Estimator::Mps => AncestralSampler::new(&state.mps()?)?
            .sample_batch(seed, count)?
            .iter()
            .map(|d| d.pauli.to_string())
            .collect(),
        Estimator::Exact => return Ok(()),
    };
    out.write_lines("samples.txt", lines)?;
    Ok(())
}

fn run_estimator(
    cfg: &EstimatorConfig,
    seed: u64,
    out: &Artifacts,
    quantity: Quantity,
) -> CliResult<()> {
    let state = cfg.state.build(seed)?;
    if cfg.estimator == Estimator::Exact {
        let spectrum = PauliSpectrum::from_state(&state.dense()?)?;
        let renyi = cfg
            .alphas
            .iter()
            .map(|&a| Ok((a, spectrum.sre(a)?)))
            .collect::<CliResult<Vec<_>>>()?;
        let exact = ExactSre {
            m1: spectrum.von_neumann_sre(),
            capacity: spectrum.magic_capacity()?,
            renyi,
        };
        out.write_json("report.json", &exact)?;
        return Ok(());
    }
    let min = if quantity == Quantity::M1 { 100 } else { 1000 };
    if cfg.samples < min {
        return Err(CliError::Config(format!("need at least {min} samples")));
    }
    let start = Instant::now();
    let logs = sampled_logs(&state, cfg.estimator, cfg.samples, seed)?;
    let stats = sample_stats(&logs)?;
    let tag = match cfg.estimator {
        Estimator::Hybrid => "hybrid",
        _ => "mps",
    };
    let (name, value, stderr) = match quantity {
        Quantity::M1 => (format!("m1_{tag}"), -stats.mean, stats.stderr_mean),
        Quantity::Capacity => (
            format!("capacity_{tag}"),
            stats.variance,
            stats.stderr_variance,
        ),
    };
    let report = EstimateReport {
        estimator: name,
        value,
        stderr,
        k: cfg.samples,
        seed,
        samples: cfg.keep_values.then_some(logs),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    out.write_json("report.json", &report)?;
    if cfg.write_samples {
        write_samples(&state, cfg.estimator, cfg.samples, seed, out)?;
    }
    Ok(())
}

pub fn cmd_sre(cfg: &EstimatorConfig, seed: u64, out: &Artifacts) -> CliResult<()> {
    run_estimator(cfg, seed, out, Quantity::M1)
}

pub fn cmd_capacity(cfg: &EstimatorConfig, seed: u64, out: &Artifacts) -> CliResult<()> {
    run_estimator(cfg, seed, out, Quantity::Capacity)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutualConfig {
    pub state: StateSpec,
    pub a: Vec<usize>,
    /// Defaults to the complement of `a`.
    #[serde(default)]
    pub b: Option<Vec<usize>>,
    pub alpha: f64,
    #[serde(default = "default_variant")]
    pub variant: MutualVariant,
    pub estimator: Estimator,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Report the sampled `I_1^[q]` with the sign of the displayed estimator.
    #[serde(default)]
    pub paper_sign: bool,
}

fn default_variant() -> MutualVariant {
    MutualVariant::Q
}

#[derive(Debug, Serialize)]
struct ExactMutual {
    alpha: f64,
    variant: MutualVariant,
    value: f64,
}

pub fn cmd_mutual(cfg: &MutualConfig, seed: u64, out: &Artifacts) -> CliResult<()> {
    let state = cfg.state.build(seed)?;
    let n = state.n_qubits();
    let a = region(n, &cfg.a, "a")?;
    let b = match &cfg.b {
        Some(b) => region(n, b, "b")?,
        None => a.complement(),
    };
    match cfg.estimator {
        Estimator::Exact => {
            let value = mutual_sre_regions(&state.dense()?, &a, &b, cfg.alpha, cfg.variant)?;
            out.write_json(
                "report.json",
                &ExactMutual {
                    alpha: cfg.alpha,
                    variant: cfg.variant,
                    value,
                },
            )?;
        }
        Estimator::Mps => {
            if cfg.alpha != 1.0 || cfg.variant != MutualVariant::Q {
                return Err(CliError::Config(
                    "the sampled mutual SRE is I_1^[q]; use mc-i2 for α = 2".into(),
                ));
            }
            if b != a.complement() {
                return Err(CliError::Config(
                    "the sampled I_1^[q] needs B = complement of A".into(),
                ));
            }
            let sign = if cfg.paper_sign {
                MutualSign::Paper
            } else {
                MutualSign::Definitional
            };
            let report = estimate_mutual_q(&state.mps()?, &a, cfg.samples, seed, sign)?;
            out.write_json("report.json", &report)?;
        }
        Estimator::Hybrid => {
            return Err(CliError::Config(
                "mutual SREs are computed exactly or from an MPS".into(),
            ))
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McI2Config {
    pub state: StateSpec,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub prior: Prior,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Export the trace of every chain.
    #[serde(default = "default_true")]
    pub write_trace: bool,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_chains() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize)]
struct TraceRow {
    chain: usize,
    step: usize,
    pauli_text: String,
    log_pi: f64,
    accepted: bool,
    integrand: f64,
}

pub fn mc_config(
    n: usize,
    a: &[usize],
    b: &[usize],
    prior: Prior,
    samples: usize,
    burn_in: usize,
    chains: usize,
    seed: u64,
) -> CliResult<McConfig> {
    let mut cfg = McConfig::new(prior, samples, seed, region(n, a, "a")?, region(n, b, "b")?);
    cfg.burn_in = burn_in;
    cfg.chains = chains;
    cfg.validate(n)?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct McReport {
    #[serde(flatten)]
    i2: MutualTwoReport,
    chains: usize,
}

pub fn cmd_mc_i2(cfg: &McI2Config, seed: u64, out: &Artifacts) -> CliResult<()> {
    let mps = cfg.state.build(seed)?.mps()?;
    let mc = mc_config(
        mps.n_qubits(),
        &cfg.a,
        &cfg.b,
        cfg.prior,
        cfg.samples,
        cfg.burn_in,
        cfg.chains,
        seed,
    )?;
    let (report, chains) = estimate_i2_with_chains(&mps, &mc)?;
    if cfg.write_trace {
        let rows: Vec<TraceRow> = chains
            .iter()
            .enumerate()
            .flat_map(|(c, chain)| {
                chain.trace.iter().map(move |s| TraceRow {
                    chain: c,
                    step: s.step,
                    pauli_text: s.pauli_text.clone(),
                    log_pi: s.log_pi,
                    accepted: s.accepted,
                    integrand: s.integrand,
                })
            })
            .collect();
        out.write_csv("chain.csv", &rows)?;
    }
    out.write_json(
        "report.json",
        &McReport {
            i2: report,
            chains: cfg.chains,
        },
    )?;
    Ok(())
}
