//! Parameter scans: doped Clifford+T circuits and model ground states.

use magiclab::estimate::sample_stats;
use magiclab::hybrid::sample_log_expectations;
use magiclab::models::{clifford_t_state, lanczos_ground_state, CliffordTSpec, Model};
use magiclab::monte_carlo::{estimate_i2, Prior, DEFAULT_BURN_IN};
use magiclab::mps::dmrg::{dmrg_ground_state, DmrgConfig};
use magiclab::mps::MatrixProductState;
use magiclab::mps_sampler::{estimate_mutual_q, sample_log_expectations_mps, MutualSign};
use magiclab::oracle::{
    mutual_sre_regions, pure_moments, MutualVariant, MAX_MIXED_QUBITS, MAX_STREAMING_QUBITS,
};
use magiclab::rng::derive_seed;
use magiclab::{DenseState, Region};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{mc_config, region, Estimator};
use crate::error::{CliError, CliResult};
use crate::states::{hamiltonian_spec, GroundMethod, RotationSpec};

fn quarter() -> f64 {
    0.25
}

/// Explicit values or an inclusive arithmetic range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        #[serde(default = "quarter")]
        step: f64,
    },
}

impl Grid {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        match self {
            Grid::Values(v) if !v.is_empty() => Ok(v.clone()),
            Grid::Values(_) => Err(CliError::Config("empty grid".into())),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(CliError::Config(format!(
                        "bad grid {start}..{stop} step {step}"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

/// `(mean, standard error)` of `ln⟨P⟩²` samples mapped to `(M_1, err, C_M, err, M_2, err)`.
struct SampledMoments {
    m1: (f64, f64),
    capacity: (f64, f64),
    m2: (f64, f64),
}

fn sampled_moments(logs: &[f64]) -> CliResult<SampledMoments> {
    let stats = sample_stats(logs)?;
    // M_2 = −ln E_p[⟨P⟩²], error by the delta method.
    let squares: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
    let sq = sample_stats(&squares)?;
    Ok(SampledMoments {
        m1: (-stats.mean, stats.stderr_mean),
        capacity: (stats.variance, stats.stderr_variance),
        m2: (-sq.mean.ln(), sq.stderr_mean / sq.mean),
    })
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliffordTScanConfig {
    pub n_values: Vec<usize>,
    #[serde(default = "default_z_grid")]
    pub z: Grid,
    pub seeds: usize,
    pub estimator: Estimator,
    #[serde(default = "default_scan_samples")]
    pub samples: usize,
}

fn default_z_grid() -> Grid {
    Grid::Range {
        start: 0.0,
        stop: 4.0,
        step: 0.25,
    }
}

fn default_scan_samples() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordTRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub z: f64,
    pub n_t: usize,
    pub seed: u64,
    /// `M_1 / N`.
    pub m1: f64,
    pub m1_err: f64,
    #[serde(rename = "C_M")]
    pub capacity: f64,
    #[serde(rename = "C_M_err")]
    pub capacity_err: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

/// Seed average at one `(N, z)`; errors are standard errors over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordTSummaryRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub z: f64,
    pub seeds: usize,
    pub m1: f64,
    pub m1_err: f64,
    /// Central difference of `m1` on the z grid; empty at the ends.
    pub dm1_dz: Option<f64>,
    #[serde(rename = "C_M")]
    pub capacity: f64,
    #[serde(rename = "C_M_err")]
    pub capacity_err: f64,
}

fn clifford_t_point(
    n: usize,
    z: f64,
    seed: u64,
    cfg: &CliffordTScanConfig,
) -> CliResult<CliffordTRow> {
    let n_t = (z * n as f64).round() as usize;
    let state = clifford_t_state(&CliffordTSpec {
        n_qubits: n,
        n_t,
        seed,
    })?;
    let nf = n as f64;
    let (m1, m1_err, capacity, capacity_err, k) = match cfg.estimator {
        Estimator::Exact => {
            let m = pure_moments(&state)?;
            (m.m1 / nf, 0.0, m.capacity, 0.0, 0)
        }
        Estimator::Hybrid => {
            let logs = sample_log_expectations(&state, cfg.samples, derive_seed(seed, 1))?;
            let s = sampled_moments(&logs)?;
            (
                s.m1.0 / nf,
                s.m1.1 / nf,
                s.capacity.0,
                s.capacity.1,
                cfg.samples,
            )
        }
        Estimator::Mps => {
            return Err(CliError::Config(
                "the Clifford+T scan uses the exact or hybrid estimator".into(),
            ))
        }
    };
    Ok(CliffordTRow {
        n,
        z: n_t as f64 / nf,
        n_t,
        seed,
        m1,
        m1_err,
        capacity,
        capacity_err,
        k,
    })
}

/// Per-seed rows and their `(N, z)` aggregates. Point seeds are derived from
/// `master` and the point's position in the grid.
pub fn clifford_t_scan(
    cfg: &CliffordTScanConfig,
    master: u64,
) -> CliResult<(Vec<CliffordTRow>, Vec<CliffordTSummaryRow>)> {
    if cfg.seeds == 0 || cfg.n_values.is_empty() {
        return Err(CliError::Config("need at least one N and one seed".into()));
    }
    if let Some(&n) = cfg
        .n_values
        .iter()
        .find(|&&n| n == 0 || n > MAX_STREAMING_QUBITS)
    {
        return Err(CliError::Config(format!(
            "N = {n} outside 1..={MAX_STREAMING_QUBITS}"
        )));
    }
    let zs = cfg.z.points()?;
    let jobs: Vec<(usize, f64, u64)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| zs.iter().map(move |&z| (n, z)))
        .flat_map(|(n, z)| (0..cfg.seeds).map(move |s| (n, z, s)))
        .enumerate()
        .map(|(i, (n, z, _))| (n, z, derive_seed(master, i as u64)))
        .collect();
    let rows: Vec<CliffordTRow> = jobs
        .par_iter()
        .map(|&(n, z, seed)| clifford_t_point(n, z, seed, cfg))
        .collect::<CliResult<_>>()?;

    let mut summary = Vec::new();
    for (block, &n) in rows.chunks(zs.len() * cfg.seeds).zip(&cfg.n_values) {
        let mut points: Vec<CliffordTSummaryRow> = block
            .chunks(cfg.seeds)
            .map(|group| {
                let (m, me) = mean_sem(group.iter().map(|r| r.m1));
                let (c, ce) = mean_sem(group.iter().map(|r| r.capacity));
                CliffordTSummaryRow {
                    n,
                    z: group[0].z,
                    seeds: group.len(),
                    m1: m,
                    m1_err: me,
                    dm1_dz: None,
                    capacity: c,
                    capacity_err: ce,
                }
            })
            .collect();
        for i in 1..points.len().saturating_sub(1) {
            let dz = points[i + 1].z - points[i - 1].z;
            if dz > 0.0 {
                points[i].dm1_dz = Some((points[i + 1].m1 - points[i - 1].m1) / dz);
            }
        }
        summary.extend(points);
    }
    Ok((rows, summary))
}

fn mean_sem(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tfim,
    Xxz,
}

impl ModelKind {
    fn at(self, parameter: f64) -> Model {
        match self {
            ModelKind::Tfim => Model::Tfim { h: parameter },
            ModelKind::Xxz => Model::Xxz { delta: parameter },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct I2Spec {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub prior: Prior,
    #[serde(default = "default_scan_samples")]
    pub samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub chains: usize,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundScanConfig {
    pub model: ModelKind,
    pub n: usize,
    /// `h` for the TFIM, `Δ` for the XXZ chain.
    pub parameters: Grid,
    #[serde(default)]
    pub rotation: Option<RotationSpec>,
    #[serde(default)]
    pub method: GroundMethod,
    #[serde(default)]
    pub dmrg: DmrgConfig,
    #[serde(default = "default_scan_samples")]
    pub samples: usize,
    /// Use exact enumeration wherever the size allows instead of sampling.
    #[serde(default)]
    pub exact: bool,
    /// Prefix length of `A` for `I_1^[q]`; omitted means not computed.
    #[serde(default)]
    pub i1q_cut: Option<usize>,
    #[serde(default)]
    pub i2: Option<I2Spec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub chi: usize,
    pub parameter: f64,
    pub energy: Option<f64>,
    /// `M_1 / N`.
    pub m1: Option<f64>,
    pub m1_err: Option<f64>,
    /// `M_2 / N`.
    pub m2: Option<f64>,
    pub m2_err: Option<f64>,
    #[serde(rename = "C_M")]
    pub capacity: Option<f64>,
    #[serde(rename = "C_M_err")]
    pub capacity_err: Option<f64>,
    #[serde(rename = "I1q")]
    pub i1q: Option<f64>,
    #[serde(rename = "I1q_err")]
    pub i1q_err: Option<f64>,
    #[serde(rename = "I2")]
    pub i2: Option<f64>,
    #[serde(rename = "I2_err")]
    pub i2_err: Option<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub parameter: f64,
    pub sweep_energies: Vec<f64>,
    pub max_discarded: f64,
}

struct Solved {
    energy: f64,
    mps: MatrixProductState,
    dense: Option<DenseState>,
    trace: Option<EnergyTrace>,
    chi: usize,
}

fn solve(cfg: &GroundScanConfig, parameter: f64) -> magiclab::Result<Solved> {
    let spec = hamiltonian_spec(cfg.model.at(parameter), cfg.n, cfg.rotation.as_ref())
        .map_err(|e| magiclab::Error::InvalidArgument(e.to_string()))?;
    match cfg.method {
        GroundMethod::Dmrg => {
            let r = dmrg_ground_state(&spec, &cfg.dmrg)?;
            let dense = if cfg.exact && cfg.n <= MAX_STREAMING_QUBITS {
                Some(r.state.to_dense()?)
            } else {
                None
            };
            Ok(Solved {
                energy: r.energy,
                mps: r.state,
                dense,
                trace: Some(EnergyTrace {
                    parameter,
                    sweep_energies: r.sweep_energies,
                    max_discarded: r.max_discarded,
                }),
                chi: cfg.dmrg.max_bond,
            })
        }
        GroundMethod::Lanczos => {
            let g = lanczos_ground_state(&spec)?;
            let (mps, _) = MatrixProductState::from_dense(&g.state, usize::MAX, 0.0)?;
            let chi = mps.max_bond();
            Ok(Solved {
                energy: g.energy,
                mps,
                dense: Some(g.state),
                trace: None,
                chi,
            })
        }
    }
}

fn ground_point(
    cfg: &GroundScanConfig,
    parameter: f64,
    seed: u64,
) -> CliResult<(GroundRow, Option<EnergyTrace>)> {
    let n = cfg.n;
    let nf = n as f64;
    let mut row = GroundRow {
        n,
        chi: cfg.dmrg.max_bond,
        parameter,
        energy: None,
        m1: None,
        m1_err: None,
        m2: None,
        m2_err: None,
        capacity: None,
        capacity_err: None,
        i1q: None,
        i1q_err: None,
        i2: None,
        i2_err: None,
        k: cfg.samples,
        status: "ok".into(),
    };
    let solved = match solve(cfg, parameter) {
        Ok(s) => s,
        Err(e) if e.is_numerical() => {
            row.status = format!("failed: {e}");
            return Ok((row, None));
        }
        Err(e) => return Err(e.into()),
    };
    row.chi = solved.chi;
    row.energy = Some(solved.energy);
    let result: CliResult<()> = (|| {
        match (&solved.dense, cfg.exact) {
            (Some(dense), true) => {
                let m = pure_moments(dense)?;
                row.m1 = Some(m.m1 / nf);
                row.m2 = Some(m.m2 / nf);
                row.capacity = Some(m.capacity);
                row.m1_err = Some(0.0);
                row.m2_err = Some(0.0);
                row.capacity_err = Some(0.0);
            }
            _ => {
                let logs =
                    sample_log_expectations_mps(&solved.mps, cfg.samples, derive_seed(seed, 1))?;
                let s = sampled_moments(&logs)?;
                row.m1 = Some(s.m1.0 / nf);
                row.m1_err = Some(s.m1.1 / nf);
                row.m2 = Some(s.m2.0 / nf);
                row.m2_err = Some(s.m2.1 / nf);
                row.capacity = Some(s.capacity.0);
                row.capacity_err = Some(s.capacity.1);
            }
        }
        if let Some(cut) = cfg.i1q_cut {
            let a = Region::interval(n, 0, cut)?;
            match (&solved.dense, cfg.exact && n <= MAX_MIXED_QUBITS) {
                (Some(dense), true) => {
                    row.i1q = Some(mutual_sre_regions(
                        dense,
                        &a,
                        &a.complement(),
                        1.0,
                        MutualVariant::Q,
                    )?);
                    row.i1q_err = Some(0.0);
                }
                _ => {
                    let r = estimate_mutual_q(
                        &solved.mps,
                        &a,
                        cfg.samples,
                        derive_seed(seed, 2),
                        MutualSign::Definitional,
                    )?;
                    row.i1q = Some(r.estimate.value);
                    row.i1q_err = Some(r.estimate.stderr);
                }
            }
        }
        if let Some(spec) = &cfg.i2 {
            let (a, b) = (region(n, &spec.a, "a")?, region(n, &spec.b, "b")?);
            match (
                &solved.dense,
                cfg.exact && a.len() + b.len() <= MAX_MIXED_QUBITS,
            ) {
                (Some(dense), true) => {
                    row.i2 = Some(mutual_sre_regions(dense, &a, &b, 2.0, MutualVariant::P)?);
                    row.i2_err = Some(0.0);
                }
                _ => {
                    let mc = mc_config(
                        n,
                        &spec.a,
                        &spec.b,
                        spec.prior,
                        spec.samples,
                        spec.burn_in,
                        spec.chains,
                        derive_seed(seed, 3),
                    )?;
                    let r = estimate_i2(&solved.mps, &mc)?;
                    row.i2 = Some(r.estimate.value);
                    row.i2_err = Some(r.estimate.stderr);
                }
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => {}
        Err(CliError::Core(e)) if e.is_numerical() => row.status = format!("failed: {e}"),
        Err(e) => return Err(e),
    }
    Ok((row, solved.trace))
}

/// One row per grid point; numerical failures mark the row and the scan continues.
pub fn ground_scan(
    cfg: &GroundScanConfig,
    master: u64,
) -> CliResult<(Vec<GroundRow>, Vec<EnergyTrace>)> {
    if let Some(cut) = cfg.i1q_cut {
        if cut == 0 || cut >= cfg.n {
            return Err(CliError::Config(format!(
                "i1q_cut {cut} must lie in 1..{}",
                cfg.n
            )));
        }
    }
    if let Some(spec) = &cfg.i2 {
        mc_config(
            cfg.n,
            &spec.a,
            &spec.b,
            spec.prior,
            spec.samples,
            spec.burn_in,
            spec.chains,
            master,
        )?;
    }
    cfg.dmrg.validate()?;
    let params = cfg.parameters.points()?;
    let out: Vec<(GroundRow, Option<EnergyTrace>)> = params
        .par_iter()
        .enumerate()
        .map(|(i, &p)| ground_point(cfg, p, derive_seed(master, i as u64)))
        .collect::<CliResult<_>>()?;
    let traces = out.iter().filter_map(|(_, t)| t.clone()).collect();
    Ok((out.into_iter().map(|(r, _)| r).collect(), traces))
}
