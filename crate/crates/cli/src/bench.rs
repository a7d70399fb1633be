//! Wall-time scaling of the hybrid and MPS samplers.

use std::time::Instant;

use magiclab::hybrid::{HybridSampler, SamplingMode};
use magiclab::mps::MatrixProductState;
use magiclab::mps_sampler::AncestralSampler;
use magiclab::rng::{derive_seed, stream_rng};
use magiclab::DenseState;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub hybrid_n: Vec<usize>,
    pub hybrid_samples: usize,
    pub mps_n: Vec<usize>,
    pub mps_chi: usize,
    pub mps_samples: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            hybrid_n: vec![8, 10, 12, 14],
            hybrid_samples: 200,
            mps_n: vec![8, 16, 24, 32, 40],
            mps_chi: 16,
            mps_samples: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HybridTiming {
    pub n: usize,
    pub setup_s: f64,
    pub per_sample_s: f64,
    /// Complex numbers held by the sampler besides the state.
    pub workspace_peak: usize,
    /// `workspace_peak / 2^N`.
    pub workspace_per_amplitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MpsTiming {
    pub n: usize,
    pub chi: usize,
    pub per_sample_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub hybrid: Vec<HybridTiming>,
    /// Per-sample time ratios between consecutive entries of `hybrid`.
    pub hybrid_ratios: Vec<(usize, usize, f64)>,
    pub mps: Vec<MpsTiming>,
    pub mps_fit: Option<LinearFit>,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

pub fn time_hybrid(n: usize, samples: usize, seed: u64) -> CliResult<HybridTiming> {
    let state = DenseState::haar_random(n, &mut stream_rng(seed, 0))?;
    let start = Instant::now();
    let sampler = HybridSampler::new(&state, SamplingMode::Pauli)?;
    let setup_s = start.elapsed().as_secs_f64();
    let mut rng = stream_rng(seed, 1);
    sampler.sample(&mut rng)?;
    let start = Instant::now();
    for _ in 0..samples {
        sampler.sample(&mut rng)?;
    }
    let per_sample_s = start.elapsed().as_secs_f64() / samples as f64;
    let workspace_peak = sampler.workspace_peak();
    Ok(HybridTiming {
        n,
        setup_s,
        per_sample_s,
        workspace_peak,
        workspace_per_amplitude: workspace_peak as f64 / (1u64 << n) as f64,
    })
}

pub fn time_mps(n: usize, chi: usize, samples: usize, seed: u64) -> CliResult<MpsTiming> {
    let mps = MatrixProductState::random(n, chi, &mut stream_rng(seed, 0))?;
    let sampler = AncestralSampler::new(&mps)?;
    let mut rng = stream_rng(seed, 1);
    sampler.sample(&mut rng)?;
    let start = Instant::now();
    for _ in 0..samples {
        sampler.sample(&mut rng)?;
    }
    Ok(MpsTiming {
        n,
        chi,
        per_sample_s: start.elapsed().as_secs_f64() / samples as f64,
    })
}

/// Samples are drawn sequentially so the timings do not depend on the pool size.
pub fn run_bench(cfg: &BenchConfig, seed: u64) -> CliResult<BenchReport> {
    if cfg.hybrid_samples == 0 || cfg.mps_samples == 0 || cfg.mps_chi == 0 {
        return Err(CliError::Config(
            "sample counts and χ must be positive".into(),
        ));
    }
    let hybrid = cfg
        .hybrid_n
        .iter()
        .enumerate()
        .map(|(i, &n)| time_hybrid(n, cfg.hybrid_samples, derive_seed(seed, i as u64)))
        .collect::<CliResult<Vec<_>>>()?;
    let hybrid_ratios = hybrid
        .windows(2)
        .map(|w| (w[0].n, w[1].n, w[1].per_sample_s / w[0].per_sample_s))
        .collect();
    let mps = cfg
        .mps_n
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            time_mps(
                n,
                cfg.mps_chi,
                cfg.mps_samples,
                derive_seed(seed, 1000 + i as u64),
            )
        })
        .collect::<CliResult<Vec<_>>>()?;
    let xs: Vec<f64> = mps.iter().map(|t| t.n as f64).collect();
    let ys: Vec<f64> = mps.iter().map(|t| t.per_sample_s).collect();
    let mps_fit = linear_fit(&xs, &ys);
    Ok(BenchReport {
        hybrid,
        hybrid_ratios,
        mps,
        mps_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_unit_r_squared() {
        let fit = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
