//! Estimator reports and the small amount of sample statistics they need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: String,
    pub value: f64,
    pub stderr: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    pub wall_time_s: f64,
}

/// Moments of a sample; variances use the `K − 1` denominator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// `√(variance / K)`.
    pub stderr_mean: f64,
    /// Standard error of `variance` from the fourth central moment.
    pub stderr_variance: f64,
}

pub fn sample_stats(values: &[f64]) -> Result<SampleStats> {
    let k = values.len();
    if k < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let kf = k as f64;
    let mean = values.iter().sum::<f64>() / kf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in values {
        let d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    let variance = m2 / (kf - 1.0);
    let mu4 = m4 / kf;
    let var_of_var = mu4 / kf - variance * variance * (kf - 3.0) / (kf * (kf - 1.0));
    Ok(SampleStats {
        count: k,
        mean,
        variance,
        stderr_mean: (variance / kf).sqrt(),
        stderr_variance: var_of_var.max(0.0).sqrt(),
    })
}

/// Delete-one-block jackknife of `statistic` over `values` split into
/// at most `max_blocks` contiguous blocks. Returns the bias-corrected value
/// and its standard error.
pub fn block_jackknife<F>(values: &[f64], max_blocks: usize, statistic: F) -> Result<(f64, f64)>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let n = values.len();
    let blocks = max_blocks.min(n);
    if blocks < 2 {
        return Err(Error::invalid("jackknife needs at least two blocks"));
    }
    let size = n / blocks;
    let used = &values[..size * blocks];
    let full = statistic(used, &[]);
    let mut partial = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let (head, rest) = used.split_at(b * size);
        partial.push(statistic(head, &rest[size..]));
    }
    let bf = blocks as f64;
    let mean = partial.iter().sum::<f64>() / bf;
    let var = partial.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() * (bf - 1.0) / bf;
    Ok((bf * full - (bf - 1.0) * mean, var.sqrt()))
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Empirical frequencies of integer labels in `[0, size)`.
pub fn histogram(labels: impl IntoIterator<Item = usize>, size: usize) -> Vec<f64> {
    let mut counts = vec![0u64; size];
    let mut total = 0u64;
    for l in labels {
        counts[l] += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / total.max(1) as f64)
        .collect()
}
