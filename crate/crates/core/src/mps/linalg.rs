//! Dense kernels shared by the MPS routines.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are dropped outright.
const RANK_TOL: f64 = 1e-14;

pub(crate) struct TruncatedSvd {
    pub u: DMatrix<C64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<C64>,
    /// Discarded fraction of `Σ s²`.
    pub discarded: f64,
}

/// SVD keeping at most `max_rank` values, in descending order, and dropping
/// the tail while its relative weight stays within `cutoff`.
pub(crate) fn truncated_svd(m: DMatrix<C64>, max_rank: usize, cutoff: f64) -> Result<TruncatedSvd> {
    let (rows, cols) = m.shape();
    // nalgebra's complex SVD loses the singular vectors of rank-deficient wide
    // blocks, so wide blocks are decomposed through their adjoint.
    let wide = rows < cols;
    let svd = SVD::try_new(
        if wide { m.adjoint() } else { m },
        true,
        true,
        f64::EPSILON,
        0,
    )
    .ok_or_else(|| Error::Numerical(format!("SVD of a {rows}×{cols} block did not converge")))?;
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) if wide => (vt.adjoint(), u.adjoint()),
        (Some(u), Some(vt)) => (u, vt),
        _ => unreachable!("singular vectors were requested"),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let total: f64 = values.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("SVD of a zero block".into()));
    }
    let largest = values[0];
    let mut keep = values
        .iter()
        .take_while(|&&s| s > RANK_TOL * largest)
        .count()
        .min(max_rank)
        .max(1);
    let mut tail: f64 = values[keep..].iter().map(|s| s * s).sum();
    while keep > 1 && (tail + values[keep - 1].powi(2)) / total <= cutoff {
        keep -= 1;
        tail += values[keep].powi(2);
    }
    let u = DMatrix::from_fn(rows, keep, |r, c| u[(r, order[c])]);
    let vt = DMatrix::from_fn(keep, cols, |r, c| vt[(order[r], c)]);
    Ok(TruncatedSvd {
        u,
        s: values[..keep].to_vec(),
        vt,
        discarded: tail / total,
    })
}
