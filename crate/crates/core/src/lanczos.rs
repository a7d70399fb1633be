//! Restarted Lanczos for the lowest eigenpair of a Hermitian operator.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LanczosConfig {
    pub max_krylov: usize,
    /// Convergence threshold on the Ritz residual `‖Hx − θx‖`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Report non-convergence when the final residual exceeds this.
    pub fail_above: f64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            max_krylov: 200,
            tol: 1e-10,
            max_restarts: 20,
            fail_above: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub matvecs: usize,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Lowest eigenpair of the tridiagonal matrix `(alpha, beta)`.
fn tridiagonal_ground(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let (k, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (val, eig.eigenvectors.column(k).iter().copied().collect())
}

/// Lowest eigenpair of `apply` (which writes `H·v` into its second argument),
/// started from `start`. The Krylov basis is fully reorthogonalised; when it
/// fills up the iteration restarts from the current Ritz vector.
pub fn lowest_eigenpair<F>(mut apply: F, start: Vec<C64>, cfg: &LanczosConfig) -> Result<Eigenpair>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let dim = start.len();
    let mut x = start;
    let n0 = norm(&x);
    if !(n0 > 0.0) {
        return Err(Error::invalid("Lanczos start vector is zero"));
    }
    x.iter_mut().for_each(|v| *v /= n0);

    let mut matvecs = 0;
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut best = (f64::INFINITY, x.clone(), f64::INFINITY);

    for _ in 0..=cfg.max_restarts {
        let mut basis: Vec<Vec<C64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz = (0.0, vec![1.0]);
        let krylov = cfg.max_krylov.min(dim).max(1);
        for j in 0..krylov {
            apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    axpy(&mut w, -c, v);
                }
            }
            let b = norm(&w);
            let check = j + 1 == krylov || b < 1e-13 || j % 4 == 3;
            if check {
                ritz = tridiagonal_ground(&alpha, &beta);
                let est = b * ritz.1[j].abs();
                if est < cfg.tol || b < 1e-13 {
                    break;
                }
            }
            if j + 1 < krylov {
                beta.push(b);
                basis.push(w.iter().map(|v| v / b).collect());
            }
        }
        let m = alpha.len();
        if ritz.1.len() != m {
            ritz = tridiagonal_ground(&alpha, &beta[..m - 1]);
        }
        let mut next = vec![C64::new(0.0, 0.0); dim];
        for (c, v) in ritz.1.iter().zip(&basis) {
            axpy(&mut next, C64::new(*c, 0.0), v);
        }
        let nn = norm(&next);
        next.iter_mut().for_each(|v| *v /= nn);
        apply(&next, &mut w);
        matvecs += 1;
        let theta = dot(&next, &w).re;
        let residual = w
            .iter()
            .zip(&next)
            .map(|(h, v)| (h - v * theta).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual < best.2 {
            best = (theta, next.clone(), residual);
        }
        if residual < cfg.tol.max(1e-13 * theta.abs()) {
            break;
        }
        x = next;
    }
    let (value, vector, residual) = best;
    if residual > cfg.fail_above {
        return Err(Error::NoConvergence {
            iterations: matvecs,
            residual,
        });
    }
    Ok(Eigenpair {
        value,
        vector,
        residual,
        matvecs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn matches_dense_eigensolver() {
        let mut rng = crate::rng::stream_rng(11, 0);
        let n = 60;
        let mut h = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = C64::new(
                    rng.random::<f64>() - 0.5,
                    if i == j {
                        0.0
                    } else {
                        rng.random::<f64>() - 0.5
                    },
                );
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        let exact = h.clone().symmetric_eigen().eigenvalues.min();
        let start: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0 + i as f64 * 0.01, 0.0))
            .collect();
        let cfg = LanczosConfig {
            max_krylov: 20,
            ..Default::default()
        };
        let pair = lowest_eigenpair(
            |v, out| {
                let r = &h * nalgebra::DVector::from_column_slice(v);
                out.copy_from_slice(r.as_slice());
            },
            start,
            &cfg,
        )
        .unwrap();
        assert!(
            (pair.value - exact).abs() < 1e-10,
            "{} vs {}",
            pair.value,
            exact
        );
        assert!(pair.residual < 1e-8);
    }

    #[test]
    fn handles_tiny_dimension() {
        let pair = lowest_eigenpair(
            |v, out| {
                out[0] = v[0] * 2.0 + v[1];
                out[1] = v[0] + v[1] * 2.0;
            },
            vec![C64::new(1.0, 0.0), C64::new(0.3, 0.0)],
            &LanczosConfig::default(),
        )
        .unwrap();
        assert!((pair.value - 1.0).abs() < 1e-12);
    }
}
