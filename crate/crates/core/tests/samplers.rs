//! Statistical and reproducibility properties of the samplers and the
//! Monte Carlo estimator, checked against the exact oracle.

use std::f64::consts::LN_2;

use magiclab::estimate::sample_stats;
use magiclab::hybrid::{sample_log_expectations, HybridSampler, SamplingMode};
use magiclab::models::{clifford_t_state, CliffordTSpec};
use magiclab::monte_carlo::{estimate_b, mh_chain, McConfig, Prior};
use magiclab::mps::MatrixProductState;
use magiclab::mps_sampler::{estimate_m1_mps, sample_log_expectations_mps, AncestralSampler};
use magiclab::oracle::{b_term, pure_moments, PauliSpectrum};
use magiclab::rng::stream_rng;
use magiclab::{DenseState, PauliString, Region};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn random_mps(n: usize, chi: usize, seed: u64) -> MatrixProductState {
    MatrixProductState::random(n, chi, &mut stream_rng(seed, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn log_expectation_variance_is_bounded(seed in any::<u64>(), n in 2usize..8) {
        let bound = (n * n) as f64 * LN_2 * LN_2 + 1.0;
        let dense = DenseState::haar_random(n, &mut stream_rng(seed, 0)).unwrap();
        let v = sample_stats(&sample_log_expectations(&dense, 4000, seed).unwrap()).unwrap().variance;
        prop_assert!(v <= bound, "hybrid {v} > {bound}");
        let mps = random_mps(n, 4, seed);
        let v = sample_stats(&sample_log_expectations_mps(&mps, 4000, seed).unwrap()).unwrap().variance;
        prop_assert!(v <= bound, "mps {v} > {bound}");
    }

    #[test]
    fn draws_do_not_depend_on_thread_count(seed in any::<u64>()) {
        let dense = DenseState::haar_random(6, &mut stream_rng(seed, 0)).unwrap();
        let sampler = HybridSampler::new(&dense, SamplingMode::Pauli).unwrap();
        let one = in_pool(1, || sampler.sample_batch(seed, 300).unwrap());
        let four = in_pool(4, || sampler.sample_batch(seed, 300).unwrap());
        prop_assert_eq!(one, four);
        let mps = AncestralSampler::new(&random_mps(8, 4, seed)).unwrap();
        let one: Vec<PauliString> = in_pool(1, || mps.sample_batch(seed, 300).unwrap()).into_iter().map(|d| d.pauli).collect();
        let four: Vec<PauliString> = in_pool(4, || mps.sample_batch(seed, 300).unwrap()).into_iter().map(|d| d.pauli).collect();
        prop_assert_eq!(one, four);
    }
}

#[test]
fn reported_stderr_tracks_capacity() {
    let mps = random_mps(6, 4, 17);
    let capacity = PauliSpectrum::from_state(&mps.to_dense().unwrap())
        .unwrap()
        .magic_capacity()
        .unwrap();
    let k = 4000;
    let expected = (capacity / k as f64).sqrt();
    for rep in 0..20 {
        let r = estimate_m1_mps(&mps, k, 1000 + rep, false).unwrap();
        let ratio = r.stderr / expected;
        assert!((0.8..=1.25).contains(&ratio), "rep {rep}: ratio {ratio}");
    }
}

#[test]
fn doping_raises_average_m2() {
    let (n, seeds) = (6, 50);
    let mut previous: Option<(f64, f64)> = None;
    for n_t in 0..=8 {
        let values: Vec<f64> = (0..seeds)
            .map(|s| {
                pure_moments(
                    &clifford_t_state(&CliffordTSpec {
                        n_qubits: n,
                        n_t,
                        seed: s,
                    })
                    .unwrap(),
                )
                .unwrap()
                .m2
            })
            .collect();
        let stats = sample_stats(&values).unwrap();
        if let Some((mean, err)) = previous {
            let sigma = (err * err + stats.stderr_mean * stats.stderr_mean).sqrt();
            assert!(
                stats.mean >= mean - 2.0 * sigma,
                "N_T = {n_t}: {} < {mean}",
                stats.mean
            );
        }
        previous = Some((stats.mean, stats.stderr_mean));
    }
}

#[test]
fn jackknife_error_covers_oracle_b() {
    let mps = random_mps(6, 4, 5);
    let dense = mps.to_dense().unwrap();
    let (a, b) = (
        Region::interval(6, 0, 3).unwrap(),
        Region::interval(6, 3, 6).unwrap(),
    );
    let exact = b_term(&dense, &a, &b).unwrap();
    let covered = (0..100)
        .filter(|&rep| {
            let cfg = McConfig::new(Prior::PerfectP, 2000, 7000 + rep, a.clone(), b.clone());
            let r = estimate_b(&mps, &cfg).unwrap();
            (r.value - exact).abs() <= 1.96 * r.stderr
        })
        .count();
    assert!(covered >= 90, "covered {covered}/100");
}

/// χ² test of the visited-state histogram against `Π` for a single magic
/// qubit next to a `|0⟩` spectator.
#[test]
fn one_qubit_chain_is_stationary_on_pi() {
    let c = |re: f64, im: f64| num_complex::Complex64::new(re, im);
    let (theta, phi) = (0.7f64, 0.4f64);
    let qubit = [
        c((theta / 2.0).cos(), 0.0),
        c(
            (theta / 2.0).sin() * phi.cos(),
            (theta / 2.0).sin() * phi.sin(),
        ),
    ];
    let mps = MatrixProductState::product(&[qubit, [c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
    let pi = PauliSpectrum::from_state(&mps.to_dense().unwrap())
        .unwrap()
        .pi_distribution();
    let cfg = McConfig::new(
        Prior::PerfectP,
        1_000_000,
        3,
        Region::new(2, vec![0]).unwrap(),
        Region::new(2, vec![1]).unwrap(),
    );
    let (samples, _) = mh_chain(&mps, &cfg).unwrap();
    let mut counts = vec![0f64; pi.len()];
    for p in &samples {
        counts[p.index().unwrap() as usize] += 1.0;
    }
    for (o, p) in counts.iter().zip(&pi) {
        if *p == 0.0 {
            assert_eq!(*o, 0.0);
        }
    }
    // Consecutive states are correlated, so the statistic is deflated by the
    // integrated autocorrelation time.
    let k = samples.len() as f64;
    let chi2: f64 = counts
        .iter()
        .zip(&pi)
        .filter(|(_, &p)| p > 0.0)
        .map(|(o, p)| (o - k * p).powi(2) / (k * p))
        .sum();
    let dof = pi.iter().filter(|&&p| p > 0.0).count() - 1;
    let tau = integrated_autocorrelation(&samples);
    let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(chi2 / tau);
    assert!(p_value > 1e-3, "chi2 {chi2}, tau {tau}, p {p_value}");
}

fn integrated_autocorrelation(samples: &[PauliString]) -> f64 {
    let x: Vec<f64> = samples.iter().map(|p| p.index().unwrap() as f64).collect();
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let mut tau = 1.0;
    for lag in 1..50 {
        let rho = (0..n - lag)
            .map(|i| (x[i] - mean) * (x[i + lag] - mean))
            .sum::<f64>()
            / ((n - lag) as f64 * var);
        if rho < 0.01 {
            break;
        }
        tau += 2.0 * rho;
    }
    tau
}

/// Exact acceptance rate and lag-1 autocorrelation of `ln p(P)` for the
/// independence sampler with proposal `p` and target `Π ∝ p²`.
fn exact_chain_statistics(p: &[f64], pi: &[f64]) -> (f64, f64) {
    let support: Vec<usize> = (0..p.len()).filter(|&x| pi[x] > 0.0).collect();
    let g: Vec<f64> = p
        .iter()
        .map(|v| if *v > 0.0 { v.ln() } else { 0.0 })
        .collect();
    let mean: f64 = support.iter().map(|&x| pi[x] * g[x]).sum();
    let var: f64 = support.iter().map(|&x| pi[x] * (g[x] - mean).powi(2)).sum();
    let (mut acceptance, mut cov) = (0.0, 0.0);
    for &x in &support {
        let (mut stay, mut kg) = (1.0, 0.0);
        for &y in &support {
            let move_prob = p[y] * (p[y] / p[x]).min(1.0);
            stay -= move_prob;
            kg += move_prob * g[y];
        }
        kg += stay * g[x];
        acceptance += pi[x] * (1.0 - stay);
        cov += pi[x] * (g[x] - mean) * (kg - mean);
    }
    (acceptance, cov / var)
}

#[test]
fn perfect_prior_chain_matches_exact_kernel() {
    let (a, b) = (
        Region::interval(6, 0, 3).unwrap(),
        Region::interval(6, 3, 6).unwrap(),
    );
    for seed in 0..3 {
        let mps = random_mps(6, 2, 40 + seed);
        let spectrum = PauliSpectrum::from_state(&mps.to_dense().unwrap()).unwrap();
        let (p, pi) = (spectrum.p(), spectrum.pi_distribution());
        let (acceptance, lag1_exact) = exact_chain_statistics(&p, &pi);
        let cfg = McConfig::new(Prior::PerfectP, 40_000, seed, a.clone(), b.clone());
        let (samples, diag) = mh_chain(&mps, &cfg).unwrap();
        let g: Vec<f64> = samples
            .iter()
            .map(|s| p[s.index().unwrap() as usize].ln())
            .collect();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let var = g.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let lag1 = g
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / var;
        assert!(
            (diag.acceptance_rate - acceptance).abs() < 0.01,
            "seed {seed}: {} vs {acceptance}",
            diag.acceptance_rate
        );
        assert!(
            (lag1 - lag1_exact).abs() < 0.03,
            "seed {seed}: lag-1 {lag1} vs {lag1_exact}"
        );
    }
}
