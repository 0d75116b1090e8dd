//! Estimators and goodness-of-fit tests used by the verification suite.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Bootstrap replicates used by the tail fits.
pub const BOOTSTRAP_REPS: usize = 200;

/// Blocks used for median-of-means estimates of heavy-tailed moments.
pub const MOM_BLOCKS: usize = 32;

const BOOTSTRAP_SEED: u64 = 0x7a11_f17;

/// Largest number of order statistics entering one regression. Ranks are
/// thinned on a log scale so each decade of the survival curve weighs the same.
const MAX_FIT_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        // the alternating series converges slowly here; the value is 1 to 1e-15
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let root = n_eff.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * d)
}

/// One-sample Kolmogorov–Smirnov test against a continuous distribution function.
pub fn ks_test<F>(samples: &[f64], cdf: F) -> Result<KsResult>
where
    F: Fn(f64) -> f64,
{
    if samples.len() < 20 {
        return Err(Error::TooFewSamples {
            need: 20,
            got: samples.len(),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let need = 20;
    for s in [a, b] {
        if s.len() < need {
            return Err(Error::TooFewSamples { need, got: s.len() });
        }
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    })
}

/// Result of a log-log regression of the empirical survival function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// `α` in `P(X > t) ≈ C t^{-α}`.
    pub exponent: f64,
    /// `C` in `P(X > t) ≈ C t^{-α}`.
    pub prefactor: f64,
    /// Survival levels `(q_lo, q_hi)` bounding the window, `q_lo > q_hi`.
    pub fit_range: (f64, f64),
    /// Bootstrap standard error of the exponent.
    pub stderr: f64,
    /// Set when the deep half of the window is markedly steeper than the
    /// shallow half: the tail is probably not a power law there.
    pub curvature_flag: bool,
}

/// Sorted (descending) copy of positive samples.
fn descending(samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "tail samples must be positive and finite, found {bad}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted)
}

/// Log-spaced subset of the 1-based ranks `lo..=hi`.
fn log_ranks(lo: usize, hi: usize) -> Vec<usize> {
    if hi < lo {
        return Vec::new();
    }
    if hi - lo < MAX_FIT_POINTS {
        return (lo..=hi).collect();
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut ranks: Vec<usize> = (0..MAX_FIT_POINTS)
        .map(|i| (a + (b - a) * i as f64 / (MAX_FIT_POINTS - 1) as f64).exp().round() as usize)
        .map(|r| r.clamp(lo, hi))
        .collect();
    ranks.dedup();
    ranks
}

/// Least-squares line `y = a + b x`.
fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 3 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// Least-squares slope of `ys` on `xs`; NaN with fewer than three points.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let points: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    least_squares(&points).map_or(f64::NAN, |(_, b)| b)
}

/// `(ln t, ln S)` at the given ranks of a descending sample of a population of size `n`.
fn survival_points(desc: &[f64], n: usize, ranks: &[usize]) -> Vec<(f64, f64)> {
    ranks
        .iter()
        .filter(|&&r| r >= 1 && r <= desc.len())
        .map(|&r| (desc[r - 1].ln(), (r as f64 / n as f64).ln()))
        .collect()
}

/// Rank window `[i_lo, i_hi]` (1-based, in a sample of size `n`) for survival levels `q_hi < q_lo`.
fn rank_window(n: usize, q_lo: f64, q_hi: f64) -> (usize, usize) {
    let lo = ((q_hi * n as f64).ceil() as usize).max(1);
    let hi = (q_lo * n as f64).floor() as usize;
    (lo, hi.min(n))
}

fn check_levels(q_lo: f64, q_hi: f64) -> Result<()> {
    if !(0.0 < q_hi && q_hi < q_lo && q_lo < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "survival window needs 0 < q_hi < q_lo < 1 (got q_lo = {q_lo}, q_hi = {q_hi})"
        )));
    }
    Ok(())
}

/// Resample the top `m` order statistics of a size-`n` sample, as they would
/// appear in an ordinary case bootstrap of the whole sample.
fn bootstrap_top<R: Rng>(rng: &mut R, desc: &[f64], n: usize, m: usize) -> Vec<f64> {
    let count = if m >= n {
        n as u64
    } else {
        Binomial::new(n as u64, m as f64 / n as f64)
            .expect("valid binomial")
            .sample(rng)
    };
    let mut top: Vec<f64> = (0..count).map(|_| desc[rng.random_range(0..m)]).collect();
    top.sort_by(|a, b| b.total_cmp(a));
    top
}

/// Survival-curve regression over order statistics selected by `ranks(desc, n)`,
/// with bootstrap over the top `m` values.
fn fit_with_bootstrap<S>(desc: &[f64], n: usize, m: usize, select: S) -> Result<(f64, f64, f64)>
where
    S: Fn(&[f64]) -> Vec<usize> + Sync,
{
    let ranks = select(desc);
    let points = survival_points(desc, n, &ranks);
    let (intercept, slope) = least_squares(&points).ok_or(Error::EmptyWindow(points.len()))?;
    let slopes: Vec<f64> = (0..BOOTSTRAP_REPS)
        .into_par_iter()
        .filter_map(|rep| {
            let mut rng = rng::stream(BOOTSTRAP_SEED, rep as u64);
            let top = bootstrap_top(&mut rng, desc, n, m);
            least_squares(&survival_points(&top, n, &select(&top))).map(|(_, b)| b)
        })
        .collect();
    Ok((intercept, slope, std_dev(&slopes)))
}

/// Log-log regression of the empirical survival function on the survival-level
/// window `[q_hi, q_lo]`, with a 200-replicate bootstrap standard error.
pub fn tail_exponent_loglog(samples: &[f64], q_lo: f64, q_hi: f64) -> Result<TailFit> {
    check_levels(q_lo, q_hi)?;
    if samples.len() < 1000 {
        return Err(Error::TooFewSamples {
            need: 1000,
            got: samples.len(),
        });
    }
    let desc = descending(samples)?;
    let n = desc.len();
    let (lo, hi) = rank_window(n, q_lo, q_hi);
    let m = (2 * hi + 100).min(n);
    let (intercept, slope, stderr) = fit_with_bootstrap(&desc, n, m, |d| log_ranks(lo, hi.min(d.len())))?;

    // compare the two halves of the window (split at the geometric middle rank)
    let mid = ((lo as f64) * (hi as f64)).sqrt().round() as usize;
    let deep = least_squares(&survival_points(&desc, n, &log_ranks(lo, mid)));
    let shallow = least_squares(&survival_points(&desc, n, &log_ranks(mid, hi)));
    let curvature_flag = match (deep, shallow) {
        (Some((_, d)), Some((_, s))) => (s - d) > 0.2 * (-slope).abs() + 3.0 * stderr,
        _ => false,
    };
    Ok(TailFit {
        exponent: -slope,
        prefactor: intercept.exp(),
        fit_range: (q_lo, q_hi),
        stderr,
        curvature_flag,
    })
}

/// Log-log slope of the empirical survival function restricted to values in
/// `[t_lo, t_hi]`, for fits over a fixed range of the variable itself.
///
/// Values above `t_hi` only enter through their count, so samples censored
/// at any level `≥ t_hi` can be passed as they are.
pub fn survival_slope_on_range(samples: &[f64], t_lo: f64, t_hi: f64) -> Result<TailFit> {
    if !(0.0 < t_lo && t_lo < t_hi) {
        return Err(Error::InvalidArgument(format!(
            "range needs 0 < t_lo < t_hi (got {t_lo}, {t_hi})"
        )));
    }
    let desc = descending(samples)?;
    let n = desc.len();
    let in_range = |d: &[f64]| {
        let first = d.partition_point(|&x| x > t_hi) + 1;
        let last = d.partition_point(|&x| x >= t_lo);
        log_ranks(first, last)
    };
    let above_lo = desc.partition_point(|&x| x >= t_lo);
    let m = (above_lo + above_lo / 2 + 100).min(n);
    let (intercept, slope, stderr) = fit_with_bootstrap(&desc, n, m, in_range)?;
    let level = |t: f64| desc.partition_point(|&x| x >= t) as f64 / n as f64;
    Ok(TailFit {
        exponent: -slope,
        prefactor: intercept.exp(),
        fit_range: (level(t_lo), level(t_hi)),
        stderr,
        curvature_flag: false,
    })
}

/// Prefactor `C` of `P(X > t) ≈ C t^{-α}` for a known exponent `α`: the
/// geometric mean of `t^α S(t)` over the survival window, with bootstrap error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefactorFit {
    pub prefactor: f64,
    pub stderr: f64,
}

pub fn fixed_exponent_prefactor(samples: &[f64], exponent: f64, q_lo: f64, q_hi: f64) -> Result<PrefactorFit> {
    check_levels(q_lo, q_hi)?;
    let desc = descending(samples)?;
    let n = desc.len();
    let (lo, hi) = rank_window(n, q_lo, q_hi);
    let estimate = |d: &[f64]| -> Option<f64> {
        let pts = survival_points(d, n, &log_ranks(lo, hi.min(d.len())));
        if pts.is_empty() {
            return None;
        }
        let mean = pts.iter().map(|(lt, ls)| ls + exponent * lt).sum::<f64>() / pts.len() as f64;
        Some(mean.exp())
    };
    let prefactor = estimate(&desc).ok_or(Error::EmptyWindow(0))?;
    let m = (2 * hi + 100).min(n);
    let reps: Vec<f64> = (0..BOOTSTRAP_REPS)
        .into_par_iter()
        .filter_map(|rep| {
            let mut rng = rng::stream(BOOTSTRAP_SEED ^ 1, rep as u64);
            estimate(&bootstrap_top(&mut rng, &desc, n, m))
        })
        .collect();
    Ok(PrefactorFit {
        prefactor,
        stderr: std_dev(&reps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub alpha: f64,
    pub stderr: f64,
    pub n_tail: usize,
}

/// Hill estimator of the tail index on the top `top_fraction` of the sample.
pub fn hill_estimator(samples: &[f64], top_fraction: f64) -> Result<HillEstimate> {
    if !(top_fraction > 0.0 && top_fraction <= 0.1) {
        return Err(Error::InvalidArgument(format!(
            "top fraction must lie in (0, 0.1], got {top_fraction}"
        )));
    }
    let desc = descending(samples)?;
    let k = (top_fraction * desc.len() as f64).floor() as usize;
    if k < 10 || k >= desc.len() {
        return Err(Error::TooFewSamples { need: 10, got: k });
    }
    let threshold = desc[k].ln();
    let mean_excess = desc[..k].iter().map(|x| x.ln() - threshold).sum::<f64>() / k as f64;
    let alpha = 1.0 / mean_excess;
    Ok(HillEstimate {
        alpha,
        stderr: alpha / (k as f64).sqrt(),
        n_tail: k,
    })
}

fn block_means(samples: &[f64], n_blocks: usize) -> Vec<f64> {
    let n = samples.len();
    let blocks = n_blocks.clamp(1, n.max(1));
    (0..blocks)
        .map(|j| {
            let block = &samples[j * n / blocks..(j + 1) * n / blocks];
            block.iter().sum::<f64>() / block.len() as f64
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median of the means of `n_blocks` contiguous blocks.
pub fn median_of_means(samples: &[f64], n_blocks: usize) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    median(&mut block_means(samples, n_blocks))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustMean {
    pub value: f64,
    pub stderr: f64,
}

/// Median of means with the standard error of a median of `B` block means,
/// `√(π/2) · sd(block means) / √B`.
pub fn robust_mean(samples: &[f64], n_blocks: usize) -> RobustMean {
    let mut means = block_means(samples, n_blocks);
    let spread = std_dev(&means);
    let b = means.len() as f64;
    RobustMean {
        value: median(&mut means),
        stderr: (std::f64::consts::FRAC_PI_2).sqrt() * spread / b.sqrt(),
    }
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (mean, std_dev(samples) / n.sqrt())
}

/// Sample standard deviation (`n − 1` denominator); zero for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Pearson correlation coefficient.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn pareto(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng::stream(seed, 0);
        (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect()
    }

    #[test]
    fn kolmogorov_survival_values() {
        // reference values of the limiting distribution
        assert!((kolmogorov_survival(1.0) - 0.269_999_671_677_355_4).abs() < 1e-12);
        assert!((kolmogorov_survival(1.358_1) - 0.05).abs() < 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(5.0) < 1e-20);
    }

    #[test]
    fn ks_uniform_null_and_degenerate() {
        let mut rng = rng::stream(11, 0);
        let u: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let r = ks_test(&u, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");

        let n = 200;
        let quantiles: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let r = ks_test(&quantiles, |x| x).unwrap();
        assert!(r.statistic <= 1.0 / (n + 1) as f64 + 1e-12);

        let constant = vec![0.5; 100];
        assert!(ks_test(&constant, |x| x).unwrap().p_value < 1e-10);
        assert!(matches!(ks_test(&[0.1; 5], |x| x), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn ks_two_sample_detects_shift() {
        let mut rng = rng::stream(12, 0);
        let a: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let c: Vec<f64> = b.iter().map(|x| x + 0.2).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
    }

    #[test]
    fn ks_p_values_are_calibrated() {
        let below = (0..500u64)
            .into_par_iter()
            .filter(|&seed| {
                let mut rng = rng::stream(seed, 99);
                let u: Vec<f64> = (0..500).map(|_| rng.random()).collect();
                ks_test(&u, |x| x).unwrap().p_value < 0.05
            })
            .count();
        let frac = below as f64 / 500.0;
        assert!((0.03..=0.08).contains(&frac), "{frac}");
    }

    #[test]
    fn pareto_tail_fit() {
        let x = pareto(0.25, 100_000, 3);
        let fit = tail_exponent_loglog(&x, 0.1, 0.001).unwrap();
        assert!((fit.exponent - 0.25).abs() < 0.02, "{fit:?}");
        assert!((fit.prefactor - 1.0).abs() < 0.1, "{fit:?}");
        assert!(fit.stderr > 0.0 && fit.stderr < 0.02);
        assert!(!fit.curvature_flag);
    }

    #[test]
    fn exponential_tail_is_flagged() {
        let mut rng = rng::stream(4, 0);
        let x: Vec<f64> = (0..100_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let fit = tail_exponent_loglog(&x, 0.1, 0.001).unwrap();
        let deeper = tail_exponent_loglog(&x, 0.01, 0.0001).unwrap();
        assert!(deeper.exponent > fit.exponent);
        assert!(fit.curvature_flag);
    }

    #[test]
    fn tail_fit_scaling() {
        let x = pareto(0.25, 20_000, 5);
        let a = 7.5;
        let y: Vec<f64> = x.iter().map(|v| a * v).collect();
        let fx = tail_exponent_loglog(&x, 0.1, 0.001).unwrap();
        let fy = tail_exponent_loglog(&y, 0.1, 0.001).unwrap();
        assert!((fx.exponent - fy.exponent).abs() < 1e-10);
        assert!((fy.prefactor / fx.prefactor - a.powf(fx.exponent)).abs() < 1e-9);
    }

    #[test]
    fn window_errors() {
        let x = pareto(0.5, 2000, 1);
        assert!(matches!(tail_exponent_loglog(&x, 0.001, 0.1), Err(Error::InvalidArgument(_))));
        assert!(matches!(tail_exponent_loglog(&x, 0.1, 0.0999), Err(Error::EmptyWindow(_))));
        assert!(matches!(tail_exponent_loglog(&x[..500], 0.1, 0.001), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn range_slope_matches_pareto_and_ignores_censoring() {
        let x = pareto(0.1, 50_000, 8);
        let fit = survival_slope_on_range(&x, 10.0, 1e3).unwrap();
        assert!((fit.exponent - 0.1).abs() < 0.02, "{fit:?}");
        let censored: Vec<f64> = x.iter().map(|v| v.min(1e4)).collect();
        let again = survival_slope_on_range(&censored, 10.0, 1e3).unwrap();
        assert_eq!(fit.exponent, again.exponent);
    }

    #[test]
    fn prefactor_at_known_exponent() {
        let x: Vec<f64> = pareto(0.25, 100_000, 9).iter().map(|v| 3.0 * v).collect();
        let p = fixed_exponent_prefactor(&x, 0.25, 0.1, 0.001).unwrap();
        assert!((p.prefactor - 3f64.powf(0.25)).abs() < 4.0 * p.stderr + 0.01, "{p:?}");
    }

    #[test]
    fn hill_on_pareto() {
        let x = pareto(0.25, 100_000, 6);
        let h = hill_estimator(&x, 0.01).unwrap();
        assert!((h.alpha - 0.25).abs() < 3.0 * h.stderr, "{h:?}");
        let y: Vec<f64> = x.iter().map(|v| 42.0 * v).collect();
        assert!((hill_estimator(&y, 0.01).unwrap().alpha - h.alpha).abs() < 1e-9);
        assert!(hill_estimator(&x, 1.0 / x.len() as f64).is_err());
        assert!(hill_estimator(&x, 0.5).is_err());
    }

    #[test]
    fn loglog_and_hill_agree() {
        for (i, alpha) in [0.1, 0.25, 0.5].into_iter().enumerate() {
            let x = pareto(alpha, 100_000, 20 + i as u64);
            let fit = tail_exponent_loglog(&x, 0.1, 0.001).unwrap();
            let hill = hill_estimator(&x, 0.01).unwrap();
            let joint = (fit.stderr.powi(2) + hill.stderr.powi(2)).sqrt();
            assert!((fit.exponent - hill.alpha).abs() < 2.0 * joint, "α = {alpha}: {fit:?} {hill:?}");
        }
    }

    #[test]
    fn median_of_means_cases() {
        assert_eq!(median_of_means(&[2.5; 100], 32), 2.5);
        let x = [1.0, 2.0, 3.0, 10.0];
        assert_eq!(median_of_means(&x, 1), 4.0);
        let mut rng = rng::stream(13, 0);
        let z: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(median_of_means(&z, MOM_BLOCKS).abs() < 0.01);
        let r = robust_mean(&z, MOM_BLOCKS);
        assert!(r.stderr > 0.0005 && r.stderr < 0.003, "{r:?}");
    }
}
