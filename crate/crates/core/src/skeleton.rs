//! Exact sampling of the bounce skeleton `(T_n, V_n)`.
//!
//! From a bounce at unit speed the pair (time to the next bounce, incoming
//! speed ratio) has the McKean density, and successive pairs are i.i.d. after
//! rescaling by the current speed. Both marginal and conditional are drawn by
//! rejection, so the skeleton is exact; only the absorption time needs a
//! truncation of its series.

use rand::Rng;
use std::f64::consts::PI;

use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::ModelParams;
use crate::error::{Error, Result};
use crate::ladder::LadderTable;
use crate::rng;
use crate::stats::{self, RobustMean};

/// Proposals allowed per draw before a rejection loop is declared broken.
pub const REJECTION_GUARD: usize = 1_000_000;

/// Truncation used when the absorption time enters a tail constant.
pub const FINE_TRUNCATION: f64 = 1e-40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Stop once `(V_n / V₀)²` drops below this.
    pub truncation_epsilon: f64,
    pub max_bounces: usize,
    pub seed: u64,
    /// Stop conditioned chains once `T_n` passes this time.
    pub horizon: Option<f64>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            truncation_epsilon: 1e-12,
            max_bounces: 100_000,
            seed: 0,
            horizon: None,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation_epsilon > 0.0 && self.truncation_epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation_epsilon must lie in (0, 1), got {}",
                self.truncation_epsilon
            )));
        }
        if self.max_bounces == 0 {
            return Err(Error::InvalidArgument("max_bounces must be at least 1".into()));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!("horizon must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

/// Bounce times and outgoing speeds of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BounceChain {
    /// `T₀ = 0 < T₁ < ...`
    pub times: Vec<f64>,
    /// Outgoing speeds `V₀ = u₀, V₁, ...`
    pub speeds: Vec<f64>,
    /// Absorption time: the last bounce time of a truncated chain. The
    /// neglected remainder is `(V_n/V₀)² V₀² ζ'` for an independent copy `ζ'`.
    pub zeta: f64,
    /// `(V_n / V₀)²` at the last bounce.
    pub truncated_weight: f64,
    /// True when a hard limit (`max_bounces`, or `f64` range for conditioned
    /// chains) stopped the chain.
    pub cap_reached: bool,
}

impl BounceChain {
    pub fn n_bounces(&self) -> usize {
        self.times.len() - 1
    }

    /// `ln V_n − ln V_{n−1}`.
    pub fn log_increments(&self) -> Vec<f64> {
        self.speeds.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
    }
}

/// One step of the skeleton from a bounce at unit speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Time to the next bounce.
    pub tau: f64,
    /// Next outgoing speed, `c` times the incoming speed.
    pub rho: f64,
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Draw from the density proportional to `v^{3/2 + 2k} / (1 + v³)`.
///
/// Proposal: `∝ v^{3/2+2k}` on `(0, 1]` and `∝ v^{2k−3/2}` on `(1, ∞)`, which
/// dominates the target with acceptance ratio `1/(1+v³)` on the left piece and
/// `v³/(1+v³)` on the right.
fn sample_tilted_ratio<R: Rng + ?Sized>(rng: &mut R, two_k: f64) -> Result<f64> {
    let left_power = 2.5 + two_k;
    let right_power = 0.5 - two_k;
    let left_mass = 1.0 / left_power;
    let p_left = left_mass / (left_mass + 1.0 / right_power);
    for _ in 0..REJECTION_GUARD {
        let u = open_unit(rng);
        if rng.random::<f64>() < p_left {
            let v = u.powf(1.0 / left_power);
            if rng.random::<f64>() * (1.0 + v * v * v) < 1.0 {
                return Ok(v);
            }
        } else {
            let v = u.powf(-1.0 / right_power);
            let v3 = v * v * v;
            if rng.random::<f64>() * (1.0 + v3) < v3 || !v3.is_finite() {
                return Ok(v);
            }
        }
    }
    Err(Error::RejectionGuard(REJECTION_GUARD))
}

/// Incoming speed ratio `V₁/c` from a bounce at unit speed.
pub fn sample_v<R: Rng + ?Sized>(rng: &mut R) -> Result<f64> {
    sample_tilted_ratio(rng, 0.0)
}

/// Speed ratio under the conditioned law: density `∝ v^{2k}` times the marginal.
pub fn sample_tilted_v<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams) -> Result<f64> {
    sample_tilted_ratio(rng, 2.0 * params.k)
}

/// Time to the next bounce given the speed ratio `v`.
///
/// Proposal `s = a/E`, `a = 2(v² − v + 1)`, `E ~ Exp(1)`, accepted with
/// probability `erf(√(6v/s))`. When `6v < a` (speed ratios below 0.27 or
/// above 3.73) that acceptance rate `√(6v/(a+6v))` degrades, and `s = a/G` with
/// `G ~ Gamma(3/2)` is used instead, accepted with probability
/// `erf(√y) √π / (2√y)`, `y = 6v/s`.
pub fn sample_t_given_v<R: Rng + ?Sized>(rng: &mut R, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!("speed ratio must be positive, got {v}")));
    }
    let a = 2.0 * (v * v - v + 1.0);
    let gamma_proposal = 6.0 * v < a;
    for _ in 0..REJECTION_GUARD {
        let e: f64 = rng.sample(Exp1);
        if gamma_proposal {
            let z: f64 = rng.sample(StandardNormal);
            let s = a / (e + 0.5 * z * z);
            let y = 6.0 * v / s;
            let ratio = if y < 1e-12 {
                1.0 - y / 3.0
            } else {
                libm::erf(y.sqrt()) * PI.sqrt() / (2.0 * y.sqrt())
            };
            if rng.random::<f64>() < ratio {
                return Ok(s);
            }
        } else {
            let s = a / e;
            if rng.random::<f64>() < libm::erf((6.0 * v / s).sqrt()) {
                return Ok(s);
            }
        }
    }
    Err(Error::RejectionGuard(REJECTION_GUARD))
}

/// One killed-law step: `rho = c · V₁/c`, `tau` from the conditional given that ratio.
pub fn sample_step<R: Rng + ?Sized>(rng: &mut R, c: f64) -> Result<Step> {
    let v = sample_v(rng)?;
    Ok(Step {
        tau: sample_t_given_v(rng, v)?,
        rho: c * v,
    })
}

/// One conditioned-law step. The tilt only reweights the speed ratio.
pub fn sample_tilted_step<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams) -> Result<Step> {
    let v = sample_tilted_v(rng, params)?;
    Ok(Step {
        tau: sample_t_given_v(rng, v)?,
        rho: params.c * v,
    })
}

fn check_speed(u0: f64) -> Result<()> {
    if u0 > 0.0 && u0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("initial speed must be positive, got {u0}")))
    }
}

/// Killed chain from a bounce at speed `u0`, run until `(V_n/u0)²` falls
/// below the truncation threshold.
pub fn simulate_chain<R: Rng + ?Sized>(rng: &mut R, c: f64, u0: f64, cfg: &ChainConfig) -> Result<BounceChain> {
    check_speed(u0)?;
    cfg.validate()?;
    let mut chain = BounceChain {
        times: vec![0.0],
        speeds: vec![u0],
        zeta: 0.0,
        truncated_weight: 1.0,
        cap_reached: false,
    };
    let (mut t, mut v) = (0.0, u0);
    loop {
        let step = sample_step(rng, c)?;
        t += v * v * step.tau;
        v *= step.rho;
        chain.times.push(t);
        chain.speeds.push(v);
        let ratio = v / u0;
        chain.truncated_weight = ratio * ratio;
        if chain.truncated_weight < cfg.truncation_epsilon {
            break;
        }
        if chain.n_bounces() >= cfg.max_bounces {
            chain.cap_reached = true;
            break;
        }
    }
    chain.zeta = t;
    Ok(chain)
}

/// Conditioned chain from a bounce at speed `u0`. It is never absorbed and
/// runs to `max_bounces` or past the configured horizon. Speeds grow
/// geometrically, so the chain also stops (with `cap_reached` set) before
/// times or squared speeds leave the range of `f64`.
pub fn simulate_tilted_chain<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ModelParams,
    u0: f64,
    cfg: &ChainConfig,
) -> Result<BounceChain> {
    check_speed(u0)?;
    cfg.validate()?;
    let horizon = cfg.horizon.unwrap_or(f64::INFINITY);
    let mut chain = BounceChain {
        times: vec![0.0],
        speeds: vec![u0],
        zeta: 0.0,
        truncated_weight: 1.0,
        cap_reached: false,
    };
    let (mut t, mut v) = (0.0, u0);
    let mut overflow = false;
    while chain.n_bounces() < cfg.max_bounces && t <= horizon {
        let step = sample_tilted_step(rng, params)?;
        let (t_next, v_next) = (t + v * v * step.tau, v * step.rho);
        if !(t_next.is_finite() && (v_next * v_next).is_finite()) {
            overflow = true;
            break;
        }
        t = t_next;
        v = v_next;
        chain.times.push(t);
        chain.speeds.push(v);
    }
    chain.cap_reached = overflow || chain.n_bounces() >= cfg.max_bounces;
    let ratio = v / u0;
    chain.truncated_weight = ratio * ratio;
    chain.zeta = t;
    Ok(chain)
}

/// Absorption time and first bounce time of a killed chain from unit speed,
/// without storing the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaDraw {
    pub zeta: f64,
    pub t1: f64,
    pub v1: f64,
    pub cap_reached: bool,
}

pub fn sample_zeta<R: Rng + ?Sized>(rng: &mut R, c: f64, cfg: &ChainConfig) -> Result<ZetaDraw> {
    let first = sample_step(rng, c)?;
    let (mut t, mut v) = (first.tau, first.rho);
    let mut n = 1;
    while v * v >= cfg.truncation_epsilon {
        if n >= cfg.max_bounces {
            return Ok(ZetaDraw {
                zeta: t,
                t1: first.tau,
                v1: first.rho,
                cap_reached: true,
            });
        }
        let step = sample_step(rng, c)?;
        t += v * v * step.tau;
        v *= step.rho;
        n += 1;
    }
    Ok(ZetaDraw {
        zeta: t,
        t1: first.tau,
        v1: first.rho,
        cap_reached: false,
    })
}

/// `n` independent unit-speed absorption draws; draw `i` uses stream `i` of `cfg.seed`.
pub fn zeta_batch(c: f64, n: usize, cfg: &ChainConfig) -> Result<Vec<ZetaDraw>> {
    cfg.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| sample_zeta(&mut rng::stream(cfg.seed, i as u64), c, cfg))
        .collect()
}

/// `n` independent steps (killed or conditioned) from streams of `seed`.
pub fn step_batch(params: &ModelParams, n: usize, seed: u64, tilted: bool) -> Result<Vec<Step>> {
    const CHUNK: usize = 4096;
    let chunks: Vec<Vec<Step>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream(seed, j as u64);
            let len = CHUNK.min(n - j * CHUNK);
            (0..len)
                .map(|_| {
                    if tilted {
                        sample_tilted_step(&mut rng, params)
                    } else {
                        sample_step(&mut rng, params.c)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C1Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Median-of-means estimate of `E[ζ^k − (ζ − T₁)^k]`.
    pub numerator: RobustMean,
    /// `k E[V₁^{2k} ln V₁²] = 2k μ↑`.
    pub denominator: f64,
}

/// The constant `C₁` of `P(ζ > t) ~ C₁ t^{-k}`:
/// `E[ζ^k − (ζ − T₁)^k] / (k E[V₁^{2k} ln V₁²])`.
pub fn estimate_c1(params: &ModelParams, n_samples: usize, seed: u64) -> Result<C1Estimate> {
    if n_samples < 1000 {
        return Err(Error::TooFewSamples {
            need: 1000,
            got: n_samples,
        });
    }
    let cfg = ChainConfig {
        truncation_epsilon: FINE_TRUNCATION,
        seed,
        ..ChainConfig::default()
    };
    c1_from_draws(params, &zeta_batch(params.c, n_samples, &cfg)?)
}

/// [`estimate_c1`] on absorption draws that are already available.
pub fn c1_from_draws(params: &ModelParams, draws: &[ZetaDraw]) -> Result<C1Estimate> {
    if draws.len() < 1000 {
        return Err(Error::TooFewSamples {
            need: 1000,
            got: draws.len(),
        });
    }
    let k = params.k;
    let terms: Vec<f64> = draws
        .iter()
        .map(|d| d.zeta.powf(k) - (d.zeta - d.t1).max(0.0).powf(k))
        .collect();
    let numerator = stats::robust_mean(&terms, stats::MOM_BLOCKS);
    let denominator = 2.0 * k * params.mu_up;
    Ok(C1Estimate {
        value: numerator.value / denominator,
        stderr: numerator.stderr / denominator,
        numerator,
        denominator,
    })
}

/// Conditioned chain seen from the first time its speed passes `v_gate`:
/// the starting speed is `v_gate · e^O` with `O` from the stationary overshoot law.
pub fn sample_stationary_start<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ModelParams,
    v_gate: f64,
    table: &LadderTable,
    cfg: &ChainConfig,
) -> Result<BounceChain> {
    if !(v_gate > 0.0) {
        return Err(Error::InvalidArgument(format!("gate speed must be positive, got {v_gate}")));
    }
    let overshoot = table.sample_overshoot(rng);
    simulate_tilted_chain(rng, params, v_gate * overshoot.exp(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{mckean_conditional_pdf, v_marginal_cdf, v_moment};
    use crate::numerics::{integrate, integrate_to_infinity, QuadOptions};
    use crate::stats::ks_test;

    #[test]
    fn v_draws_match_marginal() {
        let mut rng = rng::stream(1, 0);
        let draws: Vec<f64> = (0..100_000).map(|_| sample_v(&mut rng).unwrap()).collect();
        assert!(draws.iter().all(|&v| v > 0.0));
        let ks = ks_test(&draws, v_marginal_cdf).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");

        // median against the numerically inverted distribution function
        let median = crate::numerics::brent(|v| v_marginal_cdf(v) - 0.5, 0.1, 10.0, 1e-12, 200).unwrap();
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        assert!((sorted[50_000] - median).abs() < 0.02, "{} vs {median}", sorted[50_000]);
    }

    #[test]
    fn time_given_speed_matches_conditional() {
        let v = 1.0;
        let opts = QuadOptions::with_tol(1e-12, 1e-10);
        let pdf = |x: f64| mckean_conditional_pdf(x, v);
        let cdf = |s: f64| {
            if s <= 1.0 {
                integrate(pdf, 0.0, s, opts).unwrap().value
            } else {
                1.0 - integrate_to_infinity(pdf, s, 1.0, opts).unwrap().value
            }
        };
        let mut rng = rng::stream(2, 0);
        let draws: Vec<f64> = (0..100_000).map(|_| sample_t_given_v(&mut rng, v).unwrap()).collect();
        let ks = ks_test(&draws, cdf).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn time_given_extreme_speeds() {
        // both proposal regimes against the normalized conditional
        for (i, &v) in [0.05, 0.27, 3.8, 50.0, 1e6].iter().enumerate() {
            let opts = QuadOptions::with_tol(1e-13, 1e-10);
            let pdf = |x: f64| mckean_conditional_pdf(x, v);
            let scale = 2.0 * (v * v - v + 1.0);
            let cdf = |s: f64| {
                if s <= scale {
                    integrate(pdf, 0.0, s, opts).unwrap().value
                } else {
                    1.0 - integrate_to_infinity(|x| pdf(x * scale) * scale, s / scale, 1.0, opts).unwrap().value
                }
            };
            let mut rng = rng::stream(30 + i as u64, 0);
            let draws: Vec<f64> = (0..5000).map(|_| sample_t_given_v(&mut rng, v).unwrap()).collect();
            let ks = ks_test(&draws, cdf).unwrap();
            assert!(ks.p_value > 0.001, "v = {v}: {ks:?}");
        }
    }

    #[test]
    fn acceptance_rate_of_time_sampler_is_stable() {
        let rate = |seed: u64| {
            let mut rng = rng::stream(seed, 0);
            let n = 200_000;
            let mut accepted = 0;
            for _ in 0..n {
                let e: f64 = rng.sample(Exp1);
                let s = 2.0 / e;
                if rng.random::<f64>() < libm::erf((6.0 / s).sqrt()) {
                    accepted += 1;
                }
            }
            accepted as f64 / n as f64
        };
        // exact rate at v = 1: E[erf(√(3E))] with E ~ Exp(1), which is √(3/4)
        let exact = 0.75f64.sqrt();
        for seed in 0..3 {
            assert!((rate(seed) - exact).abs() < 0.01 * exact);
        }
    }

    #[test]
    fn step_moments() {
        let p = ModelParams::reference();
        let steps = step_batch(&p, 1_000_000, 3, false).unwrap();
        let tilt: Vec<f64> = steps.iter().map(|s| s.rho.powf(2.0 * p.k)).collect();
        let m = stats::robust_mean(&tilt, stats::MOM_BLOCKS);
        assert!((m.value - 1.0).abs() < 3.0 * m.stderr, "{m:?}");
        let logs: Vec<f64> = steps.iter().map(|s| s.rho.ln()).collect();
        let (mean, se) = stats::mean_and_stderr(&logs);
        assert!((mean - p.drift).abs() < 3.0 * se, "{mean} vs {}", p.drift);
    }

    #[test]
    fn tau_tail_slope() {
        let p = ModelParams::reference();
        let steps = step_batch(&p, 100_000, 4, false).unwrap();
        let taus: Vec<f64> = steps.iter().map(|s| s.tau).collect();
        let fit = stats::tail_exponent_loglog(&taus, 0.1, 0.001).unwrap();
        assert!((fit.exponent - 0.25).abs() < 0.03, "{fit:?}");
    }

    #[test]
    fn tilted_draws_invert_the_tilt() {
        let p = ModelParams::reference();
        let killed = step_batch(&p, 1_000_000, 5, false).unwrap();
        let tilted = step_batch(&p, 1_000_000, 6, true).unwrap();
        let g = |rho: f64| if rho > p.c { 1.0 } else { 0.0 };
        let a: Vec<f64> = killed.iter().map(|s| g(s.rho)).collect();
        let b: Vec<f64> = tilted.iter().map(|s| g(s.rho) * s.rho.powf(-2.0 * p.k)).collect();
        let (ma, sa) = stats::mean_and_stderr(&a);
        let (mb, sb) = stats::mean_and_stderr(&b);
        assert!((ma - mb).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{ma} vs {mb}");
        assert!((ma - (1.0 - v_marginal_cdf(1.0))).abs() < 3.0 * sa);

        let q = |mut x: Vec<f64>| {
            x.sort_by(f64::total_cmp);
            x[(0.999 * x.len() as f64) as usize]
        };
        let qk = q(killed.iter().map(|s| s.rho).collect());
        let qt = q(tilted.iter().map(|s| s.rho).collect());
        assert!(qt > qk);
        assert!(tilted.iter().all(|s| s.rho > 0.0));
    }

    #[test]
    fn tilted_log_speed_drift() {
        let p = ModelParams::reference();
        let steps = step_batch(&p, 100_000, 7, true).unwrap();
        let logs: Vec<f64> = steps.iter().map(|s| s.rho.ln()).collect();
        let (mean, se) = stats::mean_and_stderr(&logs);
        assert!((mean - p.mu_up).abs() < 3.0 * se, "{mean} vs {}", p.mu_up);
    }

    #[test]
    fn denominator_matches_monte_carlo() {
        let p = ModelParams::reference();
        let steps = step_batch(&p, 1_000_000, 8, false).unwrap();
        let terms: Vec<f64> = steps
            .iter()
            .map(|s| s.rho.powf(2.0 * p.k) * (s.rho * s.rho).ln())
            .collect();
        let m = stats::robust_mean(&terms, stats::MOM_BLOCKS);
        assert!((m.value - 2.0 * p.mu_up).abs() < 3.0 * m.stderr, "{m:?} vs {}", 2.0 * p.mu_up);
        // the same number as the derivative of the moment formula at 2k
        let h = 1e-5;
        let deriv = (v_moment(p.c, 2.0 * p.k + h).unwrap() - v_moment(p.c, 2.0 * p.k - h).unwrap()) / (2.0 * h);
        assert!((2.0 * deriv - 2.0 * p.mu_up).abs() < 1e-6);
    }

    #[test]
    fn chain_invariants_and_determinism() {
        let c = ModelParams::reference().c;
        let cfg = ChainConfig::default();
        let a = simulate_chain(&mut rng::stream(9, 0), c, 2.0, &cfg).unwrap();
        let b = simulate_chain(&mut rng::stream(9, 0), c, 2.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.speeds.iter().all(|&v| v > 0.0));
        assert!(a.times.windows(2).all(|w| w[1] > w[0]));
        assert!(a.zeta >= *a.times.last().unwrap());
        assert!(a.truncated_weight < cfg.truncation_epsilon);
        assert!(!a.cap_reached);
    }

    #[test]
    fn single_bounce_chain() {
        let c = ModelParams::reference().c;
        let cfg = ChainConfig {
            max_bounces: 1,
            truncation_epsilon: 1.0 - 1e-15,
            ..ChainConfig::default()
        };
        let mut rng = rng::stream(10, 0);
        let chain = simulate_chain(&mut rng, c, 3.0, &cfg).unwrap();
        let mut replay = rng::stream(10, 0);
        let step = sample_step(&mut replay, c).unwrap();
        assert_eq!(chain.n_bounces(), 1);
        assert!((chain.zeta - 9.0 * step.tau).abs() < 1e-12 * chain.zeta);
    }

    #[test]
    fn config_validation() {
        let bad = ChainConfig {
            truncation_epsilon: 1.0,
            ..ChainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ChainConfig {
            max_bounces: 0,
            ..ChainConfig::default()
        };
        assert!(bad.validate().is_err());
        let c = ModelParams::reference().c;
        assert!(simulate_chain(&mut rng::stream(0, 0), c, 0.0, &ChainConfig::default()).is_err());
    }

    #[test]
    fn zeta_scaling_in_initial_speed() {
        let c = ModelParams::reference().c;
        let cfg = ChainConfig::default();
        let z1: Vec<f64> = (0..10_000)
            .map(|i| simulate_chain(&mut rng::stream(11, i), c, 1.0, &cfg).unwrap().zeta)
            .collect();
        let z3: Vec<f64> = (0..10_000)
            .map(|i| simulate_chain(&mut rng::stream(12, i), c, 3.0, &cfg).unwrap().zeta / 9.0)
            .collect();
        assert!(stats::ks_two_sample(&z1, &z3).unwrap().p_value > 0.01);
    }

    #[test]
    fn tilted_chain_drifts_up() {
        let p = ModelParams::reference();
        // speeds grow like e^{0.82 n}; 400 bounces stay inside f64 range
        let cfg = ChainConfig {
            max_bounces: 400,
            ..ChainConfig::default()
        };
        let chain = simulate_tilted_chain(&mut rng::stream(13, 0), &p, 1.0, &cfg).unwrap();
        assert!(chain.speeds.iter().all(|v| v.is_finite()));
        let (mean, se) = stats::mean_and_stderr(&chain.log_increments());
        assert!((mean - p.mu_up).abs() < 3.0 * se, "{mean}");

        // the same walk over 10⁴ steps, followed in log space
        let escapes = (0..100)
            .filter(|&i| {
                let incs = crate::ladder::walk_increments(&mut rng::stream(14, i), &p, 10_000, true).unwrap();
                let mut s = 0.0;
                let path: Vec<f64> = incs
                    .iter()
                    .map(|x| {
                        s += x;
                        s
                    })
                    .collect();
                path[5000..].iter().all(|&v| v > 0.0)
            })
            .count();
        assert!(escapes >= 99);
    }

    #[test]
    fn tilted_chain_stops_before_overflow() {
        let p = ModelParams::reference();
        let cfg = ChainConfig {
            max_bounces: 10_000,
            ..ChainConfig::default()
        };
        let chain = simulate_tilted_chain(&mut rng::stream(15, 0), &p, 1.0, &cfg).unwrap();
        assert!(chain.n_bounces() < 10_000);
        assert!(chain.speeds.iter().chain(&chain.times).all(|v| v.is_finite()));
        assert!(chain.cap_reached);
    }
}
