//! The acceptance suite: ten numerical checks of the model at one elasticity.
//!
//! Each check returns a [`CriterionResult`] with the measured headline number,
//! the tolerance it is held to and the wall time it took. The CLI `verify`
//! command and the `acceptance` test both run [`run_suite`].

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytic::{self, ModelParams};
use crate::error::Result;
use crate::ladder::{self, LadderTable};
use crate::path::{self, PathConfig};
use crate::rng;
use crate::skeleton::{self, ChainConfig, FINE_TRUNCATION};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Quick,
    Full,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quick" => Ok(Suite::Quick),
            "full" => Ok(Suite::Full),
            other => Err(format!("unknown suite '{other}' (expected quick or full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub c: f64,
    pub seed: u64,
    pub suite: Suite,
    /// Replaces every Monte Carlo sample size when set.
    pub n: Option<usize>,
    /// Use this exponent instead of `k(c)` (negative control).
    pub k_override: Option<f64>,
}

impl VerifySettings {
    pub fn new(suite: Suite) -> Self {
        Self {
            c: ModelParams::reference().c,
            seed: 20_240_601,
            suite,
            n: None,
            k_override: None,
        }
    }

    fn size(&self, full: usize, quick: usize) -> usize {
        self.n.unwrap_or(match self.suite {
            Suite::Full => full,
            Suite::Quick => quick,
        })
    }

    fn seed_for(&self, criterion: u64) -> u64 {
        rng::derive_seed(self.seed, criterion)
    }

    /// Model parameters, with the exponent replaced if requested.
    pub fn params(&self) -> Result<ModelParams> {
        let mut p = ModelParams::new(self.c)?;
        if let Some(k) = self.k_override {
            p.k = k;
            p.theta = (2.0 * k).exp();
            p.mu_up = analytic::mu_up(&p);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    /// The quantity under test, as a formula.
    pub anchor: String,
    pub measured: f64,
    pub tolerance: String,
    pub passed: bool,
    pub seconds: f64,
    /// Secondary measurements, human readable.
    pub details: String,
}

impl CriterionResult {
    /// One line: `PASS  3 zeta-tail  measured ... (tolerance)  [12.3 s]`.
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<22} measured {:<12.6} tol {}  [{:.1} s]  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance,
            self.seconds,
            self.details
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub c: f64,
    pub k: f64,
    pub seed: u64,
    pub results: Vec<CriterionResult>,
    pub all_passed: bool,
}

struct Outcome {
    measured: f64,
    tolerance: String,
    passed: bool,
    details: String,
}

fn timed(id: u8, name: &str, anchor: &str, limit: Option<f64>, run: impl FnOnce() -> Result<Outcome>) -> CriterionResult {
    let start = Instant::now();
    let outcome = run();
    let seconds = start.elapsed().as_secs_f64();
    let (measured, mut tolerance, mut passed, mut details) = match outcome {
        Ok(o) => (o.measured, o.tolerance, o.passed, o.details),
        Err(e) => (f64::NAN, String::new(), false, format!("error: {e}")),
    };
    if let Some(limit) = limit {
        tolerance = format!("{tolerance}; runtime < {limit} s");
        if seconds >= limit {
            passed = false;
            details = format!("{details}; too slow");
        }
    }
    CriterionResult {
        id,
        name: name.into(),
        anchor: anchor.into(),
        measured,
        tolerance,
        passed,
        seconds,
        details,
    }
}

/// Root of the moment equation: residuals, inverse map and monotonicity.
pub fn criterion_1(s: &VerifySettings) -> CriterionResult {
    timed(1, "k-solver", "E[V₁^{2k}] = c^{2k} / (2cos((2k+1)π/3)) = 1", Some(1.0), || {
        let curve = analytic::kc_curve(0.005, analytic::critical_elasticity() * 0.995, 50)?;
        let mut residual: f64 = 0.0;
        for &(c, k) in &curve {
            residual = residual.max((analytic::v_moment(c, 2.0 * k)? - 1.0).abs());
        }
        let mut inverse: f64 = 0.0;
        for k in [0.02, 0.1, 0.2, 0.24] {
            inverse = inverse.max((analytic::k_of_c(analytic::c_of_k(k))? - k).abs());
        }
        let decreasing = curve.windows(2).all(|w| w[1].1 < w[0].1);
        // the injected exponent must satisfy the same equation
        let injected = match s.k_override {
            Some(k) => (analytic::v_moment(s.c, 2.0 * k)? - 1.0).abs(),
            None => 0.0,
        };
        Ok(Outcome {
            measured: residual.max(injected),
            tolerance: "residual < 1e-12; |k(c(k)) − k| < 1e-10; k decreasing".into(),
            passed: residual.max(injected) < 1e-12 && inverse < 1e-10 && decreasing,
            details: format!("inverse error {inverse:.2e}; decreasing {decreasing}"),
        })
    })
}

/// `E[(V₁/u₀)^{2k}] = 1` by median of means.
pub fn criterion_2(s: &VerifySettings) -> CriterionResult {
    timed(2, "martingale", "E[(V₁/u₀)^{2k}] = 1", Some(30.0), || {
        let p = s.params()?;
        let n = s.size(1_000_000, 100_000);
        let steps = skeleton::step_batch(&p, n, s.seed_for(2), false)?;
        let powers: Vec<f64> = steps.iter().map(|st| st.rho.powf(2.0 * p.k)).collect();
        let m = stats::robust_mean(&powers, stats::MOM_BLOCKS);
        let z = (m.value - 1.0) / m.stderr;
        Ok(Outcome {
            measured: m.value,
            tolerance: "|mean − 1| < 3 robust SE".into(),
            passed: z.abs() < 3.0,
            details: format!("N {n}; SE {:.2e}; z {z:.2}", m.stderr),
        })
    })
}

/// Log-log slope of `P(ζ > t)` against `−k`, with a Hill cross-check.
pub fn criterion_3(s: &VerifySettings) -> CriterionResult {
    timed(3, "zeta-tail", "P(ζ > t) ~ C₁ t^{-k}", Some(120.0), || {
        let p = s.params()?;
        let n = s.size(100_000, 20_000);
        let cfg = ChainConfig {
            seed: s.seed_for(3),
            ..ChainConfig::default()
        };
        let zetas: Vec<f64> = skeleton::zeta_batch(p.c, n, &cfg)?.iter().map(|d| d.zeta).collect();
        let fit = stats::tail_exponent_loglog(&zetas, 0.1, 0.001)?;
        let hill = stats::hill_estimator(&zetas, 0.01)?;
        let joint = (fit.stderr.powi(2) + hill.stderr.powi(2)).sqrt();
        let slope_ok = (fit.exponent - p.k).abs() <= 0.03;
        let hill_ok = (hill.alpha - fit.exponent).abs() <= 2.0 * joint;
        Ok(Outcome {
            measured: -fit.exponent,
            tolerance: format!("slope = −{:.3} ± 0.03; Hill within 2 joint SE", p.k),
            passed: slope_ok && hill_ok,
            details: format!(
                "N {n}; slope SE {:.4}; Hill {:.4} ± {:.4}",
                fit.stderr, hill.alpha, hill.stderr
            ),
        })
    })
}

/// Tails of the first bounce time, killed and conditioned.
pub fn criterion_4(s: &VerifySettings) -> CriterionResult {
    timed(4, "t1-tails", "P(T₁ > t) ~ t^{-1/4};  P↑(T₁ > t) ~ c′ t^{k−1/4}", None, || {
        let p = s.params()?;
        let n = s.size(100_000, 20_000);
        let killed: Vec<f64> = skeleton::step_batch(&p, n, s.seed_for(41), false)?.iter().map(|x| x.tau).collect();
        let tilted: Vec<f64> = skeleton::step_batch(&p, n, s.seed_for(42), true)?.iter().map(|x| x.tau).collect();
        let fk = stats::tail_exponent_loglog(&killed, 0.1, 0.001)?;
        let ft = stats::tail_exponent_loglog(&tilted, 0.1, 0.001)?;
        let pref = stats::fixed_exponent_prefactor(&tilted, 0.25 - p.k, 0.1, 0.001)?;
        let target = analytic::t1_tail_const_up(&p);
        let rel = pref.prefactor / target - 1.0;
        let ok_k = (fk.exponent - 0.25).abs() <= 0.03;
        let ok_t = (ft.exponent - (0.25 - p.k)).abs() <= 0.03;
        let ok_c = rel.abs() <= 0.2;
        Ok(Outcome {
            measured: -ft.exponent,
            tolerance: format!(
                "killed −0.25 ± 0.03; tilted {:.3} ± 0.03; c′ within 20%",
                p.k - 0.25
            ),
            passed: ok_k && ok_t && ok_c,
            details: format!(
                "N {n}; killed slope {:.4}; c′ fit {:.4} vs {target:.4} ({:+.1}%)",
                -fk.exponent,
                pref.prefactor,
                100.0 * rel
            ),
        })
    })
}

/// `C₁` from its closed-form expectation against the fitted tail prefactor.
pub fn criterion_5(s: &VerifySettings) -> CriterionResult {
    timed(5, "c1-consistency", "C₁ = E[ζ^k − (ζ−T₁)^k] / (k E[V₁^{2k} ln V₁²])", None, || {
        let p = s.params()?;
        let n = s.size(1_000_000, 100_000);
        let cfg = ChainConfig {
            truncation_epsilon: FINE_TRUNCATION,
            seed: s.seed_for(5),
            ..ChainConfig::default()
        };
        let draws = skeleton::zeta_batch(p.c, n, &cfg)?;
        let c1 = skeleton::c1_from_draws(&p, &draws)?;
        let zetas: Vec<f64> = draws.iter().map(|d| d.zeta).collect();
        // H(0, 1) = 1, so s^k P(ζ > s) → C₁ from a unit-speed bounce
        let fit = stats::fixed_exponent_prefactor(&zetas, p.k, 0.1, 0.001)?;
        let rel = c1.value / fit.prefactor - 1.0;
        Ok(Outcome {
            measured: rel,
            tolerance: "|C₁ / tail prefactor − 1| < 0.15".into(),
            passed: rel.abs() < 0.15,
            details: format!(
                "N {n}; C₁ {:.4} ± {:.4}; tail prefactor {:.4} ± {:.4}",
                c1.value, c1.stderr, fit.prefactor, fit.stderr
            ),
        })
    })
}

/// First-bounce speed bound from several starts, through the path integrator.
pub fn criterion_6(s: &VerifySettings) -> CriterionResult {
    timed(6, "first-bounce-bound", "P(V₁/c ≥ |u₀|/2) ≥ 1 − √3/π", None, || {
        let p = s.params()?;
        let n = s.size(5_000, 2_000);
        let floor = 1.0 - 3f64.sqrt() / PI - 0.02;
        let mut worst = f64::INFINITY;
        let mut parts = Vec::new();
        for (i, (x0, u0)) in [(1.0, -1.0), (0.5, 1.0), (2.0, 0.1)].into_iter().enumerate() {
            let cfg = PathConfig {
                dt: 1e-4,
                horizon: f64::MAX,
                record_grid: false,
                seed: s.seed_for(60 + i as u64),
                ..PathConfig::default()
            };
            let bounces = path::first_bounce_batch(p.c, x0, u0, n, &cfg)?;
            let hits = bounces
                .iter()
                .filter(|b| b.is_some_and(|b| b.v_out / p.c >= f64::abs(u0) / 2.0))
                .count();
            let frac = hits as f64 / n as f64;
            worst = worst.min(frac);
            parts.push(format!("({x0},{u0}) {frac:.4}"));
        }
        Ok(Outcome {
            measured: worst,
            tolerance: format!("≥ {floor:.4} from every start"),
            passed: worst >= floor,
            details: format!("N {n} each; {}", parts.join(", ")),
        })
    })
}

/// KS distance of integrator first-bounce speeds to the exact law, over `dt`.
pub fn criterion_7(s: &VerifySettings) -> CriterionResult {
    timed(7, "dt-convergence", "V₁/c ~ (3/2π) v^{3/2} / (1 + v³)", None, || {
        let p = s.params()?;
        let n = s.size(20_000, 5_000);
        let mut distances = Vec::new();
        for dt in [1e-2, 1e-3, 1e-4] {
            let cfg = PathConfig {
                dt,
                horizon: f64::MAX,
                record_grid: false,
                seed: s.seed_for(7),
                ..PathConfig::default()
            };
            let speeds: Vec<f64> = path::first_bounce_batch(p.c, 0.0, 1.0, n, &cfg)?
                .into_iter()
                .flatten()
                .map(|b| b.v_out / p.c)
                .collect();
            distances.push(stats::ks_test(&speeds, analytic::v_marginal_cdf)?.statistic);
        }
        let monotone = distances.windows(2).all(|w| w[1] < w[0]);
        let finest = distances[2];
        Ok(Outcome {
            measured: finest,
            tolerance: "D decreasing in dt; D(1e-4) < 0.02".into(),
            passed: monotone && finest < 0.02,
            details: format!(
                "N {n}; D at dt 1e-2, 1e-3, 1e-4: {:.4}, {:.4}, {:.4}",
                distances[0], distances[1], distances[2]
            ),
        })
    })
}

/// Reconstructed driving noise of resurrected paths is a Brownian motion.
pub fn criterion_8(s: &VerifySettings) -> CriterionResult {
    timed(8, "noise-reconstruction", "W_t = Ẋ_t + (1+c) Σ Ẋ_{s−} 1{X_s=0} is a BM", None, || {
        let p = s.params()?;
        let paths = s.size(10, 2).min(64);
        let horizon = 10.0;
        let cfg = PathConfig {
            dt: 1e-4,
            horizon,
            adaptive: false,
            absorb_speed: 1e-6,
            seed: s.seed_for(8),
            ..PathConfig::default()
        };
        let mut worst_qv: f64 = 1.0;
        let mut increments = Vec::new();
        let (mut jumps, mut steps, mut bounces) = (0.0, 0usize, 0usize);
        for i in 0..paths {
            let res = path::resurrect(&mut rng::stream(cfg.seed, i as u64), p.c, 0.01, &cfg)?;
            let qv = res.path.quadratic_variation() / horizon;
            if (qv - 1.0).abs() > (worst_qv - 1.0).abs() {
                worst_qv = qv;
            }
            increments.extend(res.path.w_increments(0.1));
            let n = res.path.grid.len() - 1;
            jumps += res.path.w_jump_fraction(6.0) * n as f64;
            steps += n;
            bounces += res.path.bounces.len();
        }
        let ks = stats::ks_test(&increments, stats::normal_cdf)?;
        let jump_fraction = jumps / steps as f64;
        Ok(Outcome {
            measured: worst_qv,
            tolerance: "QV/t ∈ [0.98, 1.02]; increment KS p > 0.01; |Δw| > 6√dt on < 1e-6 of steps".into(),
            passed: (worst_qv - 1.0).abs() <= 0.02 && ks.p_value > 0.01 && jump_fraction < 1e-6,
            details: format!(
                "{paths} paths, {bounces} bounces; KS p {:.3} on {} increments; jump fraction {jump_fraction:.1e}",
                ks.p_value,
                increments.len()
            ),
        })
    })
}

/// Two constructions of the stationary overshoot law, and the conditioned drift.
pub fn criterion_9(s: &VerifySettings) -> CriterionResult {
    timed(9, "stationary-overshoot", "m↑(dy) = P(H₁ > y) dy / E[H₁]", None, || {
        let p = s.params()?;
        let n = s.size(10_000, 2_000);
        let table = LadderTable::build(&p, s.size(ladder::DEFAULT_TABLE_SIZE, 20_000), s.seed_for(91))?;
        let mut rng = rng::stream(s.seed_for(92), 0);
        let biased: Vec<f64> = (0..n).map(|_| table.sample_overshoot(&mut rng)).collect();
        let level = ladder::LEVEL_DRIFTS * p.mu_up;
        let crossing: Vec<f64> = ladder::crossing_batch(&p, level, 0.0, n, s.seed_for(93))?
            .iter()
            .map(|c| c.overshoot)
            .collect();
        let ks = stats::ks_two_sample(&biased, &crossing)?;
        let n_walk = s.size(1_000_000, 100_000);
        let incs = ladder::walk_increments(&mut rng::stream(s.seed_for(94), 0), &p, n_walk, true)?;
        let (drift, se) = stats::mean_and_stderr(&incs);
        let z = (drift - p.mu_up) / se;
        Ok(Outcome {
            measured: ks.p_value,
            tolerance: "KS p > 0.01; |drift − μ↑| < 3 SE".into(),
            passed: ks.p_value > 0.01 && z.abs() < 3.0,
            details: format!(
                "n {n} at level {level:.2}; drift {drift:.4} vs μ↑ {:.4} (z {z:.2})",
                p.mu_up
            ),
        })
    })
}

/// Excursion-length counts of the resurrected process and time near the origin.
pub fn criterion_10(s: &VerifySettings) -> CriterionResult {
    timed(10, "resurrection-scaling", "n(ζ > s) = C₁ s^{-k}", None, || {
        let p = s.params()?;
        let m = s.size(10_000, 2_000);
        let eps = 0.01;
        // the step resolves the restart scale: dt = eps²/100
        let cfg = PathConfig {
            dt: 0.01 * eps * eps,
            absorb_speed: path::ABSORB_RATIO * eps,
            record_grid: false,
            seed: s.seed_for(10),
            ..PathConfig::default()
        };
        let records = path::sample_excursions(p.c, eps, &cfg, m, 2.0)?;
        let fit = path::length_tail(&records, 1e-2, 1.0)?;
        let slope_ok = (fit.exponent - p.k).abs() <= 0.05;

        let replicas = s.size(100, 20).min(200) as u64;
        let mut fractions = Vec::new();
        for eps in [0.1, 0.03, 0.01] {
            let cfg = PathConfig {
                dt: 0.01 * eps * eps,
                absorb_speed: path::ABSORB_RATIO * eps,
                horizon: 10.0,
                record_grid: false,
                seed: s.seed_for(11),
                ..cfg
            };
            let (mut near, mut total) = (0.0, 0.0);
            for r in 0..replicas {
                let res = path::resurrect(&mut rng::stream(cfg.seed, r), p.c, eps, &cfg)?;
                near += res.near_origin_time;
                total += res.horizon;
            }
            fractions.push(near / total);
        }
        let decreasing = fractions.windows(2).all(|w| w[1] < w[0]);
        Ok(Outcome {
            measured: -fit.exponent,
            tolerance: format!("slope = −{:.3} ± 0.05 over s ∈ [0.01, 1]; near-origin time decreasing in eps", p.k),
            passed: slope_ok && decreasing,
            details: format!(
                "M {m}; slope SE {:.4}; near-origin fraction at eps 0.1, 0.03, 0.01: {:.2e}, {:.2e}, {:.2e}",
                fit.stderr, fractions[0], fractions[1], fractions[2]
            ),
        })
    })
}

type Criterion = fn(&VerifySettings) -> CriterionResult;

pub const CRITERIA: [Criterion; 10] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
];

/// Run every criterion, calling `progress` after each one.
pub fn run_suite(settings: &VerifySettings, mut progress: impl FnMut(&CriterionResult)) -> Result<Report> {
    let params = settings.params()?;
    let results: Vec<CriterionResult> = CRITERIA
        .iter()
        .map(|criterion| {
            let r = criterion(settings);
            progress(&r);
            r
        })
        .collect();
    Ok(Report {
        suite: settings.suite,
        c: params.c,
        k: params.k,
        seed: settings.seed,
        all_passed: results.iter().all(|r| r.passed),
        results,
    })
}
