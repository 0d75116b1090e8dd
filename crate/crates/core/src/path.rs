//! Discretized paths of the reflected dynamics
//!
//! ```text
//! X_t = X_0 + ∫ Ẋ_s ds,    Ẋ_t = u_0 + W_t − (1 + c) Σ_{s ≤ t} Ẋ_{s−} 1{X_s = 0}
//! ```
//!
//! Within a step of length `h` the velocity is linear (slope `ΔW/h`) and the
//! position quadratic. Zero crossings inside a step are found by bisection,
//! the incoming velocity is reflected to `−c` times itself, and a bounce with
//! outgoing speed below `absorb_speed` ends the path. Far from the boundary the
//! integrator takes larger steps drawn from the exact Gaussian transition of
//! the free process; it never takes one where a crossing could be missed with
//! non-negligible probability.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::StateKU;
use crate::error::{Error, Result};
use crate::rng;
use crate::skeleton::{sample_zeta, ChainConfig};
use crate::stats::{self, TailFit};

/// Bounces allowed inside a single integration step.
pub const BOUNCE_GUARD: usize = 1000;

/// Bisection tolerance on the crossing time, in units of `dt`.
pub const CROSSING_TOL: f64 = 1e-6;

/// Absorption threshold relative to the starting speed scale.
pub const ABSORB_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub dt: f64,
    /// A bounce with outgoing speed below this ends the path.
    pub absorb_speed: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Drop the noise entirely.
    pub deterministic: bool,
    /// Use exact Gaussian steps longer than `dt` away from the boundary.
    pub adaptive: bool,
    /// Keep `(t, x, v)` after every step.
    pub record_grid: bool,
    pub max_steps: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            absorb_speed: ABSORB_RATIO,
            horizon: 10.0,
            seed: 0,
            deterministic: false,
            adaptive: true,
            record_grid: true,
            max_steps: 100_000_000,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.absorb_speed >= 0.0 && self.absorb_speed.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "absorb_speed must be ≥ 0, got {}",
                self.absorb_speed
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounce {
    pub time: f64,
    /// Velocity just before the bounce (negative).
    pub v_in: f64,
    /// Velocity just after, `−c · v_in`.
    pub v_out: f64,
}

/// Instantaneous restart of a resurrected path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Restart {
    /// Index of the first grid point after the restart.
    pub grid_index: usize,
    pub v_from: f64,
    pub v_to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub c: f64,
    pub grid: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub bounces: Vec<Bounce>,
    pub restarts: Vec<Restart>,
    /// Absorption time: the declared time plus a skeleton draw of the remainder
    /// `v_out² ζ'` below the threshold.
    pub absorbed_at: Option<f64>,
    /// Reconstructed driving noise on the grid.
    pub w: Vec<f64>,
}

impl PathSample {
    /// `Σ (1 + c) |v_in|` over all bounces.
    pub fn jump_total(&self) -> f64 {
        (1.0 + self.c) * self.bounces.iter().fold(0.0, |s, b| s - b.v_in)
    }

    /// `Σ (Δw)²` over the grid.
    pub fn quadratic_variation(&self) -> f64 {
        self.w.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum()
    }

    /// Fraction of grid steps with `|Δw| > sigmas · √Δt`.
    pub fn w_jump_fraction(&self, sigmas: f64) -> f64 {
        let steps = self.w.len().saturating_sub(1);
        if steps == 0 {
            return 0.0;
        }
        let jumps = (0..steps)
            .filter(|&i| (self.w[i + 1] - self.w[i]).abs() > sigmas * (self.grid[i + 1] - self.grid[i]).sqrt())
            .count();
        jumps as f64 / steps as f64
    }

    /// Increments of `w` over consecutive windows of length `lag`, scaled by
    /// `1/√lag`. Grid points are matched to the first time at or past each
    /// multiple of `lag`.
    pub fn w_increments(&self, lag: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let (Some(&t0), Some(&t_end)) = (self.grid.first(), self.grid.last()) else {
            return out;
        };
        let mut prev = 0usize;
        let mut j = 1;
        while t0 + j as f64 * lag <= t_end {
            let target = t0 + j as f64 * lag;
            let i = prev + self.grid[prev..].partition_point(|&t| t < target - 1e-9 * lag);
            if i >= self.grid.len() {
                break;
            }
            out.push((self.w[i] - self.w[prev]) / (self.grid[i] - self.grid[prev]).sqrt());
            prev = i;
            j += 1;
        }
        out
    }
}

/// Next zero of `x + v s + a s²/2` in `(0, rem]`, given `x ≥ 0`.
fn crossing(x: f64, v: f64, a: f64, rem: f64, tol: f64) -> Option<f64> {
    if x <= 0.0 {
        // leaving the boundary: the parabola returns at −2v/a
        return (v > 0.0 && a < 0.0 && -2.0 * v / a <= rem).then(|| -2.0 * v / a);
    }
    let p = |s: f64| x + s * (v + 0.5 * a * s);
    let hi = if p(rem) <= 0.0 {
        rem
    } else if v < 0.0 && a > 0.0 && -v / a < rem && p(-v / a) < 0.0 {
        -v / a
    } else {
        return None;
    };
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// State of one path between steps.
struct Walker<'a> {
    c: f64,
    cfg: &'a PathConfig,
    t: f64,
    x: f64,
    v: f64,
}

impl Walker<'_> {
    /// Longest exact step from which a crossing is out of reach.
    fn safe_step(&self) -> f64 {
        if self.x <= 0.0 {
            return 0.0;
        }
        let h = (self.x / 16.0).powf(2.0 / 3.0);
        if self.v < 0.0 {
            h.min(self.x / (-2.0 * self.v))
        } else {
            h
        }
    }

    /// Advance by one step, stopping no later than `limit`. Bounces are
    /// appended to `bounces`; the absorbing bounce, if any, is returned.
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, limit: f64, bounces: &mut Vec<Bounce>) -> Result<Option<Bounce>> {
        let room = limit - self.t;
        let dt = self.cfg.dt;
        if self.cfg.adaptive && !self.cfg.deterministic {
            let h_safe = self.safe_step();
            if h_safe >= 2.0 * dt {
                let (h, last) = if h_safe >= room { (room, true) } else { (h_safe, false) };
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let sq = h.sqrt();
                let x1 = self.x + self.v * h + h * sq * (0.5 * z1 + z2 / (2.0 * 3f64.sqrt()));
                if x1 > 0.0 {
                    self.x = x1;
                    self.v += sq * z1;
                    self.t = if last { limit } else { self.t + h };
                    return Ok(None);
                }
            }
        }
        let (h, last) = if dt >= room { (room, true) } else { (dt, false) };
        let a = if self.cfg.deterministic {
            0.0
        } else {
            rng.sample::<f64, _>(StandardNormal) / h.sqrt()
        };
        let tol = dt * CROSSING_TOL;
        let mut rem = h;
        let mut n = 0;
        loop {
            if self.x <= 0.0 && self.v <= 0.0 {
                // sitting at (0, 0)
                return Ok(Some(Bounce {
                    time: self.t,
                    v_in: -self.v,
                    v_out: self.v,
                }));
            }
            let Some(s) = crossing(self.x, self.v, a, rem, tol) else {
                self.x = (self.x + rem * (self.v + 0.5 * a * rem)).max(0.0);
                self.v += a * rem;
                self.t = if last { limit } else { self.t + rem };
                return Ok(None);
            };
            let v_in = (self.v + a * s).min(0.0);
            self.t += s;
            rem -= s;
            self.x = 0.0;
            self.v = -self.c * v_in;
            let b = Bounce {
                time: self.t,
                v_in,
                v_out: self.v,
            };
            bounces.push(b);
            if self.v < self.cfg.absorb_speed {
                return Ok(Some(b));
            }
            if self.cfg.absorb_speed == 0.0 && a < 0.0 {
                // the bounces from here form a geometric series that reaches (0, 0)
                let accumulation = 2.0 * self.v / (-a * (1.0 - self.c));
                if accumulation <= rem {
                    self.t += accumulation;
                    self.v = 0.0;
                    return Ok(Some(Bounce {
                        time: self.t,
                        v_in: 0.0,
                        v_out: 0.0,
                    }));
                }
            }
            n += 1;
            if n >= BOUNCE_GUARD {
                return Err(Error::BounceGuard(BOUNCE_GUARD));
            }
        }
    }
}

/// Remaining absorption time after a bounce at speed `v_out`.
fn residual_time<R: Rng + ?Sized>(rng: &mut R, c: f64, v_out: f64, cfg: &PathConfig) -> Result<f64> {
    if cfg.deterministic || v_out <= 0.0 {
        return Ok(0.0);
    }
    Ok(v_out * v_out * sample_zeta(rng, c, &ChainConfig::default())?.zeta)
}

fn check_start(c: f64, x0: f64, u0: f64, cfg: &PathConfig) -> Result<()> {
    cfg.validate()?;
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("restitution c must lie in (0, 1), got {c}")));
    }
    StateKU::new(x0, u0).map(|_| ())
}

/// One path from `(x0, u0)` up to absorption or `cfg.horizon`.
pub fn integrate_sor<R: Rng + ?Sized>(rng: &mut R, c: f64, x0: f64, u0: f64, cfg: &PathConfig) -> Result<PathSample> {
    check_start(c, x0, u0, cfg)?;
    let mut walker = Walker {
        c,
        cfg,
        t: 0.0,
        x: x0,
        v: u0,
    };
    let mut path = PathSample {
        c,
        grid: vec![0.0],
        x: vec![x0],
        v: vec![u0],
        bounces: Vec::new(),
        restarts: Vec::new(),
        absorbed_at: None,
        w: Vec::new(),
    };
    let mut steps = 0;
    while walker.t < cfg.horizon {
        if steps >= cfg.max_steps {
            return Err(Error::StepCap(cfg.max_steps));
        }
        steps += 1;
        let absorbed = walker.step(rng, cfg.horizon, &mut path.bounces)?;
        if cfg.record_grid {
            path.grid.push(walker.t);
            path.x.push(walker.x);
            path.v.push(walker.v);
        }
        if let Some(b) = absorbed {
            path.absorbed_at = Some(b.time + residual_time(rng, c, b.v_out, cfg)?);
            break;
        }
    }
    if cfg.record_grid {
        path.w = reconstruct_w(&path);
    }
    Ok(path)
}

/// First bounce from `(x0, u0)`, or `None` if the horizon comes first.
pub fn first_bounce<R: Rng + ?Sized>(rng: &mut R, c: f64, x0: f64, u0: f64, cfg: &PathConfig) -> Result<Option<Bounce>> {
    check_start(c, x0, u0, cfg)?;
    let mut walker = Walker {
        c,
        cfg,
        t: 0.0,
        x: x0,
        v: u0,
    };
    let mut bounces = Vec::new();
    let mut steps = 0;
    while walker.t < cfg.horizon {
        if steps >= cfg.max_steps {
            return Err(Error::StepCap(cfg.max_steps));
        }
        steps += 1;
        walker.step(rng, cfg.horizon, &mut bounces)?;
        if let Some(&b) = bounces.first() {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// `n` first bounces in parallel, path `i` on stream `i` of `cfg.seed`.
pub fn first_bounce_batch(c: f64, x0: f64, u0: f64, n: usize, cfg: &PathConfig) -> Result<Vec<Option<Bounce>>> {
    (0..n)
        .into_par_iter()
        .map(|i| first_bounce(&mut rng::stream(cfg.seed, i as u64), c, x0, u0, cfg))
        .collect()
}

/// The driving noise `w_t = Ẋ_t − u₀ + (1 + c) Σ_{s ≤ t} Ẋ_{s−} 1{X_s = 0}`
/// on the grid, with restart jumps removed as well.
pub fn reconstruct_w(path: &PathSample) -> Vec<f64> {
    let Some(&v0) = path.v.first() else {
        return Vec::new();
    };
    let mut w = Vec::with_capacity(path.grid.len());
    let (mut jumps, mut nb, mut nr) = (0.0, 0, 0);
    for (i, (&t, &v)) in path.grid.iter().zip(&path.v).enumerate() {
        while nb < path.bounces.len() && path.bounces[nb].time <= t {
            jumps += (1.0 + path.c) * path.bounces[nb].v_in;
            nb += 1;
        }
        while nr < path.restarts.len() && path.restarts[nr].grid_index <= i {
            jumps -= path.restarts[nr].v_to - path.restarts[nr].v_from;
            nr += 1;
        }
        w.push(v - v0 + jumps);
    }
    w
}

/// One excursion of the resurrected process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub start: f64,
    /// Time from the restart to the declared absorption (or to the cap).
    pub length: f64,
    /// Time of the first bounce after the restart; equals `length` if there was none.
    pub first_bounce_time: f64,
    pub max_speed: f64,
    /// Outgoing speeds of all bounces, in order.
    pub bounce_speeds: Vec<f64>,
    /// Skeleton draw of the absorption time left below the threshold.
    pub residual: f64,
    /// The excursion was still running at the length cap or horizon.
    pub censored: bool,
}

impl ExcursionRecord {
    /// Number of bounces with outgoing speed in `[v_lo, v_hi]`.
    pub fn n_bounces_in(&self, v_lo: f64, v_hi: f64) -> usize {
        self.bounce_speeds.iter().filter(|&&s| s >= v_lo && s <= v_hi).count()
    }
}

/// Resurrected path with its excursions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resurrection {
    pub path: PathSample,
    pub excursions: Vec<ExcursionRecord>,
    /// Total time spent in `max(x, |v|) < eps`, counted per step from its start state.
    pub near_origin_time: f64,
    pub horizon: f64,
}

impl Resurrection {
    pub fn near_origin_fraction(&self) -> f64 {
        self.near_origin_time / self.horizon
    }
}

/// Run one excursion from `(0, eps)` starting at time `start`.
fn run_excursion<R: Rng + ?Sized>(
    rng: &mut R,
    c: f64,
    eps: f64,
    start: f64,
    limit: f64,
    cfg: &PathConfig,
    path: Option<&mut PathSample>,
    near_origin: &mut f64,
) -> Result<ExcursionRecord> {
    let mut walker = Walker {
        c,
        cfg,
        t: start,
        x: 0.0,
        v: eps,
    };
    let mut bounces = Vec::new();
    let mut max_speed = eps;
    let mut absorbed = None;
    let mut steps = 0;
    let mut path = path;
    while walker.t < limit {
        if steps >= cfg.max_steps {
            return Err(Error::StepCap(cfg.max_steps));
        }
        steps += 1;
        let t_before = walker.t;
        let inside = walker.x < eps && walker.v.abs() < eps;
        absorbed = walker.step(rng, limit, &mut bounces)?;
        if inside {
            *near_origin += walker.t - t_before;
        }
        max_speed = max_speed.max(walker.v.abs());
        if let Some(p) = path.as_deref_mut() {
            p.grid.push(walker.t);
            p.x.push(walker.x);
            p.v.push(walker.v);
        }
        if absorbed.is_some() {
            break;
        }
    }
    for b in &bounces {
        max_speed = max_speed.max(-b.v_in);
    }
    let residual = match absorbed {
        Some(b) => residual_time(rng, c, b.v_out, cfg)?,
        None => 0.0,
    };
    let length = walker.t - start;
    let record = ExcursionRecord {
        start,
        length,
        first_bounce_time: bounces.first().map_or(length, |b| b.time - start),
        max_speed,
        bounce_speeds: bounces.iter().map(|b| b.v_out).collect(),
        residual,
        censored: absorbed.is_none(),
    };
    if let Some(p) = path {
        p.bounces.extend(bounces);
    }
    Ok(record)
}

/// The ε-resurrected process on `[0, cfg.horizon]`: excursions from `(0, eps)`
/// run until absorption, each followed by an instantaneous restart.
pub fn resurrect<R: Rng + ?Sized>(rng: &mut R, c: f64, eps: f64, cfg: &PathConfig) -> Result<Resurrection> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    check_start(c, 0.0, eps, cfg)?;
    let mut path = PathSample {
        c,
        grid: vec![0.0],
        x: vec![0.0],
        v: vec![eps],
        bounces: Vec::new(),
        restarts: Vec::new(),
        absorbed_at: None,
        w: Vec::new(),
    };
    let mut excursions = Vec::new();
    let mut near_origin = 0.0;
    let mut t = 0.0;
    while t < cfg.horizon {
        if let (Some(&v_from), false) = (path.v.last(), excursions.is_empty()) {
            if cfg.record_grid {
                path.restarts.push(Restart {
                    grid_index: path.grid.len(),
                    v_from,
                    v_to: eps,
                });
                path.grid.push(t);
                path.x.push(0.0);
                path.v.push(eps);
            }
        }
        let grid = if cfg.record_grid { Some(&mut path) } else { None };
        let record = run_excursion(rng, c, eps, t, cfg.horizon, cfg, grid, &mut near_origin)?;
        t = record.start + record.length;
        if !cfg.record_grid {
            let start = record.start;
            path.bounces
                .extend(record.bounce_speeds.iter().map(|&v| Bounce { time: start, v_in: -v / c, v_out: v }));
        }
        excursions.push(record);
    }
    if cfg.record_grid {
        path.w = reconstruct_w(&path);
    }
    Ok(Resurrection {
        path,
        excursions,
        near_origin_time: near_origin,
        horizon: cfg.horizon,
    })
}

/// `m` independent excursions from `(0, eps)`, each cut at `length_cap`;
/// excursion `i` runs on stream `i` of `cfg.seed`.
pub fn sample_excursions(c: f64, eps: f64, cfg: &PathConfig, m: usize, length_cap: f64) -> Result<Vec<ExcursionRecord>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(length_cap > 0.0) {
        return Err(Error::InvalidArgument(format!("length cap must be positive, got {length_cap}")));
    }
    check_start(c, 0.0, eps, cfg)?;
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, i as u64);
            run_excursion(&mut rng, c, eps, 0.0, length_cap, cfg, None, &mut 0.0)
        })
        .collect()
}

/// Mean bounce counts `E[N_{[v,1]}]` on a speed grid, with the growth exponent as `v → 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BounceCounts {
    /// Speeds, descending.
    pub v: Vec<f64>,
    /// Mean number of bounces with outgoing speed in `[v, 1]`.
    pub mean_counts: Vec<f64>,
    /// `β` in `E[N_{[v, v(1+dv)]}] ∝ v^{-β} dv/v`, fitted on the bins between grid points.
    pub growth_exponent: f64,
}

pub fn excursion_bounce_counts(records: &[ExcursionRecord], v_grid: &[f64]) -> Result<BounceCounts> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no excursion records".into()));
    }
    let mut v: Vec<f64> = v_grid.to_vec();
    if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidArgument("speed grid must be positive".into()));
    }
    v.sort_by(|a, b| b.total_cmp(a));
    let n = records.len() as f64;
    let mean_counts: Vec<f64> = v
        .iter()
        .map(|&lo| records.iter().map(|r| r.n_bounces_in(lo, 1.0)).sum::<usize>() as f64 / n)
        .collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for j in 0..v.len().saturating_sub(1) {
        let (hi, lo) = (v[j].min(1.0), v[j + 1]);
        let in_bin = mean_counts[j + 1] - mean_counts[j];
        if lo < hi && in_bin > 0.0 {
            xs.push((hi * lo).sqrt().ln());
            ys.push((in_bin / (hi / lo).ln()).ln());
        }
    }
    let growth_exponent = -stats::ols_slope(&xs, &ys);
    Ok(BounceCounts {
        v,
        mean_counts,
        growth_exponent,
    })
}

/// Survival slope of excursion lengths over `[s_lo, s_hi]`.
pub fn length_tail(records: &[ExcursionRecord], s_lo: f64, s_hi: f64) -> Result<TailFit> {
    let lengths: Vec<f64> = records.iter().map(|r| r.length).filter(|&l| l > 0.0).collect();
    stats::survival_slope_on_range(&lengths, s_lo, s_hi)
}

/// Median of `first_bounce_time / length` over excursions longer than `s_min`.
pub fn first_bounce_ratio_median(records: &[ExcursionRecord], s_min: f64) -> Option<f64> {
    let mut ratios: Vec<f64> = records
        .iter()
        .filter(|r| r.length > s_min)
        .map(|r| r.first_bounce_time / r.length)
        .collect();
    if ratios.is_empty() {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    Some(ratios[ratios.len() / 2])
}
