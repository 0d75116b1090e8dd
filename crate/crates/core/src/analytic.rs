//! Closed-form quantities of the reflected Kolmogorov process.
//!
//! Everything here is a pure function. Densities that have no closed form
//! (occupation densities, the hitting-speed density started away from the
//! boundary, the harmonic function) are evaluated by adaptive quadrature from
//! [`crate::numerics`].

use std::f64::consts::{FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, QuadOptions};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Relative tolerance used for occupation densities nested inside other integrals.
const NESTED_TOL: f64 = 1e-7;

/// `exp(-π/√3)`: the largest elasticity for which bounces accumulate in finite time.
pub fn critical_elasticity() -> f64 {
    (-PI / SQRT_3).exp()
}

/// Mean increment of `ln V_n` under the killed law: `ln c + π/√3`.
pub fn killed_drift(c: f64) -> f64 {
    c.ln() + PI / SQRT_3
}

/// Elasticity together with the exponents and drifts it determines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c: f64,
    pub k: f64,
    pub drift: f64,
    pub mu_up: f64,
    pub theta: f64,
}

impl ModelParams {
    pub fn new(c: f64) -> Result<Self> {
        let k = k_of_c(c)?;
        Ok(Self::assemble(c, k))
    }

    /// Parameters for the elasticity whose exponent is exactly `k`.
    pub fn from_k(k: f64) -> Result<Self> {
        if !(k > 0.0 && k < 0.25) {
            return Err(Error::InvalidArgument(format!(
                "exponent k = {k} outside (0, 1/4)"
            )));
        }
        let c = c_of_k(k);
        if !(c > 0.0 && c < critical_elasticity()) {
            return Err(Error::ElasticityOutOfRange(c));
        }
        Ok(Self::assemble(c, k))
    }

    fn assemble(c: f64, k: f64) -> Self {
        Self {
            c,
            k,
            drift: killed_drift(c),
            mu_up: tilted_drift(c, k),
            theta: (2.0 * k).exp(),
        }
    }

    /// Default verification point: `c = (2 cos(2π/5))^5`, where `k = 1/10`.
    pub fn reference() -> Self {
        Self::from_k(0.1).expect("k = 0.1 is in range")
    }
}

/// A point of the state space `D⁰`: position `x ≥ 0`, velocity `u`, and
/// `u ≥ 0` whenever `x = 0` (only outgoing velocities live on the boundary).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateKU {
    pub x: f64,
    pub u: f64,
}

impl StateKU {
    pub fn new(x: f64, u: f64) -> Result<Self> {
        if !x.is_finite() || !u.is_finite() || x < 0.0 || (x == 0.0 && u < 0.0) {
            return Err(Error::InvalidState { x, u });
        }
        Ok(Self { x, u })
    }

    /// Membership in `D = D⁰ \ {(0,0)}`.
    pub fn in_d(&self) -> bool {
        self.x > 0.0 || self.u > 0.0
    }
}

fn check_elasticity(c: f64) -> Result<()> {
    if c > 0.0 && c < critical_elasticity() {
        Ok(())
    } else {
        Err(Error::ElasticityOutOfRange(c))
    }
}

/// `E[V₁^x]` from a bounce at unit speed: `c^x / (2 cos((x+1)π/3))`, for `x < 1/2`.
pub fn v_moment(c: f64, x: f64) -> Result<f64> {
    if !(x < 0.5) {
        return Err(Error::DivergentMoment(x));
    }
    Ok(c.powf(x) / (2.0 * ((x + 1.0) * FRAC_PI_3).cos()))
}

/// Explicit inverse of `k_of_c`: `c(k) = (2 cos((2k+1)π/3))^(1/(2k))`.
pub fn c_of_k(k: f64) -> f64 {
    (2.0 * ((2.0 * k + 1.0) * FRAC_PI_3).cos()).powf(1.0 / (2.0 * k))
}

/// `|E[V₁^{2k}] - 1|` for the pair `(c, k)`.
pub fn k_residual(c: f64, k: f64) -> f64 {
    match v_moment(c, 2.0 * k) {
        Ok(m) => (m - 1.0).abs(),
        Err(_) => f64::INFINITY,
    }
}

/// The tail exponent: the root in `(0, 1/4)` of `E[V₁^{2k}] = 1`.
pub fn k_of_c(c: f64) -> Result<f64> {
    check_elasticity(c)?;
    let ln_c = c.ln();
    // ln c - ln c(k): increasing in k, finite as k -> 0, and free of the
    // cancellation that E[V^{2k}] - 1 suffers for small k.
    let g = |k: f64| ln_c - ln_two_cos(k) / (2.0 * k);
    let (mut lo, mut hi) = (1e-9, 0.25 - 1e-9);
    if g(hi) < 0.0 {
        // c so small that k is within 1e-9 of 1/4
        hi = 0.25 - f64::EPSILON / 8.0;
        if g(hi) < 0.0 {
            return Ok(hi);
        }
    }
    if g(lo) > 0.0 {
        // c so close to critical that the root sits below the default bracket
        lo = 1e-300;
    }
    // a few bisection steps to shrink the bracket before Brent
    for _ in 0..4 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    numerics::brent(g, lo, hi, 1e-17, 200)
}

/// `ln(2 cos((2k+1)π/3))`, accurate as `k -> 0` where the argument of the log tends to 1.
fn ln_two_cos(k: f64) -> f64 {
    // 2cos(π/3 + δ) = cos δ - √3 sin δ = 1 - 2 sin²(δ/2) - √3 sin δ
    let delta = 2.0 * k * FRAC_PI_3;
    let half = (0.5 * delta).sin();
    (-2.0 * half * half - SQRT_3 * delta.sin()).ln_1p()
}

/// `n_points` values `(c, k(c))` on an even grid of `[c_min, c_max]`.
pub fn kc_curve(c_min: f64, c_max: f64, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points < 2 || !(c_min < c_max) {
        return Err(Error::InvalidArgument(format!(
            "curve needs c_min < c_max and at least 2 points (got {c_min}, {c_max}, {n_points})"
        )));
    }
    check_elasticity(c_min)?;
    check_elasticity(c_max)?;
    (0..n_points)
        .map(|i| {
            let c = if i + 1 == n_points {
                c_max
            } else {
                c_min + (c_max - c_min) * i as f64 / (n_points - 1) as f64
            };
            k_of_c(c).map(|k| (c, k))
        })
        .collect()
}

fn tilted_drift(c: f64, k: f64) -> f64 {
    c.ln() + FRAC_PI_3 * ((2.0 * k + 1.0) * FRAC_PI_3).tan()
}

/// Drift of `ln V_n` under the conditioned law, `E[V₁^{2k} ln V₁]`:
/// `ln c + (π/3) tan((2k+1)π/3)`.
pub fn mu_up(params: &ModelParams) -> f64 {
    tilted_drift(params.c, params.k)
}

/// Density of `V₁/c` from a bounce at unit speed: `(3/2π) v^{3/2} / (1 + v³)`.
pub fn v_marginal_pdf(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    if v > 1e100 {
        return 1.5 / PI * v.powf(-1.5);
    }
    1.5 / PI * v.powf(1.5) / (1.0 + v * v * v)
}

/// Distribution function of [`v_marginal_pdf`], by quadrature.
pub fn v_marginal_cdf(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let opts = QuadOptions::with_tol(1e-12, 1e-12);
    if v <= 1.0 {
        numerics::integrate(v_marginal_pdf, 0.0, v, opts)
            .map(|i| i.value)
            .unwrap_or(f64::NAN)
            .clamp(0.0, 1.0)
    } else {
        // 1 - ∫_v^∞, with v' = v / w² on the tail
        let tail = numerics::integrate(
            |w| {
                let x = v / (w * w);
                v_marginal_pdf(x) * 2.0 * v / (w * w * w)
            },
            0.0,
            1.0,
            opts,
        )
        .map(|i| i.value)
        .unwrap_or(f64::NAN);
        (1.0 - tail).clamp(0.0, 1.0)
    }
}

/// `∫₀^y e^{-3θ/2} dθ / √(πθ) = √(2/3) · P(1/2, 3y/2)`, with `P(1/2, z) = erf(√z)`.
pub fn mckean_inner_integral(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    (2.0f64 / 3.0).sqrt() * libm::erf((1.5 * y).sqrt())
}

/// Joint density of `(T₁, V₁/c)` from a bounce at unit speed.
pub fn mckean_joint_pdf(s: f64, v: f64) -> f64 {
    if s <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    3.0 * v / (PI * std::f64::consts::SQRT_2 * s * s)
        * (-2.0 * (v * v - v + 1.0) / s).exp()
        * mckean_inner_integral(4.0 * v / s)
}

/// Conditional density of `T₁` given `V₁/c = v`.
pub fn mckean_conditional_pdf(s: f64, v: f64) -> f64 {
    let m = v_marginal_pdf(v);
    if m == 0.0 {
        0.0
    } else {
        mckean_joint_pdf(s, v) / m
    }
}

/// Transition density of the free Kolmogorov process from `(x,u)` to `(y,v)` in time `t`.
pub fn kolmogorov_pt(t: f64, x: f64, u: f64, y: f64, v: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let d = y - x - t * u;
    let dv = v - u;
    let q = -6.0 / (t * t * t) * d * d + 6.0 / (t * t) * d * dv - 2.0 / t * dv * dv;
    SQRT_3 / (PI * t * t) * q.exp()
}

/// Total occupation density `Φ(x,u;y,v) = ∫₀^∞ p_t(x,u;y,v) dt`.
///
/// With `w = 1/t` the integrand becomes `(√3/π) exp(-6d²w³ + 6d(u+v)w² - 2(u²+uv+v²)w)`,
/// `d = y - x`: bounded at `w = 0` (the slow `t^{-2}` decay of `p_t`) and
/// super-exponentially small as `w -> ∞` (the `t -> 0` singularity), so a single
/// semi-infinite quadrature in `w` handles both ends.
pub fn occupation_phi(x: f64, u: f64, y: f64, v: f64) -> Result<f64> {
    occupation_phi_tol(x, u, y, v, 1e-9)
}

fn occupation_phi_tol(x: f64, u: f64, y: f64, v: f64, rel_tol: f64) -> Result<f64> {
    let d = y - x;
    let a3 = 6.0 * d * d;
    let a2 = 6.0 * d * (u + v);
    let a1 = 2.0 * (u * u + u * v + v * v);
    if !(a1.is_finite() && a2.is_finite() && a3.is_finite()) {
        // speeds or distances beyond f64 range: the density has vanished
        return Ok(0.0);
    }
    if a3 == 0.0 {
        if a1 <= 0.0 {
            return Err(Error::InvalidArgument(
                "occupation density is infinite at coincident points".into(),
            ));
        }
        return Ok(SQRT_3 / PI / a1);
    }
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol,
        max_intervals: 4000,
    };
    let integral = numerics::try_integrate_split(
        |w| Ok((w * (w * (a2 - w * a3) - a1)).exp()),
        &cubic_breaks(a1, a2, a3),
        2.0,
        opts,
    )?;
    Ok(SQRT_3 / PI * integral.value)
}

/// Breakpoints for integrands `exp(-a3 w³ + a2 w² - a1 w)` on `w > 0`: the
/// scale set by each coefficient and the local extrema of the exponent.
fn cubic_breaks(a1: f64, a2: f64, a3: f64) -> Vec<f64> {
    let mut scales = Vec::with_capacity(4);
    if a1 > 0.0 {
        scales.push(1.0 / a1);
    }
    if a2 != 0.0 {
        scales.push(1.0 / a2.abs().sqrt());
    }
    if a3 > 0.0 {
        scales.push(1.0 / a3.cbrt());
        let disc = a2 * a2 - 3.0 * a1 * a3;
        if disc >= 0.0 {
            for root in [(a2 - disc.sqrt()) / (3.0 * a3), (a2 + disc.sqrt()) / (3.0 * a3)] {
                if root > 0.0 {
                    scales.push(root);
                }
            }
        }
    }
    let mut breaks = Vec::with_capacity(4 * scales.len());
    for s in scales {
        breaks.extend([0.1 * s, s, 10.0 * s, 50.0 * s]);
    }
    breaks
}

fn check_in_d(x: f64, u: f64) -> Result<()> {
    let s = StateKU::new(x, u)?;
    if s.in_d() {
        Ok(())
    } else {
        Err(Error::InvalidState { x, u })
    }
}

/// `Φ(x,u;0,y) − Φ(0,u;0,y)`: the occupation density minus its value with the
/// start moved onto the target line, which is `(√3/π) / (2(u²+uy+y²))`.
///
/// Both densities decay like `y⁻²`, so subtracting them before integrating
/// keeps the large-`y` behaviour of the hitting density free of cancellation.
fn occupation_excess(x: f64, u: f64, y: f64, rel_tol: f64) -> Result<f64> {
    let a3 = 6.0 * x * x;
    let a2 = -6.0 * x * (u + y);
    let a1 = 2.0 * (u * u + u * y + y * y);
    if !(a1.is_finite() && a2.is_finite() && a3.is_finite()) {
        return Ok(0.0);
    }
    if a1 <= 0.0 {
        return Err(Error::InvalidArgument("degenerate occupation excess".into()));
    }
    // beyond w_far the cubic exceeds 40 in magnitude and expm1 is -1 to double precision
    let w_far = a2.max(0.0) / a3 + (40.0 / a3).cbrt();
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol,
        max_intervals: 4000,
    };
    let near = numerics::try_integrate_breaks(
        |w| {
            let q = w * w * (a2 - a3 * w);
            Ok(if q < 1.0 {
                (-a1 * w).exp() * q.exp_m1()
            } else {
                (q - a1 * w).exp() - (-a1 * w).exp()
            })
        },
        0.0,
        w_far,
        &cubic_breaks(a1, a2, a3),
        opts,
    )?;
    Ok(SQRT_3 / PI * (near.value - (-a1 * w_far).exp() / a1))
}

/// Density at `v` of `V₁/c` (the incoming speed at the first bounce) for the
/// killed process started at `(x, u) ∈ D`.
///
/// Only `(x, u) ∈ D` is accepted; starts `(0, u)` with `u < 0` are excluded.
/// The occupation densities are split as `Φ = (Φ − Φ₀) + Φ₀` with `Φ₀` the
/// rational `x = 0` density; for the `Φ₀` part the `1/(2y²)` leading terms of
/// the direct and reflected pieces cancel exactly and are removed by hand.
pub fn gorkov_hit_pdf(x: f64, u: f64, v: f64) -> Result<f64> {
    check_in_d(x, u)?;
    if v <= 0.0 {
        return Ok(0.0);
    }
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-9,
        max_intervals: 2000,
    };
    let weight = |mu: f64| mu.powf(1.5) / (mu * mu * mu + 1.0);

    // rational part: ψ(y) − (√3/π)/(2y²) = −(√3/2π)·u(u+y) / (y²(u²+uy+y²))
    let psi_rest = |y: f64| -0.5 * SQRT_3 / PI * u * (u + y) / (y * y * (u * u + u * y + y * y));
    // the densities vary on the speed scale max(|u|, x^{1/3}); the weight on μ ~ 1
    let scale = u.abs().max(x.cbrt()) / v;
    let breaks = [0.1 * scale, scale, 10.0 * scale, 1.0];
    let mut value = 0.0;
    if u != 0.0 {
        let reflected = numerics::try_integrate_split(
            |mu| {
                let w = weight(mu);
                Ok(if w == 0.0 { 0.0 } else { w * psi_rest(mu * v) })
            },
            &breaks,
            2.0,
            opts,
        )?;
        value += psi_rest(-v) - 1.5 / PI * reflected.value;
    }
    if x > 0.0 {
        let excess = |y: f64| occupation_excess(x, u, y, NESTED_TOL);
        let reflected = numerics::try_integrate_split(
            |mu| {
                let w = weight(mu);
                if w == 0.0 || mu * v == 0.0 {
                    return Ok(0.0);
                }
                Ok(w * excess(mu * v)?)
            },
            &breaks,
            2.0,
            opts,
        )?;
        value += excess(-v)? - 1.5 / PI * reflected.value;
    }
    Ok((v * value).max(0.0))
}

/// `H(x,u) = E_{x,u}[V₁^{2k}]`, the harmonic function of the conditioning.
///
/// Closed form `u^{2k}` on the boundary, quadrature of `(cv)^{2k} f_{x,u}(v)` otherwise.
pub fn harmonic_h(params: &ModelParams, x: f64, u: f64) -> Result<f64> {
    check_in_d(x, u)?;
    let two_k = 2.0 * params.k;
    if x == 0.0 {
        return Ok(u.powf(two_k));
    }
    let opts = QuadOptions {
        abs_tol: 1e-9,
        rel_tol: 1e-6,
        max_intervals: 1000,
    };
    let integral = numerics::try_integrate_to_infinity(
        |v| Ok((params.c * v).powf(two_k) * gorkov_hit_pdf(x, u, v)?),
        0.0,
        4.0,
        opts,
    )?;
    Ok(integral.value)
}

/// Constant `c'` in `P↑₁(T₁ > t) ~ c' t^{k-1/4}`:
/// `3 c^{2k} / (π^{3/2} 2^{3/4+k}) · (1+4k)/(1-4k) · Γ(1/4 + k)`.
pub fn t1_tail_const_up(params: &ModelParams) -> f64 {
    t1_tail_const(params.c, params.k)
}

/// Constant in `P₁(T₁ > t) ~ c'₀ t^{-1/4}` (the `k = 0` case of the tilted formula).
pub fn t1_tail_const_killed() -> f64 {
    t1_tail_const(1.0, 0.0)
}

fn t1_tail_const(c: f64, k: f64) -> f64 {
    3.0 * c.powf(2.0 * k) / (PI.powf(1.5) * 2f64.powf(0.75 + k)) * (1.0 + 4.0 * k) / (1.0 - 4.0 * k)
        * libm::tgamma(0.25 + k)
}
