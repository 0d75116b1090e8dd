//! Scalar root finding and adaptive quadrature.
//!
//! Both routines are small, dependency-free and deterministic. The quadrature
//! is a globally adaptive 7/15-point Gauss–Kronrod scheme: the interval with
//! the largest error estimate is bisected until the summed estimate meets
//! `max(abs_tol, rel_tol * |value|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Brent's method on a bracketing interval `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them vanish).
pub fn brent<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when a == c
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Ok(b)
}

/// Options for [`integrate`] and friends.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    if !value.is_finite() {
        return Err(Error::Quadrature {
            tol: 0.0,
            err: f64::INFINITY,
        });
    }
    Ok(Panel { a, b, value, err })
}

/// Adaptive integration of a fallible integrand over a finite interval.
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    let first = gk15(&mut f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.err;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                tol: opts.abs_tol.max(opts.rel_tol * total.abs()),
                err: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision; accept what we have
            heap.push(worst);
            break;
        }
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed accumulated cancellation
    let (value, abs_err) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
    Ok(Integral { value, abs_err })
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, opts)
}

/// Integral over `[a, ∞)`.
///
/// `[a, a + 1]` is integrated directly; the tail uses `x = a + 1 + (w^-power - 1)`
/// for `w` in `(0, 1]`, which turns an algebraic decay `x^-q` into a bounded
/// integrand whenever `power >= 1 / (q - 1)`.
pub fn try_integrate_to_infinity<F>(mut f: F, a: f64, power: f64, opts: QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let head = try_integrate(&mut f, a, a + 1.0, opts)?;
    let tail = try_integrate(
        |w| {
            let x = a + w.powf(-power);
            let jac = power * w.powf(-power - 1.0);
            let fx = f(x)?;
            Ok(if fx == 0.0 { 0.0 } else { fx * jac })
        },
        0.0,
        1.0,
        opts,
    )?;
    Ok(Integral {
        value: head.value + tail.value,
        abs_err: head.abs_err + tail.abs_err,
    })
}

pub fn integrate_to_infinity<F>(mut f: F, a: f64, power: f64, opts: QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_to_infinity(|x| Ok(f(x)), a, power, opts)
}

fn sorted_breaks(breaks: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > a && *p < b)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Integral over `[a, b]` with the interval cut at the given interior points.
///
/// Breakpoints mark scales where the integrand changes shape. Points outside
/// `(a, b)`, non-finite or duplicate entries are ignored.
pub fn try_integrate_breaks<F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut total = Integral {
        value: 0.0,
        abs_err: 0.0,
    };
    let mut lo = a;
    for hi in sorted_breaks(breaks, a, b).into_iter().chain(std::iter::once(b)) {
        let part = try_integrate(&mut f, lo, hi, opts)?;
        total.value += part.value;
        total.abs_err += part.abs_err;
        lo = hi;
    }
    Ok(total)
}

/// Integral over `[0, ∞)` cut at `breaks`, with the last piece mapped as in
/// [`try_integrate_to_infinity`]. The largest break should sit where the
/// integrand has already decayed; the mapped tail is not searched for features.
pub fn try_integrate_split<F>(mut f: F, breaks: &[f64], power: f64, opts: QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let points = sorted_breaks(breaks, 0.0, f64::INFINITY);
    let last = points.last().copied().unwrap_or(0.0);
    let mut total = try_integrate_breaks(&mut f, 0.0, last, &points, opts)?;
    let tail = try_integrate_to_infinity(&mut f, last, power, opts)?;
    total.value += tail.value;
    total.abs_err += tail.abs_err;
    Ok(total)
}
