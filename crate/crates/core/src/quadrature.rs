//! Deterministic one-dimensional quadrature building blocks.
//!
//! Everything here is composite Gauss–Legendre on caller-supplied panels. Peaked
//! integrands (Lorentzian fibers, principal values) are handled by clustering
//! panel breakpoints geometrically toward the peak and doubling the node count
//! per panel until successive results agree.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::{Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

use std::f64::consts::PI;

/// Values a quadrature rule can accumulate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + AddAssign + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

type RuleCache = Mutex<HashMap<usize, &'static [(f64, f64)]>>;

/// Gauss–Legendre nodes and weights on [-1, 1], cached per degree.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| {
        let degree = NonZeroUsize::new(n.max(1)).expect("nonzero degree");
        let rule = GaussLegendre::new(degree);
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Box::leak(pairs.into_boxed_slice())
    })
}

/// Composite rule: `n` Gauss nodes on every panel `[breaks[i], breaks[i+1]]`.
pub fn integrate_panels<T, F>(f: &mut F, breaks: &[f64], n: usize) -> T
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let rule = gauss_legendre(n);
    let mut total = T::default();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut panel = T::default();
        for &(x, wt) in rule {
            panel += f(mid + half * x) * wt;
        }
        total += panel * half;
    }
    total
}

/// Doubling refinement of [`integrate_panels`] until the relative change drops
/// below `rel_tol` (or the absolute change below `abs_tol`).
pub fn integrate_adaptive<T, F>(mut f: F, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> Result<(T, f64)>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let mut n = 8;
    let mut prev: T = integrate_panels(&mut f, breaks, n);
    while n < 512 {
        n *= 2;
        let cur: T = integrate_panels(&mut f, breaks, n);
        let change = (cur - prev).magnitude();
        if change <= rel_tol * cur.magnitude() || change <= abs_tol {
            return Ok((cur, change));
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergent(format!(
        "no convergence after {n} nodes per panel on {} panels",
        breaks.len().saturating_sub(1)
    )))
}

/// Breakpoints on `[a, b]` clustered geometrically toward `center`, with the
/// innermost panels no wider than `min_width`.
pub fn clustered_breaks(a: f64, b: f64, center: f64, min_width: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    if center > a && center < b {
        pts.push(center);
    }
    let h0 = min_width.max((b - a) * 1e-14);
    for side in [-1.0, 1.0] {
        let mut h = h0;
        loop {
            let p = center + side * h;
            if p <= a || p >= b {
                break;
            }
            pts.push(p);
            h *= 2.0;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
    pts
}

/// Merge several breakpoint sets on a common interval.
pub fn merge_breaks(sets: &[Vec<f64>]) -> Vec<f64> {
    let mut pts: Vec<f64> = sets.iter().flatten().copied().collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
    pts
}

/// Evenly spaced breakpoints in `ln t` over `[lo, hi]`, `per_decade` panels per decade.
pub fn log_breaks(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo);
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let (la, lb) = (lo.ln(), hi.ln());
    (0..=n).map(|i| (la + (lb - la) * i as f64 / n as f64).exp()).collect()
}

/// Integral over `[lo, hi]` in the variable `s = ln t` (integrand `t·f(t)`).
pub fn integrate_log<F>(mut f: F, lo: f64, hi: f64, per_decade: usize, n: usize) -> f64
where
    F: FnMut(f64) -> f64,
{
    let breaks: Vec<f64> = log_breaks(lo, hi, per_decade).iter().map(|t| t.ln()).collect();
    integrate_panels(
        &mut |s: f64| {
            let t = s.exp();
            t * f(t)
        },
        &breaks,
        n,
    )
}

/// Locate a finite integration extent for a nonnegative radial profile.
///
/// `profile(t)` is the integrand in `dt`; the search works with `t·profile(t)`,
/// the density in `ln t`, probed on a quarter-octave grid. Returns `(t_lo, t_hi)` outside of which the log-density
/// stays below `rel_cut` times its maximum over the probed range.
pub fn radial_extent<F>(mut profile: F, rel_cut: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    // Quarter-octave probes from 2^-60 to 2^60.
    const KMIN: i32 = -240;
    const KMAX: i32 = 240;
    let vals: Vec<(f64, f64)> = (KMIN..=KMAX)
        .map(|k| {
            let t = 2f64.powf(k as f64 / 4.0);
            (t, t * profile(t).abs())
        })
        .collect();
    let peak = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    if !peak.is_finite() {
        return Err(Error::NonIntegrableProfile("profile is not finite".into()));
    }
    if peak == 0.0 {
        return Ok((1.0, 2.0));
    }
    let cut = rel_cut * peak;
    let first = vals.iter().position(|v| v.1 > cut).unwrap_or(0);
    let last = vals.iter().rposition(|v| v.1 > cut).unwrap_or(vals.len() - 1);
    // Mass must fall off at both ends of the probed range.
    let tail_frac = 1e-6;
    if vals[vals.len() - 1].1 > tail_frac * peak {
        return Err(Error::NonIntegrableProfile(format!(
            "log-density at t = {:e} is {:e} of its peak",
            vals[vals.len() - 1].0,
            vals[vals.len() - 1].1 / peak
        )));
    }
    if vals[0].1 > tail_frac * peak {
        return Err(Error::NonIntegrableProfile(format!(
            "log-density at t = {:e} is {:e} of its peak",
            vals[0].0,
            vals[0].1 / peak
        )));
    }
    let lo = vals[first.saturating_sub(1)].0;
    let hi = vals[(last + 1).min(vals.len() - 1)].0;
    Ok((lo, hi))
}

/// Directions and weights on `S^{d−1}` (`d = 2, 3`) at refinement `level`: trapezoid in
/// the angle for `d = 2`; Gauss in `cos ϑ` times trapezoid in `φ` for `d = 3`.
pub fn sphere_rule(d: usize, level: u32) -> Vec<([f64; 3], f64)> {
    match d {
        2 => {
            let n = 16usize << level;
            let w = 2.0 * PI / n as f64;
            (0..n)
                .map(|i| {
                    let a = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                    ([a.cos(), a.sin(), 0.0], w)
                })
                .collect()
        }
        _ => {
            let n = 8usize << level;
            let m = 2 * n;
            let wp = 2.0 * PI / m as f64;
            let mut out = Vec::with_capacity(n * m);
            for &(c, wc) in gauss_legendre(n) {
                let s = (1.0 - c * c).sqrt();
                for j in 0..m {
                    let p = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                    out.push(([s * p.cos(), s * p.sin(), c], wc * wp));
                }
            }
            out
        }
    }
}
