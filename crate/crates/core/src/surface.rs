//! Integrals over `Σ*` against its induced volume element
//! `t^{2d−2} m(dη) dt`, by two independent estimators.
//!
//! * [`SurfaceMethod::Charts`]: `η` drawn exactly on `Σ¹`, radial integral
//!   `∫ t^{2d−2} g(tη) dt` by log-spaced Gauss–Legendre.
//! * [`SurfaceMethod::ThinSlab`]: directions `w` uniform on `S^{2d−1}`, kept
//!   when `|ω(w)| < ε`; the slab average converges like `ε²`, and two nested
//!   slabs evaluated on the same draws are combined to cancel that term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::IntegralEstimate;
use crate::geometry::{omega, sigma1_mass, sigma1_product_point};
use crate::mc::{run_stratified, sphere_area, substream, unit_sphere, StratifiedOptions, Stratum};
use crate::quadrature::{gauss_legendre, log_breaks, radial_extent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceMethod {
    Charts,
    ThinSlab,
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceOptions {
    /// Integrand evaluations, approximately.
    pub budget: u64,
    pub seed: u64,
    /// Outer slab half-width in `ω` on the unit sphere; the inner slab is half.
    pub eps_slab: f64,
    /// Log-radial panels per decade.
    pub per_decade: usize,
    /// Gauss nodes per panel.
    pub nodes: usize,
}

impl SurfaceOptions {
    pub fn new(budget: u64, seed: u64) -> Self {
        Self {
            budget,
            seed,
            eps_slab: 0.02,
            per_decade: 4,
            nodes: 12,
        }
    }
}

/// Composite log-radial rule for `∫_0^∞ t^{2d−2} g(tw) dt`.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub d: usize,
    pub lo: f64,
    pub hi: f64,
    nodes: Vec<(f64, f64)>,
}

impl RadialRule {
    /// Extent from the union over `probes` exact directions on `Σ¹`.
    pub fn fit<G>(d: usize, g: &G, probes: usize, seed: u64, per_decade: usize, n: usize) -> Result<Self>
    where
        G: Fn(&[f64]) -> f64 + ?Sized,
    {
        let mut rng = substream(seed, 0xAD1A, d as u64);
        let mut eta = vec![0.0; 2 * d];
        let mut z = vec![0.0; 2 * d];
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut any = false;
        for _ in 0..probes {
            sigma1_product_point(&mut rng, d, &mut eta);
            let mut profile = |t: f64| {
                z.iter_mut().zip(&eta).for_each(|(a, b)| *a = t * b);
                t.powi(2 * d as i32 - 2) * g(&z)
            };
            let mut zero = true;
            let mut p2 = |t: f64| {
                let v = profile(t);
                if v != 0.0 {
                    zero = false;
                }
                v
            };
            let (a, b) = radial_extent(&mut p2, 1e-15)?;
            if !zero {
                any = true;
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        if !any {
            lo = 1.0;
            hi = 2.0;
        }
        Ok(Self::on(d, lo, hi, per_decade, n))
    }

    /// At least eight panels, so that narrow supports are still resolved.
    pub fn on(d: usize, lo: f64, hi: f64, per_decade: usize, n: usize) -> Self {
        let decades = (hi / lo).log10();
        let per_decade = per_decade.max((8.0 / decades).ceil() as usize);
        let breaks = log_breaks(lo, hi, per_decade);
        let rule = gauss_legendre(n);
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * n);
        for w in breaks.windows(2) {
            let (a, b) = (w[0].ln(), w[1].ln());
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            for &(x, wt) in rule {
                let t = (mid + half * x).exp();
                // dt = t ds
                nodes.push((t, wt * half * t * t.powi(2 * d as i32 - 2)));
            }
        }
        Self { d, lo, hi, nodes }
    }

    pub fn evals(&self) -> usize {
        self.nodes.len()
    }

    /// `∫ t^{2d−2} g(t·dir) dt`; `buf` has length `2d`.
    pub fn integrate<G>(&self, g: &G, dir: &[f64], buf: &mut [f64]) -> f64
    where
        G: Fn(&[f64]) -> f64 + ?Sized,
    {
        let mut acc = 0.0;
        for &(t, w) in &self.nodes {
            buf.iter_mut().zip(dir).for_each(|(a, b)| *a = t * b);
            acc += w * g(buf);
        }
        acc
    }
}

/// `∫_{Σ*} g dσ`.
pub fn surface_integral<G>(d: usize, g: &G, method: SurfaceMethod, opts: SurfaceOptions) -> Result<IntegralEstimate>
where
    G: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if d == 0 || d > 16 {
        return Err(Error::Unsupported(format!("surface integral for d = {d}")));
    }
    let rule = RadialRule::fit(d, g, 64, opts.seed, opts.per_decade, opts.nodes)?;
    surface_integral_with(d, g, method, opts, &rule)
}

/// [`surface_integral`] with a caller-supplied radial rule.
pub fn surface_integral_with<G>(
    d: usize,
    g: &G,
    method: SurfaceMethod,
    opts: SurfaceOptions,
    rule: &RadialRule,
) -> Result<IntegralEstimate>
where
    G: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let per = rule.evals().max(1) as u64;
    let est = match method {
        SurfaceMethod::Charts => {
            let mass = sigma1_mass(d);
            let n = (opts.budget / per).max(64);
            let stratum = Stratum::new("charts", 4 * d, move |rng, buf| {
                let (eta, z) = buf.split_at_mut(2 * d);
                sigma1_product_point(rng, d, eta);
                mass * rule.integrate(g, eta, &mut z[..2 * d])
            });
            run_stratified(&[stratum], StratifiedOptions::new(n, opts.seed))
        }
        SurfaceMethod::ThinSlab => {
            let eps = opts.eps_slab;
            if !(eps > 0.0 && eps < 0.25) {
                return Err(Error::SlabTooWide {
                    eps_slab: eps,
                    limit: 0.25,
                });
            }
            let area = sphere_area(2 * d);
            let accept = (2.0 * eps * sigma1_mass(d) / area).min(1.0);
            let n = ((opts.budget as f64 / (per as f64 * accept)) as u64).max(1024);
            let (w_in, w_out) = (area * 3.5 / (3.0 * eps), -area * 0.5 / (3.0 * eps));
            let stratum = Stratum::new("thin_slab", 4 * d, move |rng, buf| {
                let (w, z) = buf.split_at_mut(2 * d);
                unit_sphere(rng, w);
                let om = omega(w).abs();
                if om >= eps {
                    return 0.0;
                }
                let weight = if om < 0.5 * eps { w_in } else { w_out };
                weight * rule.integrate(g, w, &mut z[..2 * d])
            });
            run_stratified(&[stratum], StratifiedOptions::new(n, opts.seed))
        }
    };
    if !est.value.is_finite() {
        return Err(Error::NonIntegrableProfile("surface estimate is not finite".into()));
    }
    Ok(est)
}
