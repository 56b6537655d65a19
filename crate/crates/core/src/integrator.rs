//! Direct evaluation of
//!
//! ```text
//! I_ν = ∫_{R^{2d}} F(z) / (ω(z)² + ν² Γ(z)²) dz
//! ```
//!
//! by stratified importance sampling, plus the near-origin bound and the
//! one-dimensional fiber integrals across the tube.
//!
//! Strata (membership by `|z|` and the normal coordinate `θ(z)`):
//!
//! * origin ball `|z| ≤ δ₀`, `δ₀ = max(2ν, 10⁻²)`, uniform;
//! * tube `|θ| < θ₀`, `|z| > δ₀`: `z = π(tη, θ)` with `η` exact on `Σ¹`,
//!   `t` log-stratified and `θ` from a Cauchy law of scale `ε = νΓ(tη)/t²`
//!   truncated to `|θ| < θ₀`;
//! * exterior `|θ| ≥ θ₀`, `|z| > δ₀`: log-stratified radius, uniform direction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::IntegralEstimate;
use crate::fields::{norm, norm_sq, ProblemSpec};
use crate::geometry::{
    mu_closed_form, omega, pi_map_into, sigma1_mass, sigma1_product_point, theta_of, QuadricPoint, THETA0_STAR,
};
use crate::mc::{
    ball_volume, run_stratified, sphere_area, substream, uniform_ball, unit_sphere, StratifiedOptions, Stratum,
};
use crate::quadrature::{clustered_breaks, integrate_adaptive, log_breaks, merge_breaks, radial_extent};

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    /// Total samples across all strata.
    pub budget: u64,
    pub seed: u64,
    /// Tube half-width.
    pub theta0: f64,
    /// Stop once `std_error ≤ rel_tol·|value|`.
    pub rel_tol: Option<f64>,
    /// Radial strata per decade for the tube and exterior.
    pub strata_per_decade: usize,
}

impl IntegratorOptions {
    pub fn new(budget: u64, seed: u64) -> Self {
        Self {
            budget,
            seed,
            theta0: THETA0_STAR,
            rel_tol: None,
            strata_per_decade: 6,
        }
    }
}

/// `δ₀ = max(2ν, 10⁻²)`.
pub fn origin_radius(nu: f64) -> f64 {
    (2.0 * nu).max(1e-2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Origin,
    Tube,
    Exterior,
}

impl Region {
    pub fn id(self) -> &'static str {
        match self {
            Region::Origin => "origin",
            Region::Tube => "tube",
            Region::Exterior => "exterior",
        }
    }
}

/// Stratum of `z` for the given origin radius and tube width.
pub fn classify(z: &[f64], delta0: f64, theta0: f64) -> Region {
    if norm_sq(z) <= delta0 * delta0 {
        Region::Origin
    } else if theta_of(z).abs() < theta0 {
        Region::Tube
    } else {
        Region::Exterior
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::NuOutOfRange(nu));
    }
    Ok(())
}

/// `F(z) / (ω² + ν²Γ²)`.
#[inline]
pub fn integrand(spec: &ProblemSpec, nu: f64, z: &[f64]) -> f64 {
    let f = spec.f.eval(z);
    if f == 0.0 {
        return 0.0;
    }
    let om = omega(z);
    let g = spec.gamma.eval(z);
    f / (om * om + nu * nu * g * g)
}

/// Upper radius beyond which the integrand carries negligible mass, from the
/// leading-order radial profile `t^{2d−3}|F|/Γ` on `Σ¹` and the exterior
/// profile `r^{2d−1}|F|/(r⁴θ₀²/4 + ν²Γ²)` on `S^{2d−1}`.
pub fn radial_cutoff(spec: &ProblemSpec, nu: f64, theta0: f64, seed: u64) -> Result<f64> {
    if let Some(r) = spec.f.support_radius {
        return Ok(r.max(1e-300) * (1.0 + 1e-12));
    }
    let d = spec.d;
    let n = 2 * d;
    let mut rng = substream(seed, 0xC0FF, d as u64);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut hi: f64 = 1.0;
    for k in 0..64 {
        if k % 2 == 0 {
            sigma1_product_point(&mut rng, d, &mut w);
        } else {
            unit_sphere(&mut rng, &mut w);
        }
        let on_sigma = k % 2 == 0;
        let profile = |t: f64| {
            z.iter_mut().zip(&w).for_each(|(a, b)| *a = t * b);
            let f = spec.f.eval(&z).abs();
            let g = spec.gamma.eval(&z);
            if on_sigma {
                t.powi(n as i32 - 3) * f / g
            } else {
                t.powi(n as i32 - 1) * f / (0.25 * t.powi(4) * theta0 * theta0 + nu * nu * g * g)
            }
        };
        let (_, b) = radial_extent(profile, 1e-15)?;
        hi = hi.max(b);
    }
    Ok(hi)
}

/// Unbiased estimate of `I_ν`.
pub fn evaluate_i_nu(spec: &ProblemSpec, nu: f64, opts: IntegratorOptions) -> Result<IntegralEstimate> {
    check_nu(nu)?;
    if spec.f.is_zero_field() {
        return Ok(IntegralEstimate::exact(0.0));
    }
    let strata = build_strata(spec, nu, &opts)?;
    let mut so = StratifiedOptions::new(opts.budget, opts.seed);
    so.rel_tol = opts.rel_tol;
    Ok(run_stratified(&strata, so))
}

/// The tube region split into `t ≤ t_cut` and `t > t_cut`, both reported as
/// separate groups `tube` and `tube_tail` (used for the `r* > 2` diagnostic).
pub fn evaluate_i_nu_split(
    spec: &ProblemSpec,
    nu: f64,
    t_cut: f64,
    opts: IntegratorOptions,
) -> Result<IntegralEstimate> {
    check_nu(nu)?;
    if spec.f.is_zero_field() {
        return Ok(IntegralEstimate::exact(0.0));
    }
    let strata = build_strata_with_cut(spec, nu, &opts, Some(t_cut))?;
    let mut so = StratifiedOptions::new(opts.budget, opts.seed);
    so.rel_tol = opts.rel_tol;
    Ok(run_stratified(&strata, so))
}

fn build_strata<'a>(spec: &'a ProblemSpec, nu: f64, opts: &IntegratorOptions) -> Result<Vec<Stratum<'a>>> {
    build_strata_with_cut(spec, nu, opts, None)
}

fn build_strata_with_cut<'a>(
    spec: &'a ProblemSpec,
    nu: f64,
    opts: &IntegratorOptions,
    t_cut: Option<f64>,
) -> Result<Vec<Stratum<'a>>> {
    let d = spec.d;
    let n = 2 * d;
    let theta0 = opts.theta0;
    let delta0 = origin_radius(nu);
    let big_t = radial_cutoff(spec, nu, theta0, opts.seed)?.max(2.0 * delta0);
    let mut strata: Vec<Stratum<'a>> = Vec::new();

    let vol = ball_volume(n) * delta0.powi(n as i32);
    strata.push(Stratum::new("origin", n, move |rng, z| {
        uniform_ball(rng, delta0, z);
        vol * integrand(spec, nu, z)
    }));

    let t_lo = delta0 / (1.0 + theta0 * theta0).sqrt();
    if big_t > t_lo {
        let mut tb = log_breaks(t_lo, big_t, opts.strata_per_decade);
        if let Some(c) = t_cut {
            if c > t_lo && c < big_t {
                tb = merge_breaks(&[tb, vec![c]]);
            }
        }
        let mass = sigma1_mass(d);
        for w in tb.windows(2) {
            let (a, b) = (w[0], w[1]);
            let group = match t_cut {
                Some(c) if a >= c => "tube_tail",
                _ => "tube",
            };
            let span = (b / a).ln();
            strata.push(Stratum::new(group, 3 * n, move |rng, buf| {
                tube_sample(spec, nu, theta0, delta0, a, span, mass, rng, buf)
            }));
        }
    }

    let area = sphere_area(n);
    for w in log_breaks(delta0, big_t.max(2.0 * delta0), opts.strata_per_decade).windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = (b / a).ln();
        strata.push(Stratum::new("exterior", n, move |rng, z| {
            unit_sphere(rng, z);
            if theta_of(z).abs() < theta0 {
                return 0.0;
            }
            let u: f64 = rng.random();
            let r = a * (u * span).exp();
            z.iter_mut().for_each(|v| *v *= r);
            integrand(spec, nu, z) * r.powi(n as i32) * span * area
        }));
    }
    Ok(strata)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn tube_sample(
    spec: &ProblemSpec,
    nu: f64,
    theta0: f64,
    delta0: f64,
    t_a: f64,
    span: f64,
    mass: f64,
    rng: &mut crate::mc::McRng,
    buf: &mut [f64],
) -> f64 {
    let d = spec.d;
    let n = 2 * d;
    let (eta, rest) = buf.split_at_mut(n);
    let (xi, z) = rest.split_at_mut(n);
    sigma1_product_point(rng, d, eta);
    let u: f64 = rng.random();
    let t = t_a * (u * span).exp();
    xi.iter_mut().zip(eta.iter()).for_each(|(a, b)| *a = t * b);
    let g0 = spec.gamma.eval(xi);
    let t2 = t * t;
    let eps = nu * g0 / t2;
    let at = (theta0 / eps).atan();
    let v: f64 = rng.random();
    let theta = eps * ((2.0 * v - 1.0) * at).tan();
    pi_map_into(xi, theta, z);
    if norm_sq(z) <= delta0 * delta0 {
        return 0.0;
    }
    let f = spec.f.eval(z);
    if f == 0.0 {
        return 0.0;
    }
    let g = spec.gamma.eval(z);
    let zc = 2.0 * at / eps;
    let lorentz = (theta * theta + eps * eps) / (t2 * t2 * theta * theta + nu * nu * g * g);
    f * t.powi(n as i32 - 1) * mu_closed_form(d, theta) * zc * lorentz * t * span * mass
}

/// Single-stratum estimator: `z = r w` with `w` uniform on `S^{2d−1}` and `r`
/// log-uniform on `[r_min, T]`. The ball `|z| < r_min` is skipped; its
/// contribution is at most `vol(B_{r_min}) max|F| / (ν² min Γ²)`.
pub fn evaluate_i_nu_plain(
    spec: &ProblemSpec,
    nu: f64,
    r_min: f64,
    budget: u64,
    seed: u64,
) -> Result<IntegralEstimate> {
    check_nu(nu)?;
    let n = 2 * spec.d;
    let big_t = radial_cutoff(spec, nu, THETA0_STAR, seed)?.max(2.0 * r_min);
    let span = (big_t / r_min).ln();
    let area = sphere_area(n);
    let stratum = Stratum::new("plain", n, move |rng, z| {
        unit_sphere(rng, z);
        let u: f64 = rng.random();
        let r = r_min * (u * span).exp();
        z.iter_mut().for_each(|v| *v *= r);
        integrand(spec, nu, z) * r.powi(n as i32) * span * area
    });
    let mut so = StratifiedOptions::new(budget, seed);
    so.pilot_fraction = 1.0;
    Ok(run_stratified(&[stratum], so))
}

/// Lemma-type bound on the contribution of `K_δ = {|x| ≤ δ, |y| ≤ δ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearOriginBound {
    pub bound: f64,
    pub empirical: IntegralEstimate,
    /// `max|F|` on `K_δ` (sampled, with a 10% margin).
    pub c1: f64,
    /// `min Γ` on `K_δ` (sampled, with a 10% margin).
    pub gamma_min: f64,
}

/// Analytic bound `C₁ π ω_{d−1} |S^{d−1}| δ^{2d−2} / ((d−1) C ν)` and an MC
/// estimate of `∫_{K_δ} F/(ω² + ν²Γ²)`.
///
/// The bound integrates `1/(|x|²y₁² + ν²C²)` exactly over `y₁ ∈ R`, bounds the
/// transverse `y` by a `(d−1)`-ball and integrates `|x|⁻¹` over the `x`-ball.
pub fn near_origin_bound(spec: &ProblemSpec, nu: f64, delta: f64, budget: u64, seed: u64) -> Result<NearOriginBound> {
    check_nu(nu)?;
    let d = spec.d;
    if d < 2 {
        return Err(Error::Unsupported("near-origin bound needs d >= 2".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::BadParams {
            field: "delta".into(),
            reason: format!("need 0 < delta <= 1, got {delta}"),
        });
    }
    let n = 2 * d;
    let (mut fmax, mut gmin) = (0.0f64, f64::INFINITY);
    {
        let mut rng = substream(seed, 0xB0, 0);
        let mut z = vec![0.0; n];
        for _ in 0..20_000 {
            uniform_ball(&mut rng, delta, &mut z[..d]);
            uniform_ball(&mut rng, delta, &mut z[d..]);
            fmax = fmax.max(spec.f.eval(&z).abs());
            gmin = gmin.min(spec.gamma.eval(&z));
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        fmax = fmax.max(spec.f.eval(&z).abs());
        gmin = gmin.min(spec.gamma.eval(&z));
    }
    let c1 = 1.1 * fmax;
    let gamma_min = gmin / 1.1;
    let bound = c1 * std::f64::consts::PI * ball_volume(d - 1) * sphere_area(d) * delta.powi(n as i32 - 2)
        / ((d - 1) as f64 * gamma_min * nu);

    let vol_x = ball_volume(d) * delta.powi(d as i32);
    let g_origin = spec.gamma.eval(&vec![0.0; n]);
    let stratum = Stratum::new("k_delta", 3 * n, move |rng, buf| {
        let (z, rest) = buf.split_at_mut(n);
        let (ex, ybuf) = rest.split_at_mut(n);
        uniform_ball(rng, delta, &mut z[..d]);
        let xn = norm(&z[..d]);
        if xn == 0.0 {
            return 0.0;
        }
        // Orthonormal frame with first vector x̂.
        ex[..d].iter_mut().zip(&z[..d]).for_each(|(e, x)| *e = x / xn);
        let s = nu * g_origin / xn;
        let at = (delta / s).atan();
        let v: f64 = rng.random();
        let y1 = s * ((2.0 * v - 1.0) * at).tan();
        let rperp = (delta * delta - y1 * y1).max(0.0).sqrt();
        let mut perp = [0.0f64; 16];
        if d > 1 {
            uniform_ball(rng, rperp, &mut perp[..d - 1]);
        }
        // y = y1 x̂ + Σ perp_k e_k with e_k spanning x̂^⊥ (Householder reflection).
        let y = &mut ybuf[..d];
        householder_apply(&ex[..d], y1, &perp[..d - 1], y);
        z[d..].copy_from_slice(y);
        let zc = 2.0 * at / s;
        let vperp = ball_volume(d - 1) * rperp.powi(d as i32 - 1);
        integrand(spec, nu, z) * vol_x * zc * (y1 * y1 + s * s) * vperp
    });
    let empirical = run_stratified(&[stratum], StratifiedOptions::new(budget, seed));
    if empirical.value > bound {
        return Err(Error::BoundViolated {
            bound,
            empirical: empirical.value,
        });
    }
    Ok(NearOriginBound {
        bound,
        empirical,
        c1,
        gamma_min,
    })
}

/// `y = Q (y1, perp)` for the orthogonal `Q` whose first column is the unit
/// vector `u`.
fn householder_apply(u: &[f64], y1: f64, perp: &[f64], y: &mut [f64]) {
    let d = u.len();
    // Reflection H with H e₁ = u: H = I − 2 v vᵀ/(vᵀv), v = e₁ − u.
    let mut w = vec![0.0; d];
    w[0] = y1;
    w[1..].copy_from_slice(perp);
    let mut v = vec![0.0; d];
    v[0] = 1.0 - u[0];
    for i in 1..d {
        v[i] = -u[i];
    }
    let vv: f64 = v.iter().map(|a| a * a).sum();
    if vv < 1e-30 {
        y.copy_from_slice(&w);
        return;
    }
    let vw: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
    for i in 0..d {
        y[i] = w[i] - 2.0 * v[i] * vw / vv;
    }
}

/// One fiber of the tube at base point `tη`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberDiagnostics {
    pub eta: QuadricPoint,
    pub t: f64,
    /// `ε = ν t⁻² Γ(tη)`
    pub epsilon: f64,
    pub theta_bar_0: f64,
    /// `∫_{|θ|<θ₀} F μ / (t⁴θ² + ν²Γ²) dθ`
    pub j_nu: f64,
    /// Frozen integrand: `2 t⁻⁴ F(tη) ε⁻¹ arctan(θ₀/ε)`
    pub j_0m: f64,
    /// `π ν⁻¹ t⁻² (F/Γ)(tη)`
    pub j_leading: f64,
}

/// `J_ν` over `|θ| < θ₀`, optionally excluding `|π(tη, θ)| ≤ min_radius`.
pub fn fiber_j_nu(spec: &ProblemSpec, nu: f64, eta: &[f64], t: f64, theta0: f64, min_radius: f64) -> Result<f64> {
    let d = spec.d;
    let n = 2 * d;
    let xi: Vec<f64> = eta.iter().map(|v| t * v).collect();
    let eps = nu * spec.gamma.eval(&xi) / (t * t);
    let mut breaks = clustered_breaks(-theta0, theta0, 0.0, eps / 8.0);
    // |π(tη, θ)|² = t²(1 + θ²); drop the part inside the origin ball.
    let cut = if min_radius > t {
        ((min_radius / t).powi(2) - 1.0).sqrt()
    } else {
        0.0
    };
    if cut >= theta0 {
        return Ok(0.0);
    }
    if cut > 0.0 {
        breaks.retain(|b| b.abs() > cut);
        breaks = merge_breaks(&[breaks, vec![-cut, cut]]);
    }
    let mut z = vec![0.0; n];
    let f = |theta: f64| {
        if theta.abs() < cut {
            return 0.0;
        }
        pi_map_into(&xi, theta, &mut z);
        let fv = spec.f.eval(&z);
        if fv == 0.0 {
            return 0.0;
        }
        let g = spec.gamma.eval(&z);
        let t2 = t * t;
        fv * mu_closed_form(d, theta) / (t2 * t2 * theta * theta + nu * nu * g * g)
    };
    let (v, _) = integrate_adaptive(f, &breaks, 1e-8, 0.0)?;
    Ok(v)
}

/// Fiber integral and its two closed-form approximations.
pub fn fiber_integral(
    spec: &ProblemSpec,
    nu: f64,
    eta: &QuadricPoint,
    t: f64,
    theta0: f64,
) -> Result<FiberDiagnostics> {
    if !(t > 0.0) {
        return Err(Error::BadParams {
            field: "t".into(),
            reason: format!("need t > 0, got {t}"),
        });
    }
    check_nu(nu)?;
    let e = eta.to_z();
    let xi: Vec<f64> = e.iter().map(|v| t * v).collect();
    let f0 = spec.f.eval(&xi);
    let g0 = spec.gamma.eval(&xi);
    let eps = nu * g0 / (t * t);
    let t4 = t.powi(4);
    let j_nu = fiber_j_nu(spec, nu, &e, t, theta0, 0.0)?;
    Ok(FiberDiagnostics {
        eta: eta.clone(),
        t,
        epsilon: eps,
        theta_bar_0: theta0,
        j_nu,
        j_0m: 2.0 * f0 / (t4 * eps) * (theta0 / eps).atan(),
        j_leading: std::f64::consts::PI * f0 / (nu * g0 * t * t),
    })
}

/// `∫_{Σ¹} m(dη) ∫ t^{2d−1} J_ν(η, t) dt` over the tube outside the origin
/// ball, by exact `η` sampling and deterministic `(t, θ)` quadrature.
pub fn tube_by_fibers(spec: &ProblemSpec, nu: f64, n_eta: usize, seed: u64, theta0: f64) -> Result<IntegralEstimate> {
    check_nu(nu)?;
    let d = spec.d;
    let n = 2 * d;
    let delta0 = origin_radius(nu);
    let t_lo = delta0 / (1.0 + theta0 * theta0).sqrt();
    let big_t = radial_cutoff(spec, nu, theta0, seed)?.max(2.0 * delta0);
    let mut tb = log_breaks(t_lo, big_t, 8);
    tb = merge_breaks(&[tb, vec![delta0]]);
    let mass = sigma1_mass(d);
    let mut rng = substream(seed, 0xF1B, 0);
    let mut etas = Vec::with_capacity(n_eta);
    for _ in 0..n_eta {
        let mut e = vec![0.0; n];
        sigma1_product_point(&mut rng, d, &mut e);
        etas.push(e);
    }
    use rayon::prelude::*;
    let vals: Vec<Result<f64>> = etas
        .par_iter()
        .map(|e| {
            let mut err = None;
            let lb: Vec<f64> = tb.iter().map(|t| t.ln()).collect();
            let radial = |s: f64| {
                let t = s.exp();
                match fiber_j_nu(spec, nu, e, t, theta0, delta0) {
                    Ok(j) => t * t.powi(n as i32 - 1) * j,
                    Err(er) => {
                        err = Some(er);
                        0.0
                    }
                }
            };
            let (v, _) = integrate_adaptive(radial, &lb, 1e-7, 0.0)?;
            match err {
                Some(e) => Err(e),
                None => Ok(mass * v),
            }
        })
        .collect();
    let mut xs = Vec::with_capacity(n_eta);
    for v in vals {
        xs.push(v?);
    }
    let mean = xs.iter().sum::<f64>() / n_eta as f64;
    let var = if n_eta > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_eta - 1) as f64
    } else {
        0.0
    };
    Ok(IntegralEstimate {
        value: mean,
        std_error: (var / n_eta as f64).sqrt(),
        n_samples: n_eta as u64,
        strata: Vec::new(),
        converged: true,
    })
}

/// The three fiber inequalities over an `(η, t)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberGridReport {
    pub nus: Vec<f64>,
    pub ts: Vec<f64>,
    pub n_eta: usize,
    /// `|J_0m| ≤ π ε⁻¹ t⁻⁴ |F|` at every point.
    pub trivial_ok: bool,
    /// Points with `ε ≤ θ₀/2`, where the two other bounds apply.
    pub checked: usize,
    /// `0 < J_leading − J_0m < (2/θ₀) t⁻⁴ F` where `F > 0`.
    pub leading_gap_ok: bool,
    /// `C` in `|J_ν − J_leading| ≤ C (1+t)^{−M} t⁻⁴ θ₀⁻¹`, fitted at the
    /// first `η`, `t = t_fit` and the smallest `ν`, times `margin`.
    pub c_fit: f64,
    pub t_fit: f64,
    pub margin: f64,
    /// Largest `|J_ν − J_leading| t⁴ θ₀ (1+t)^M / C` over the grid.
    pub worst_ratio: f64,
    pub decay_ok: bool,
}

impl FiberGridReport {
    pub fn passed(&self) -> bool {
        self.trivial_ok && self.leading_gap_ok && self.decay_ok
    }
}

/// Evaluate [`fiber_integral`] on `n_eta` exact `Σ¹` directions times `ts`
/// for each `ν`, and test the three bounds. `M` is the declared decay of `F`.
#[allow(clippy::too_many_arguments)]
pub fn fiber_grid_check(
    spec: &ProblemSpec,
    nus: &[f64],
    n_eta: usize,
    ts: &[f64],
    theta0: f64,
    t_fit: f64,
    margin: f64,
    seed: u64,
) -> Result<FiberGridReport> {
    let d = spec.d;
    let m = spec.f.decay_m;
    let mut rng = substream(seed, 0xF16, 0);
    let mut etas = Vec::with_capacity(n_eta);
    for _ in 0..n_eta {
        let mut e = vec![0.0; 2 * d];
        sigma1_product_point(&mut rng, d, &mut e);
        etas.push(QuadricPoint::from_z(&e)?);
    }
    let nu_fit = nus.iter().copied().fold(f64::INFINITY, f64::min);
    let scaled = |fd: &FiberDiagnostics| {
        let t = fd.t;
        (fd.j_nu - fd.j_leading).abs() * t.powi(4) * theta0 * (1.0 + t).powf(m)
    };
    let c_fit = margin * scaled(&fiber_integral(spec, nu_fit, &etas[0], t_fit, theta0)?);
    let mut out = FiberGridReport {
        nus: nus.to_vec(),
        ts: ts.to_vec(),
        n_eta,
        trivial_ok: true,
        checked: 0,
        leading_gap_ok: true,
        c_fit,
        t_fit,
        margin,
        worst_ratio: 0.0,
        decay_ok: true,
    };
    for &nu in nus {
        for eta in &etas {
            for &t in ts {
                let fd = fiber_integral(spec, nu, eta, t, theta0)?;
                let xi: Vec<f64> = eta.to_z().iter().map(|v| t * v).collect();
                let f0 = spec.f.eval(&xi);
                let t4 = t.powi(4);
                out.trivial_ok &= fd.j_0m.abs() <= std::f64::consts::PI * f0.abs() / (fd.epsilon * t4) * (1.0 + 1e-12);
                if fd.epsilon > theta0 / 2.0 {
                    continue;
                }
                out.checked += 1;
                if f0 > 0.0 {
                    let gap = fd.j_leading - fd.j_0m;
                    out.leading_gap_ok &= gap > 0.0 && gap < 2.0 / theta0 * f0 / t4;
                }
                let r = scaled(&fd) / c_fit;
                out.worst_ratio = out.worst_ratio.max(r);
            }
        }
    }
    out.decay_ok = out.worst_ratio <= 1.0;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{gaussian, poly_growth, ScalarField, WeightField};
    use crate::geometry::{sample_sigma1, Sigma1Scheme};
    use std::f64::consts::PI;

    fn gauss_spec(d: usize) -> ProblemSpec {
        ProblemSpec::new(gaussian(2 * d), WeightField::constant(2 * d, 1.0), d).unwrap()
    }

    #[test]
    fn rejects_bad_nu() {
        let spec = gauss_spec(2);
        for nu in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                evaluate_i_nu(&spec, nu, IntegratorOptions::new(1000, 1)),
                Err(Error::NuOutOfRange(_))
            ));
        }
    }

    #[test]
    fn zero_field_is_exactly_zero() {
        let spec = ProblemSpec::new(ScalarField::zero(4), WeightField::constant(4, 1.0), 2).unwrap();
        let est = evaluate_i_nu(&spec, 0.1, IntegratorOptions::new(1000, 1)).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn gaussian_at_nu_tenth_matches_polar_oracle() {
        // Independent 2-D (|x+y|, |x−y|) quadrature: I_0.1 = 224.4057.
        let est = evaluate_i_nu(&gauss_spec(2), 0.1, IntegratorOptions::new(2_000_000, 4)).unwrap();
        assert!(
            (est.value - 224.4057).abs() < 4.0 * est.std_error + 1e-3 * 224.4,
            "{est:?}"
        );
        assert!(est.std_error / est.value < 5e-3);
    }

    #[test]
    fn partition_is_exhaustive_and_exclusive() {
        let mut rng = substream(9, 0, 0);
        let mut z = [0.0; 4];
        let mut counts = [0usize; 3];
        for i in 0..100_000 {
            unit_sphere(&mut rng, &mut z);
            let r = 10f64.powf(-3.0 + 4.0 * (i as f64) / 1e5);
            z.iter_mut().for_each(|v| *v *= r);
            let region = classify(&z, 0.02, 0.1);
            let inside = [
                norm_sq(&z) <= 4e-4,
                norm_sq(&z) > 4e-4 && theta_of(&z).abs() < 0.1,
                norm_sq(&z) > 4e-4 && theta_of(&z).abs() >= 0.1,
            ];
            assert_eq!(inside.iter().filter(|b| **b).count(), 1);
            let k = match region {
                Region::Origin => 0,
                Region::Tube => 1,
                Region::Exterior => 2,
            };
            assert!(inside[k]);
            counts[k] += 1;
        }
        assert!(counts.iter().all(|c| *c > 0));
    }

    #[test]
    fn near_origin_bound_holds_and_scales() {
        let spec = gauss_spec(2);
        let mut ratios = Vec::new();
        for delta in [0.2, 0.1, 0.05, 0.025] {
            let b = near_origin_bound(&spec, 1e-2, delta, 200_000, 3).unwrap();
            assert!(b.empirical.value <= b.bound);
            ratios.push(b.empirical.value / delta.powi(2));
        }
        // Bounded as δ → 0; it actually decreases once δ² ≪ ν.
        assert!(ratios.iter().all(|r| *r <= 3.0 * ratios[0]), "{ratios:?}");
    }

    #[test]
    fn near_origin_bound_in_three_dims() {
        let spec = ProblemSpec::new(gaussian(6), poly_growth(6, 2.0), 3).unwrap();
        let b = near_origin_bound(&spec, 0.05, 0.3, 200_000, 3).unwrap();
        assert!(b.empirical.value > 0.0 && b.empirical.value <= b.bound);
    }

    #[test]
    fn householder_maps_first_axis_to_u() {
        let u = [0.6, 0.0, 0.8];
        let mut y = [0.0; 3];
        householder_apply(&u, 1.0, &[0.0, 0.0], &mut y);
        for (a, b) in y.iter().zip(&u) {
            assert!((a - b).abs() < 1e-15);
        }
        householder_apply(&u, 0.0, &[1.0, 0.0], &mut y);
        let dot: f64 = y.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-15);
    }

    #[test]
    fn fiber_closed_forms() {
        let spec = gauss_spec(2);
        let pts = sample_sigma1(2, 3, 1, Sigma1Scheme::Product, 0.1).unwrap();
        for p in &pts {
            for t in [0.5, 1.0, 2.0] {
                let fd = fiber_integral(&spec, 1e-2, &p.eta, t, 0.1).unwrap();
                let f0 = (-t * t).exp();
                assert!(fd.j_0m.abs() <= PI * f0 / (fd.epsilon * t.powi(4)));
                assert!(fd.epsilon <= 0.05);
                let gap = fd.j_leading - fd.j_0m;
                assert!(gap > 0.0 && gap < 2.0 / 0.1 * f0 / t.powi(4));
                assert!(fd.j_nu > 0.0);
            }
        }
    }

    #[test]
    fn fiber_for_frozen_integrand_is_exact() {
        // F ≡ const near Σ and Γ ≡ 1 with μ ≡ 1 (d = 1) give the arctan form.
        let f = ScalarField::new("one", 2, 0.0, 2.0, |_| 1.0);
        let spec = ProblemSpec::new(f, WeightField::constant(2, 1.0), 1).unwrap();
        let eta = QuadricPoint::new(vec![1.0], vec![0.0]).unwrap();
        let fd = fiber_integral(&spec, 1e-3, &eta, 1.5, 0.1).unwrap();
        assert!((fd.j_nu / fd.j_0m - 1.0).abs() < 1e-8, "{fd:?}");
    }

    #[test]
    fn fiber_grid_small() {
        let spec = gauss_spec(2);
        let ts = [0.5, 1.0, 2.0, 3.0];
        let rep = fiber_grid_check(&spec, &[1e-1, 1e-2], 3, &ts, 0.1, 1.0, 1.5, 4).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.checked > 0);
    }
}
