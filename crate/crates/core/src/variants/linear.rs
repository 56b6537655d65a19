//! The divisor linear in `ω`:
//!
//! ```text
//! I'_ν = ∫_{R^{2d}} F / (x·y + iνΓ) dx dy.
//! ```
//!
//! Inside the tube `|θ| < θ₀` each fiber is split as
//!
//! ```text
//! ∫ h(θ) dθ / (t²θ + iνΓ(θ)) = h(0) t⁻² [ln(θ + iε)]_{−θ₀}^{θ₀} + ∫ (g(θ) + g(−θ)) dθ,
//! g(θ) = h(θ)/(t²θ + iνΓ(θ)) − h(0)/(t²θ + iνΓ(0)),   ε = νΓ(0)/t²,
//! ```
//!
//! with `h = Fμ` and `[ln(θ + iε)]_{−θ₀}^{θ₀} = i(2 arctan(ε/θ₀) − π)`; the
//! paired remainder is bounded and sampled by Monte Carlo. Outside the tube the
//! integrand is averaged over `(x, y)` and `(x, −y)`, which flips the sign of
//! `ω`. The same estimator at `ν = 0` gives the limit
//!
//! ```text
//! PV ∫ F/(x·y) dz − iπ ∫_{Σ*} F/|z| dσ.
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ComplexEstimate;
use crate::asymptotics::check_sweep;
use crate::error::{Error, Result};
use crate::estimate::IntegralEstimate;
use crate::fields::{norm_sq, ProblemSpec};
use crate::geometry::{mu_closed_form, omega, pi_map_into, sigma1_mass, sigma1_product_point, theta_of, THETA0_STAR};
use crate::mc::{run_stratified, sphere_area, substream, unit_sphere, StratifiedOptions, Stratum};
use crate::quadrature::{log_breaks, radial_extent};
use crate::surface::{surface_integral, SurfaceMethod, SurfaceOptions};

#[derive(Debug, Clone, Copy)]
pub struct LinearOptions {
    /// Samples per part (tube, exterior) and per component (re, im).
    pub budget: u64,
    pub surface_budget: u64,
    pub seed: u64,
    /// Tube used for `I'_ν`.
    pub theta0: f64,
    /// Wider tube used for the principal value at `ν = 0`.
    pub theta_wide: f64,
    /// The ball `|z| < r_min` is skipped; its contribution is `O(r_min^{2d−2})`.
    pub r_min: f64,
}

impl LinearOptions {
    pub fn new(budget: u64, seed: u64) -> Self {
        Self {
            budget,
            surface_budget: 2_000_000,
            seed,
            theta0: THETA0_STAR,
            theta_wide: 0.5,
            r_min: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub nu: f64,
    pub value: ComplexEstimate,
    pub tube: ComplexEstimate,
    pub exterior: ComplexEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearReport {
    pub rows: Vec<LinearRow>,
    /// `S = ∫_{Σ*} F/|z| dσ`
    pub surface: IntegralEstimate,
    /// `PV ∫ F/(x·y) dz`, inside the wide tube and outside it.
    pub pv_tube: IntegralEstimate,
    pub pv_exterior: IntegralEstimate,
    /// `PV ∫ F/(x·y) − iπS`
    pub limit: ComplexEstimate,
    /// `πS + ∫_{|θ| ≥ θ₀} F/(x·y)`, real.
    pub real_limit: ComplexEstimate,
    /// Smallest-`ν` row within `max(3σ, 5%)` of `limit`, per component.
    pub converged: bool,
    /// The same test against `real_limit`.
    pub real_limit_converged: bool,
}

fn estimate_pair(re: IntegralEstimate, im: IntegralEstimate) -> ComplexEstimate {
    ComplexEstimate::new(re.value, re.std_error, im.value, im.std_error)
}

/// Radius beyond which `r^{2d−3}|F|` is negligible.
fn outer_radius(spec: &ProblemSpec, seed: u64) -> Result<f64> {
    if let Some(r) = spec.f.support_radius {
        return Ok(1.01 * r);
    }
    let n = 2 * spec.d;
    let mut rng = substream(seed, 0x11AE, 0);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut hi = 0.0f64;
    for i in 0..64 {
        if i % 2 == 0 {
            sigma1_product_point(&mut rng, spec.d, &mut w);
        } else {
            unit_sphere(&mut rng, &mut w);
        }
        let profile = |r: f64| {
            z.iter_mut().zip(&w).for_each(|(a, b)| *a = r * b);
            r.powi(n as i32 - 3) * spec.f.eval(&z)
        };
        let (_, b) = radial_extent(profile, 1e-14).map_err(|e| Error::PvNonConvergent(e.to_string()))?;
        hi = hi.max(b);
    }
    Ok(hi.max(1.0))
}

#[derive(Clone, Copy)]
enum Part {
    Re,
    Im,
}

impl Part {
    fn of(self, c: Complex64) -> f64 {
        match self {
            Part::Re => c.re,
            Part::Im => c.im,
        }
    }
}

/// Tube `|θ| < θ_t`, `t ∈ [r_min, T]`.
fn tube_part(
    spec: &ProblemSpec,
    nu: f64,
    theta_t: f64,
    big_t: f64,
    opts: &LinearOptions,
    part: Part,
) -> IntegralEstimate {
    let d = spec.d;
    let n = 2 * d;
    let mass = sigma1_mass(d);
    let strata: Vec<Stratum<'_>> = log_breaks(opts.r_min, big_t, 3)
        .windows(2)
        .map(|w| {
            let (a, span) = (w[0], (w[1] / w[0]).ln());
            Stratum::new("tube", 3 * n, move |rng, buf| {
                let (eta, rest) = buf.split_at_mut(n);
                let (xi, z) = rest.split_at_mut(n);
                sigma1_product_point(rng, d, eta);
                let u: f64 = rng.random();
                let t = a * (u * span).exp();
                xi.iter_mut().zip(eta.iter()).for_each(|(p, q)| *p = t * q);
                let t2 = t * t;
                let h0 = spec.f.eval(xi);
                let g0 = spec.gamma.eval(xi);
                let eps = nu * g0 / t2;
                let closed = Complex64::new(0.0, 2.0 * (eps / theta_t).atan() - PI) * (h0 / t2);
                let theta = theta_t * (1.0 - rng.random::<f64>());
                let mut paired = Complex64::new(0.0, 0.0);
                for s in [theta, -theta] {
                    pi_map_into(xi, s, z);
                    let h = spec.f.eval(z) * mu_closed_form(d, s);
                    let g = spec.gamma.eval(z);
                    paired += h / Complex64::new(t2 * s, nu * g) - h0 / Complex64::new(t2 * s, nu * g0);
                }
                let fiber = closed + paired * theta_t;
                part.of(fiber) * mass * t.powi(n as i32 - 1) * t * span
            })
        })
        .collect();
    run_stratified(&strata, StratifiedOptions::new(opts.budget, opts.seed))
}

/// `|θ| ≥ θ_t`, `|z| ∈ [r_min, T]`, with the `(x, y) ↦ (x, −y)` pairing.
fn exterior_part(
    spec: &ProblemSpec,
    nu: f64,
    theta_t: f64,
    big_t: f64,
    opts: &LinearOptions,
    part: Part,
) -> IntegralEstimate {
    let d = spec.d;
    let n = 2 * d;
    let area = sphere_area(n);
    let strata: Vec<Stratum<'_>> = log_breaks(opts.r_min, big_t, 3)
        .windows(2)
        .map(|w| {
            let (a, span) = (w[0], (w[1] / w[0]).ln());
            Stratum::new("exterior", n, move |rng, z| {
                unit_sphere(rng, z);
                if theta_of(z).abs() < theta_t {
                    return 0.0;
                }
                let u: f64 = rng.random();
                let r = a * (u * span).exp();
                z.iter_mut().for_each(|v| *v *= r);
                let mut acc = Complex64::new(0.0, 0.0);
                for _ in 0..2 {
                    let f = spec.f.eval(z);
                    if f != 0.0 {
                        acc += f / Complex64::new(omega(z), nu * spec.gamma.eval(z));
                    }
                    z[d..].iter_mut().for_each(|v| *v = -*v);
                }
                0.5 * part.of(acc) * r.powi(n as i32) * span * area
            })
        })
        .collect();
    run_stratified(&strata, StratifiedOptions::new(opts.budget, opts.seed ^ 0xE7))
}

struct Split {
    tube: ComplexEstimate,
    exterior: ComplexEstimate,
    tube_re: IntegralEstimate,
    exterior_re: IntegralEstimate,
}

fn split_estimate(spec: &ProblemSpec, nu: f64, theta_t: f64, big_t: f64, opts: &LinearOptions) -> Split {
    let tube_re = tube_part(spec, nu, theta_t, big_t, opts, Part::Re);
    let tube_im = tube_part(spec, nu, theta_t, big_t, opts, Part::Im);
    let exterior_re = exterior_part(spec, nu, theta_t, big_t, opts, Part::Re);
    let exterior_im = if nu == 0.0 {
        IntegralEstimate::exact(0.0)
    } else {
        exterior_part(spec, nu, theta_t, big_t, opts, Part::Im)
    };
    Split {
        tube: estimate_pair(tube_re.clone(), tube_im),
        exterior: estimate_pair(exterior_re.clone(), exterior_im),
        tube_re,
        exterior_re,
    }
}

fn add(a: ComplexEstimate, b: ComplexEstimate) -> ComplexEstimate {
    ComplexEstimate::new(a.re + b.re, a.re_se.hypot(b.re_se), a.im + b.im, a.im_se.hypot(b.im_se))
}

/// `I'_ν` over the sweep and its limit.
pub fn linear_divisor(spec: &ProblemSpec, nu_sweep: &[f64], opts: LinearOptions) -> Result<LinearReport> {
    check_sweep(nu_sweep)?;
    if !(opts.theta0 > 0.0 && opts.theta0 < opts.theta_wide && opts.theta_wide < 1.0) {
        return Err(Error::BadParams {
            field: "theta0".into(),
            reason: format!(
                "need 0 < theta0 < theta_wide < 1, got {} and {}",
                opts.theta0, opts.theta_wide
            ),
        });
    }
    if spec.f.is_zero_field() {
        let zero = ComplexEstimate::default();
        let rows = nu_sweep
            .iter()
            .map(|&nu| LinearRow {
                nu,
                value: zero,
                tube: zero,
                exterior: zero,
            })
            .collect();
        return Ok(LinearReport {
            rows,
            surface: IntegralEstimate::exact(0.0),
            pv_tube: IntegralEstimate::exact(0.0),
            pv_exterior: IntegralEstimate::exact(0.0),
            limit: zero,
            real_limit: zero,
            converged: true,
            real_limit_converged: true,
        });
    }
    let big_t = outer_radius(spec, opts.seed)?;

    let g = |z: &[f64]| spec.f.eval(z) / norm_sq(z).sqrt();
    let surface = surface_integral(
        spec.d,
        &g,
        SurfaceMethod::Charts,
        SurfaceOptions::new(opts.surface_budget, opts.seed),
    )?;

    let wide = split_estimate(spec, 0.0, opts.theta_wide, big_t, &opts);
    let pv = wide.tube_re.value + wide.exterior_re.value;
    let pv_se = wide.tube_re.std_error.hypot(wide.exterior_re.std_error);
    let limit = ComplexEstimate::new(pv, pv_se, -PI * surface.value, PI * surface.std_error);
    if !limit.is_finite() {
        return Err(Error::PvNonConvergent("limit estimate is not finite".into()));
    }
    if pv_se > 0.05 * limit.value().norm() {
        return Err(Error::PvNonConvergent(format!(
            "standard error {pv_se:e} exceeds 5% of |limit| = {:e}",
            limit.value().norm()
        )));
    }
    let narrow_exterior = exterior_part(spec, 0.0, opts.theta0, big_t, &opts, Part::Re);
    let real_limit = ComplexEstimate::new(
        PI * surface.value + narrow_exterior.value,
        (PI * surface.std_error).hypot(narrow_exterior.std_error),
        0.0,
        0.0,
    );

    let rows: Vec<LinearRow> = nu_sweep
        .par_iter()
        .map(|&nu| {
            let s = split_estimate(spec, nu, opts.theta0, big_t, &opts);
            LinearRow {
                nu,
                value: add(s.tube, s.exterior),
                tube: s.tube,
                exterior: s.exterior,
            }
        })
        .collect();
    if rows.iter().any(|r| !r.value.is_finite()) {
        return Err(Error::PvNonConvergent("I'_nu estimate is not finite".into()));
    }
    let last = rows.last().expect("sweep is not empty").value;
    Ok(LinearReport {
        converged: last.agrees_with(&limit, 3.0, 0.05),
        real_limit_converged: last.agrees_with(&real_limit, 3.0, 0.05),
        rows,
        surface,
        pv_tube: wide.tube_re,
        pv_exterior: wide.exterior_re,
        limit,
        real_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{gaussian, ScalarField, WeightField};

    #[test]
    fn even_field_has_no_principal_value() {
        let spec = ProblemSpec::new(gaussian(4), WeightField::constant(4, 1.0), 2).unwrap();
        let rep = linear_divisor(&spec, &[1e-2, 1e-3], LinearOptions::new(400_000, 3)).unwrap();
        assert!(rep.limit.re.abs() <= 1e-12, "{:?}", rep.limit);
        assert!((rep.limit.im + PI.powi(3)).abs() < 1e-9);
        let last = rep.rows.last().unwrap().value;
        assert!(last.re.abs() < 3.0 * last.re_se + 1e-3, "{last:?}");
        assert!((last.im / rep.limit.im - 1.0).abs() < 0.02, "{last:?}");
        assert!(rep.converged);
        assert!(!rep.real_limit_converged);
    }

    #[test]
    fn odd_shift_gives_principal_value() {
        // F(x, y) = exp(−|z|²)(1 + x₁y₁) is not even in y.
        let f = ScalarField::new("skew", 4, 4.0, 2.0, |z: &[f64]| {
            (-norm_sq(z)).exp() * (1.0 + z[0] * z[2])
        });
        let spec = ProblemSpec::new(f, WeightField::constant(4, 1.0), 2).unwrap();
        let rep = linear_divisor(&spec, &[1e-2, 1e-3], LinearOptions::new(1_000_000, 4)).unwrap();
        // ∫ e^{−|z|²} x₁y₁/(x·y) = ∫ e^{−|z|²}/2 by symmetry over the coordinate pairs.
        let pv = 0.5 * PI * PI;
        assert!(
            (rep.limit.re - pv).abs() < 4.0 * rep.limit.re_se + 1e-3 * pv,
            "{:?}",
            rep.limit
        );
        assert!(rep.converged, "{rep:?}");
    }

    #[test]
    fn zero_field() {
        let spec = ProblemSpec::new(ScalarField::zero(4), WeightField::constant(4, 1.0), 2).unwrap();
        let rep = linear_divisor(&spec, &[0.1], LinearOptions::new(1000, 1)).unwrap();
        assert_eq!(rep.rows[0].value, ComplexEstimate::default());
    }
}
