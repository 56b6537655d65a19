//! The sphere quadric of three-wave systems:
//!
//! ```text
//! I'_ν = ∫_{R^d} F(z) / (ω(z)² + ν²Γ(z)²) dz,    ω(z) = |z|² − |k|²/4.
//! ```
//!
//! Everything is deterministic: product rules on `S^{d−1}` (`d = 2, 3`) and,
//! along each direction, a radial Gauss rule clustered at `|z| = |k|/2`.
//!
//! The limit of `ν I'_ν` is `π ∫_Σ F/(Γ |∇ω|) dσ` with `|∇ω| = 2|z| = |k|` on
//! `Σ`. [`SphereReport::surface_f_over_gamma`] also records `∫_Σ F/Γ dσ`,
//! the coefficient without the gradient factor.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{check_sweep, first_unbounded, AsymptoticReport, AsymptoticRow, Regime};
use crate::error::{Error, Result};
use crate::estimate::IntegralEstimate;
use crate::fields::{ScalarField, WeightField};
use crate::quadrature::{clustered_breaks, integrate_adaptive, merge_breaks, radial_extent, sphere_rule};

#[derive(Debug, Clone, Copy)]
pub struct SphereOptions {
    /// Relative tolerance of the angular and radial rules.
    pub rel_tol: f64,
    /// Also evaluate at `ν/2` and extrapolate `ν I'_ν` to `ν = 0`.
    pub richardson: bool,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            richardson: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereReport {
    pub d: usize,
    pub k_mod: f64,
    /// `ρ = |k|/2`
    pub radius: f64,
    /// `∫_Σ F/Γ dσ`
    pub surface_f_over_gamma: f64,
    /// `∫_Σ F/(Γ|∇ω|) dσ`; the report's `leading_a`.
    pub coefficient: f64,
    /// Remainder test with `χ ≡ 1`.
    pub report: AsymptoticReport,
    /// `ν (I'_{ν/2} − I'_ν)` per row: `ν I'_ν` extrapolated to `ν = 0`.
    pub extrapolated: Vec<f64>,
}

impl SphereReport {
    /// `ν I'_ν` at the smallest `ν`, extrapolated when available.
    pub fn nu_i_limit(&self) -> f64 {
        match (self.extrapolated.last(), self.report.rows.last()) {
            (Some(&x), _) => x,
            (None, Some(r)) => r.nu * r.i_nu.value,
            (None, None) => f64::NAN,
        }
    }
}

fn check(d: usize, f: &ScalarField, gamma: &WeightField, k_mod: f64) -> Result<()> {
    if !(2..=3).contains(&d) {
        return Err(Error::Unsupported(format!("sphere quadrature for d = {d}")));
    }
    for got in [f.dim, gamma.dim] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    if !(k_mod > 0.0 && k_mod.is_finite()) {
        return Err(Error::BadParams {
            field: "k_mod".into(),
            reason: format!("need k_mod > 0, got {k_mod}"),
        });
    }
    Ok(())
}

/// `∫_{S^{d−1}} g(u) du` with rule doubling until the relative change is below `rel`.
fn angular<G>(d: usize, g: G, rel: f64) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    let max_level = if d == 2 { 8 } else { 5 };
    let eval = |level: u32| -> Result<f64> {
        let parts: Vec<Result<f64>> = sphere_rule(d, level)
            .par_iter()
            .map(|(u, w)| g(&u[..d]).map(|v| v * w))
            .collect();
        parts.into_iter().sum()
    };
    let mut prev = eval(0)?;
    for level in 1..=max_level {
        let cur = eval(level)?;
        if (cur - prev).abs() <= rel * cur.abs() || cur == prev {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergent(format!(
        "angular rule on S^{} after {max_level} refinements",
        d - 1
    )))
}

/// `∫_{|z| = ρ} g dσ`.
pub fn sphere_surface_integral<G>(d: usize, rho: f64, g: G) -> Result<f64>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    if !(2..=3).contains(&d) {
        return Err(Error::Unsupported(format!("sphere quadrature for d = {d}")));
    }
    let v = angular(
        d,
        |u| {
            let z: Vec<f64> = u.iter().map(|c| rho * c).collect();
            Ok(g(&z))
        },
        1e-12,
    )?;
    Ok(rho.powi(d as i32 - 1) * v)
}

/// Radius beyond which `r^{d−1}|F|` is negligible, probed along the axes
/// and diagonals.
fn outer_radius(d: usize, f: &ScalarField, rho: f64) -> Result<f64> {
    if let Some(r) = f.support_radius {
        return Ok(r.max(1e-300));
    }
    let mut hi = 2.0 * rho;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            dirs.push(e);
        }
    }
    for s in 0..(1usize << d) {
        let e: Vec<f64> = (0..d)
            .map(|i| if s >> i & 1 == 1 { -1.0 } else { 1.0 } / (d as f64).sqrt())
            .collect();
        dirs.push(e);
    }
    for e in &dirs {
        let mut z = vec![0.0; d];
        let profile = |r: f64| {
            z.iter_mut().zip(e).for_each(|(a, b)| *a = r * b);
            r.powi(d as i32 - 1) * f.eval(&z)
        };
        let (_, b) = radial_extent(profile, 1e-17).map_err(|e| Error::DecayInsufficient(e.to_string()))?;
        hi = hi.max(b);
    }
    Ok(hi)
}

fn i_prime(d: usize, f: &ScalarField, gamma: &WeightField, rho: f64, big_r: f64, nu: f64, rel: f64) -> Result<f64> {
    let base: Vec<f64> = (0..=8).map(|i| big_r * i as f64 / 8.0).collect();
    let rho2 = rho * rho;
    angular(
        d,
        |u| {
            let mut z = vec![0.0; d];
            let zr: Vec<f64> = u.iter().map(|c| rho * c).collect();
            let width = nu * gamma.eval(&zr) / (2.0 * rho);
            let breaks = if rho < big_r {
                merge_breaks(&[base.clone(), clustered_breaks(0.0, big_r, rho, width / 8.0)])
            } else {
                base.clone()
            };
            let g = |r: f64| {
                z.iter_mut().zip(u).for_each(|(a, b)| *a = r * b);
                let fv = f.eval(&z);
                if fv == 0.0 {
                    return 0.0;
                }
                let om = r * r - rho2;
                let gv = nu * gamma.eval(&z);
                r.powi(d as i32 - 1) * fv / (om * om + gv * gv)
            };
            Ok(integrate_adaptive(g, &breaks, 0.1 * rel, 1e-300)?.0)
        },
        rel,
    )
}

/// `I'_ν` over the sweep with leading term `π ν⁻¹ ∫_Σ F/(Γ|k|) dσ` and the
/// remainder test with `χ ≡ 1`.
pub fn sphere_quadric(
    f: &ScalarField,
    gamma: &WeightField,
    k_mod: f64,
    nu_sweep: &[f64],
    opts: SphereOptions,
) -> Result<SphereReport> {
    let d = f.dim;
    check(d, f, gamma, k_mod)?;
    check_sweep(nu_sweep)?;
    let rho = 0.5 * k_mod;
    let surface = if f.is_zero_field() {
        0.0
    } else {
        sphere_surface_integral(d, rho, |z| f.eval(z) / gamma.eval(z))?
    };
    let coefficient = surface / k_mod;
    let big_r = if f.is_zero_field() {
        1.0
    } else {
        outer_radius(d, f, rho)?
    };
    let eval = |nu: f64| -> Result<f64> {
        if f.is_zero_field() {
            Ok(0.0)
        } else {
            i_prime(d, f, gamma, rho, big_r, nu, opts.rel_tol)
        }
    };
    let mut rows = Vec::with_capacity(nu_sweep.len());
    let mut extrapolated = Vec::new();
    for &nu in nu_sweep {
        let i_nu = eval(nu)?;
        if opts.richardson {
            let half = eval(0.5 * nu)?;
            extrapolated.push(nu * (half - i_nu));
        }
        let leading = PI / nu * coefficient;
        let remainder = i_nu - leading;
        rows.push(AsymptoticRow {
            nu,
            i_nu: IntegralEstimate::exact(i_nu),
            leading,
            remainder,
            remainder_se: 0.0,
            chi_d: 1.0,
            ratio: remainder.abs(),
        });
    }
    let bounded = first_unbounded(&rows).is_none();
    let report = AsymptoticReport {
        d,
        rows,
        leading_a: coefficient,
        leading_a_se: 0.0,
        method_agreement: 0.0,
        regime: if gamma.growth_r_star <= 2.0 {
            Regime::RStarLe2
        } else {
            Regime::RStarGt2
        },
        beta: None,
        tail: Vec::new(),
        bounded,
    };
    Ok(SphereReport {
        d,
        k_mod,
        radius: rho,
        surface_f_over_gamma: surface,
        coefficient,
        report,
        extrapolated,
    })
}
