//! The measure `|z|⁻¹ δ_{Σ*}`: ball masses, the bound
//! `|∫ f dμ| ≤ C₃ |f|_m` on `C_m` (`|f|_m = sup |f| ⟨z⟩^m`, `m > 2d − 2`) and
//! weak convergence of `ν/(ω² + ν²Γ²) dz` to `π Γ⁻¹ |z|⁻¹ δ_{Σ*}`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::IntegralEstimate;
use crate::fields::{japanese, norm, ProblemSpec, ScalarField, WeightField};
use crate::geometry::sigma1_mass;
use crate::integrator::{evaluate_i_nu, IntegratorOptions};
use crate::mc::{substream, unit_sphere};
use crate::surface::{surface_integral, surface_integral_with, RadialRule, SurfaceMethod, SurfaceOptions};

/// `|z|⁻¹ δ_{Σ*}` on `R^{2d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSurfaceMeasure {
    pub d: usize,
    /// `m(Σ¹)`
    pub sigma1_mass: f64,
}

impl WeightedSurfaceMeasure {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::BadParams {
                field: "d".into(),
                reason: "must be at least 1".into(),
            });
        }
        Ok(Self {
            d,
            sigma1_mass: sigma1_mass(d),
        })
    }

    /// Mass of `{r ≤ |z| ≤ R}`: `m(Σ¹) (R^{2d−2} − r^{2d−2})/(2d−2)`
    /// (`4 ln(R/r)` when `d = 1`).
    pub fn ball_mass(&self, r: f64, big_r: f64) -> Result<f64> {
        if !(r >= 0.0 && big_r > r) {
            return Err(Error::BadParams {
                field: "ball_mass".into(),
                reason: format!("need 0 <= r < R, got r = {r}, R = {big_r}"),
            });
        }
        if self.d == 1 {
            return Ok(self.sigma1_mass * (big_r / r).ln());
        }
        let k = (2 * self.d - 2) as i32;
        Ok(self.sigma1_mass * (big_r.powi(k) - r.powi(k)) / k as f64)
    }

    /// Thin-slab MC estimate of the mass of `{|z| ≤ R}`.
    pub fn ball_mass_mc(&self, big_r: f64, budget: u64, seed: u64) -> Result<IntegralEstimate> {
        let g = move |z: &[f64]| {
            let r = norm(z);
            if r <= big_r {
                1.0 / r
            } else {
                0.0
            }
        };
        let rule = RadialRule::on(self.d, big_r * 1e-9, big_r, 4, 12);
        surface_integral_with(
            self.d,
            &g,
            SurfaceMethod::ThinSlab,
            SurfaceOptions::new(budget, seed),
            &rule,
        )
    }

    /// `C₃` with `|∫ f dμ| ≤ C₃ |f|_m`, from the unit-annulus decomposition
    /// `Σ_R ⟨R⟩^{−m} μ{R ≤ |z| ≤ R+1}` and an integral bound on its tail.
    pub fn c3(&self, m: f64) -> Result<f64> {
        let k = 2.0 * self.d as f64 - 2.0;
        if !(m > k) {
            return Err(Error::NormExponentTooSmall { m, threshold: k });
        }
        if self.d == 1 {
            return Err(Error::Unsupported("functional bound needs d >= 2".into()));
        }
        const N: u64 = 1_000_000;
        let mut sum = 0.0;
        for r in 0..N {
            let r = r as f64;
            sum += (1.0 + r * r).powf(-m / 2.0) * ((r + 1.0).powf(k) - r.powf(k)) / k;
        }
        let n = N as f64;
        // ((R+1)^k − R^k)/k ≤ (R+1)^{k−1} ≤ ((N+2)/N)^{k−1} x^{k−1} on [R−1, R], R > N.
        let tail = ((n + 2.0) / n).powf(k - 1.0) * (n - 1.0).powf(k - m) / (m - k);
        Ok(self.sigma1_mass * (sum + tail))
    }
}

/// `sup |f| ⟨z⟩^m`, sampled on dyadic shells up to `⟨z⟩ = 2^{12}`, with a
/// 10% margin.
pub fn weighted_sup_norm(f: &ScalarField, m: f64, seed: u64) -> f64 {
    let mut rng = substream(seed, 0x5A9, f.dim as u64);
    let mut z = vec![0.0; f.dim];
    let mut best = f.eval(&z).abs();
    for j in 0..12 {
        for _ in 0..4096 {
            unit_sphere(&mut rng, &mut z);
            let bracket = 2f64.powi(j) * (1.0 + rng.random::<f64>());
            let r = (bracket * bracket - 1.0).max(0.0).sqrt();
            z.iter_mut().for_each(|v| *v *= r);
            best = best.max(f.eval(&z).abs() * japanese(&z).powf(m));
        }
    }
    1.1 * best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureIntegral {
    pub value: IntegralEstimate,
    /// `C₃ |f|_m`
    pub bound: f64,
    pub norm_m: f64,
    pub c3: f64,
}

/// `∫ f d(|z|⁻¹δ_{Σ*})` with its functional bound; `BoundViolated` when
/// `|value| > bound + 3σ`.
pub fn integrate_measure(d: usize, f: &ScalarField, m_norm: f64, budget: u64, seed: u64) -> Result<MeasureIntegral> {
    let measure = WeightedSurfaceMeasure::new(d)?;
    if f.dim != 2 * d {
        return Err(Error::DimensionMismatch {
            expected: 2 * d,
            got: f.dim,
        });
    }
    let c3 = measure.c3(m_norm)?;
    let g = |z: &[f64]| {
        let v = f.eval(z);
        if v == 0.0 {
            0.0
        } else {
            v / norm(z)
        }
    };
    let value = surface_integral(d, &g, SurfaceMethod::Charts, SurfaceOptions::new(budget, seed))?;
    let norm_m = weighted_sup_norm(f, m_norm, seed);
    let bound = c3 * norm_m;
    if value.value.abs() > bound + 3.0 * value.std_error {
        return Err(Error::BoundViolated {
            bound,
            empirical: value.value.abs(),
        });
    }
    Ok(MeasureIntegral {
        value,
        bound,
        norm_m,
        c3,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakRow {
    pub nu: f64,
    /// `ν I_ν = ∫ f ν/(ω² + ν²Γ²) dz`
    pub lhs: IntegralEstimate,
    /// `π ∫ (f/Γ) |z|⁻¹ dσ`
    pub limit: f64,
    pub limit_se: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakConvergence {
    pub rows: Vec<WeakRow>,
    /// Final gap within `max(3σ, 5% |limit|)`.
    pub passed: bool,
}

/// `ν/(ω² + ν²Γ²) dz → π Γ⁻¹ |z|⁻¹ δ_{Σ*}` tested on a compactly supported `f`.
pub fn weak_convergence_check(
    d: usize,
    gamma: &WeightField,
    f: &ScalarField,
    nu_sweep: &[f64],
    budget: u64,
    seed: u64,
) -> Result<WeakConvergence> {
    if f.support_radius.is_none() {
        return Err(Error::NotCompactlySupported(f.name.clone()));
    }
    let spec = ProblemSpec::new(f.clone(), gamma.clone(), d)?;
    let g = |z: &[f64]| {
        let v = f.eval(z);
        if v == 0.0 {
            0.0
        } else {
            v / (norm(z) * gamma.eval(z))
        }
    };
    let lim = if f.is_zero_field() {
        IntegralEstimate::exact(0.0)
    } else {
        surface_integral(d, &g, SurfaceMethod::Charts, SurfaceOptions::new(20_000_000, seed))?
    };
    let (limit, limit_se) = (PI * lim.value, PI * lim.std_error);
    let mut rows = Vec::with_capacity(nu_sweep.len());
    for (k, &nu) in nu_sweep.iter().enumerate() {
        let est = evaluate_i_nu(&spec, nu, IntegratorOptions::new(budget, seed.wrapping_add(k as u64)))?;
        let lhs = est.scaled(nu);
        rows.push(WeakRow {
            nu,
            gap: (lhs.value - limit).abs(),
            lhs,
            limit,
            limit_se,
        });
    }
    let passed = rows
        .last()
        .is_none_or(|r| r.gap <= (3.0 * r.lhs.std_error.hypot(r.limit_se)).max(0.05 * r.limit.abs()));
    Ok(WeakConvergence { rows, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{bump_annulus, catalog_lookup, gaussian, CatalogField};
    use std::collections::BTreeMap;

    #[test]
    fn ball_masses() {
        let m = WeightedSurfaceMeasure::new(2).unwrap();
        assert!((m.ball_mass(0.0, 1.0).unwrap() - PI * PI).abs() < 1e-12);
        let m3 = WeightedSurfaceMeasure::new(3).unwrap();
        assert!((m3.ball_mass(1.0, 2.0).unwrap() - 4.0 * PI * PI * 15.0 / 4.0).abs() < 1e-10);
        assert!(m.ball_mass(1.0, 1.0).is_err());
        // No atom at the origin.
        assert!(m.ball_mass(0.0, 1e-6).unwrap() < 1e-10);
    }

    #[test]
    fn additivity_is_exact_enough() {
        let m = WeightedSurfaceMeasure::new(3).unwrap();
        let (a, b, c) = (0.3, 1.7, 4.2);
        let lhs = m.ball_mass(a, c).unwrap();
        let rhs = m.ball_mass(a, b).unwrap() + m.ball_mass(b, c).unwrap();
        assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs);
    }

    #[test]
    fn unit_ball_mass_by_slab() {
        let m = WeightedSurfaceMeasure::new(2).unwrap();
        let est = m.ball_mass_mc(1.0, 20_000_000, 5).unwrap();
        assert!((est.value - PI * PI).abs() < 3.0 * est.std_error, "{est:?}");
        assert!(est.std_error < 0.01 * PI * PI);
    }

    #[test]
    fn gaussian_measure_integral() {
        let r = integrate_measure(2, &gaussian(4), 3.0, 1_000_000, 1).unwrap();
        assert!((r.value.value - PI * PI).abs() < 1e-9);
        assert!(r.value.value <= r.bound);
    }

    #[test]
    fn norm_exponent_gate() {
        let params = BTreeMap::from([("p".to_string(), 1.5)]);
        let f = match catalog_lookup("poly_decay", &params, 4).unwrap() {
            CatalogField::Scalar(f) => f,
            _ => unreachable!(),
        };
        assert!(matches!(
            integrate_measure(2, &f, 1.5, 1000, 1),
            Err(Error::NormExponentTooSmall { .. })
        ));
    }

    #[test]
    fn c3_grows_as_m_approaches_threshold() {
        let m = WeightedSurfaceMeasure::new(2).unwrap();
        let a = m.c3(2.5).unwrap();
        let b = m.c3(3.0).unwrap();
        assert!(a > b && b > 0.0);
    }

    #[test]
    fn weak_convergence_needs_compact_support() {
        let g = WeightField::constant(4, 1.0);
        assert!(matches!(
            weak_convergence_check(2, &g, &gaussian(4), &[0.1], 1000, 1),
            Err(Error::NotCompactlySupported(_))
        ));
        let z = ScalarField::zero(4);
        let r = weak_convergence_check(2, &g, &z, &[0.1], 1000, 1).unwrap();
        assert_eq!(r.rows[0].lhs.value, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn weak_convergence_bump() {
        let g = WeightField::constant(4, 1.0);
        let f = bump_annulus(4, 0.5, 2.0).unwrap();
        let r = weak_convergence_check(2, &g, &f, &[1e-1, 1e-2, 1e-3], 2_000_000, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.rows[2].gap < r.rows[0].gap);
    }
}
