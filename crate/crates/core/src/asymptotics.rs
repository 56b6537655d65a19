//! Leading term and remainder of `I_ν` as `ν → 0`:
//!
//! ```text
//! I_ν = π ν⁻¹ A + I^Δ,    A = ∫_{Σ*} F/(|z|Γ) dσ,    |I^Δ| ≤ C χ_d(ν),
//! ```
//!
//! with `χ_d ≡ 1` for `d ≥ 3` and `χ_2(ν) = max(1, ln ν⁻¹)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::IntegralEstimate;
use crate::fields::{norm, ProblemSpec};
use crate::geometry::{sigma1_product_point, THETA0_STAR};
use crate::integrator::{evaluate_i_nu, evaluate_i_nu_split, IntegratorOptions};
use crate::mc::substream;
use crate::quadrature::{integrate_log, radial_extent};
use crate::surface::{surface_integral, SurfaceMethod, SurfaceOptions};

/// `χ_d(ν)`.
pub fn chi_d(d: usize, nu: f64) -> f64 {
    if d == 2 {
        (1.0f64).max((1.0 / nu).ln())
    } else {
        1.0
    }
}

/// `A` by both surface estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingCoefficient {
    /// Inverse-variance weighted mean of the two estimates.
    pub value: f64,
    pub std_error: f64,
    pub charts: IntegralEstimate,
    pub thin_slab: IntegralEstimate,
    /// `|charts − thin_slab| / |value|`
    pub method_agreement: f64,
}

/// Inverse-variance weighted mean; an exact input wins outright.
fn combine(a: &IntegralEstimate, b: &IntegralEstimate) -> (f64, f64) {
    match (a.std_error == 0.0, b.std_error == 0.0) {
        (true, _) => (a.value, 0.0),
        (false, true) => (b.value, 0.0),
        _ => {
            let (wa, wb) = (a.std_error.powi(-2), b.std_error.powi(-2));
            ((wa * a.value + wb * b.value) / (wa + wb), (wa + wb).powf(-0.5))
        }
    }
}

/// `A = ∫_{Σ*} F/(|z|Γ) dσ`; fails with `MethodsDisagree` when the charts and
/// thin-slab values differ by more than `max(3σ, 0.5%)`.
pub fn leading_coefficient(spec: &ProblemSpec, budget: u64, seed: u64) -> Result<LeadingCoefficient> {
    if spec.f.is_zero_field() {
        return Ok(LeadingCoefficient {
            value: 0.0,
            std_error: 0.0,
            charts: IntegralEstimate::exact(0.0),
            thin_slab: IntegralEstimate::exact(0.0),
            method_agreement: 0.0,
        });
    }
    let g = |z: &[f64]| {
        let f = spec.f.eval(z);
        if f == 0.0 {
            0.0
        } else {
            f / (norm(z) * spec.gamma.eval(z))
        }
    };
    let opts = SurfaceOptions::new(budget, seed);
    let charts = surface_integral(spec.d, &g, SurfaceMethod::Charts, opts)?;
    let thin_slab = surface_integral(spec.d, &g, SurfaceMethod::ThinSlab, opts)?;
    let (value, std_error) = combine(&charts, &thin_slab);
    let diff = (charts.value - thin_slab.value).abs();
    let tolerance = (3.0 * charts.std_error.hypot(thin_slab.std_error)).max(0.005 * charts.value.abs());
    if diff > tolerance {
        return Err(Error::MethodsDisagree {
            charts: charts.value,
            thin_slab: thin_slab.value,
            tolerance,
        });
    }
    Ok(LeadingCoefficient {
        value,
        std_error,
        method_agreement: if value != 0.0 { diff / value.abs() } else { 0.0 },
        charts,
        thin_slab,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    RStarLe2,
    RStarGt2,
}

/// One `ν` of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub nu: f64,
    pub i_nu: IntegralEstimate,
    /// `π ν⁻¹ A`
    pub leading: f64,
    /// `I_ν − π ν⁻¹ A`
    pub remainder: f64,
    /// Standard error of the remainder (MC error of `I_ν` and of `A`).
    pub remainder_se: f64,
    pub chi_d: f64,
    /// `|remainder| / χ_d`
    pub ratio: f64,
}

/// The far part of the tube for `r* > 2`: `t > C_β ν^{−β}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostic {
    pub nu: f64,
    pub t_beta: f64,
    /// Tube contribution of `I_ν` beyond `t_β`.
    pub tube_tail: IntegralEstimate,
    /// `π ν⁻¹ ∫_{|z| > t_β} F/(|z|Γ) dσ`
    pub leading_tail: f64,
    /// `ν⁻¹ (π + 2) ∫_{|z| > t_β} |F|/(|z|Γ) dσ`, the sum-of-norms bound.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub d: usize,
    pub rows: Vec<AsymptoticRow>,
    /// `A = ∫_{Σ*} F/(|z|Γ) dσ`
    pub leading_a: f64,
    pub leading_a_se: f64,
    pub method_agreement: f64,
    pub regime: Regime,
    pub beta: Option<f64>,
    pub tail: Vec<TailDiagnostic>,
    /// Max ratio within 3× the ratio at the largest `ν` (after 3σ allowance).
    pub bounded: bool,
}

impl AsymptoticReport {
    /// `RemainderUnbounded` at the first offending row.
    pub fn certify(&self) -> Result<()> {
        if let Some((nu, ratio, limit)) = first_unbounded(&self.rows) {
            return Err(Error::RemainderUnbounded { nu, ratio, limit });
        }
        if let Some(t) = self.tail.iter().find(|t| !t.passed) {
            return Err(Error::BoundViolated {
                bound: t.bound,
                empirical: (t.tube_tail.value - t.leading_tail).abs(),
            });
        }
        Ok(())
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// The ratio test with 3× slack; a row fails only when even its 3σ-reduced
/// ratio exceeds three times the 3σ-inflated ratio of the first row.
pub(crate) fn first_unbounded(rows: &[AsymptoticRow]) -> Option<(f64, f64, f64)> {
    let first = rows.first()?;
    let limit = 3.0 * (first.remainder.abs() + 3.0 * first.remainder_se) / first.chi_d;
    rows.iter().find_map(|r| {
        let low = (r.remainder.abs() - 3.0 * r.remainder_se).max(0.0) / r.chi_d;
        (low > limit).then_some((r.nu, r.ratio, limit))
    })
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Samples per `ν` for `I_ν`.
    pub budget: u64,
    /// Evaluations for each surface estimator.
    pub surface_budget: u64,
    pub seed: u64,
    pub theta0: f64,
}

impl VerifyOptions {
    pub fn new(budget: u64, seed: u64) -> Self {
        Self {
            budget,
            surface_budget: 20_000_000,
            seed,
            theta0: THETA0_STAR,
        }
    }
}

/// Geometric sweep from `10⁻¹`, five points per decade, down to `10⁻³`
/// (`d = 2`) or `10⁻²` (`d ≥ 3`).
pub fn default_sweep(d: usize) -> Vec<f64> {
    let decades = if d == 2 { 2 } else { 1 };
    (0..=5 * decades).map(|k| 0.1 * 10f64.powf(-(k as f64) / 5.0)).collect()
}

pub(crate) fn check_sweep(nu_sweep: &[f64]) -> Result<()> {
    if nu_sweep.is_empty() {
        return Err(Error::BadParams {
            field: "nu_sweep".into(),
            reason: "empty".into(),
        });
    }
    for &nu in nu_sweep {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::NuOutOfRange(nu));
        }
    }
    if nu_sweep.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadParams {
            field: "nu_sweep".into(),
            reason: "must be strictly decreasing".into(),
        });
    }
    Ok(())
}

/// `t_β = (θ₀/(2K))^β ν^{−β}`: beyond it `ε = νΓ/t²` may exceed `θ₀/2`.
pub fn t_beta(spec: &ProblemSpec, nu: f64, theta0: f64) -> Option<f64> {
    let r = spec.gamma.growth_r_star;
    (r > 2.0).then(|| {
        let beta = 1.0 / (r - 2.0);
        (theta0 / (2.0 * spec.gamma.bound_k)).powf(beta) * nu.powf(-beta)
    })
}

/// Run the sweep and assemble the report. Use [`AsymptoticReport::certify`]
/// to turn a failed ratio test into an error.
pub fn verify_theorem(spec: &ProblemSpec, nu_sweep: &[f64], opts: VerifyOptions) -> Result<AsymptoticReport> {
    check_sweep(nu_sweep)?;
    spec.exponent_check()?;
    let a = leading_coefficient(spec, opts.surface_budget, opts.seed)?;
    let d = spec.d;
    let mut rows = Vec::with_capacity(nu_sweep.len());
    let mut tail = Vec::new();
    let r_star = spec.gamma.growth_r_star;
    for (k, &nu) in nu_sweep.iter().enumerate() {
        let mut io = IntegratorOptions::new(opts.budget, opts.seed ^ (k as u64).wrapping_mul(0x9E37));
        io.theta0 = opts.theta0;
        let i_nu = match t_beta(spec, nu, opts.theta0) {
            Some(tb) => {
                let est = evaluate_i_nu_split(spec, nu, tb, io)?;
                tail.push(tail_diagnostic(spec, nu, tb, &est, opts)?);
                est
            }
            None => evaluate_i_nu(spec, nu, io)?,
        };
        let leading = PI * a.value / nu;
        let remainder = i_nu.value - leading;
        let remainder_se = i_nu.std_error.hypot(PI * a.std_error / nu);
        let chi = chi_d(d, nu);
        rows.push(AsymptoticRow {
            nu,
            leading,
            remainder,
            remainder_se,
            chi_d: chi,
            ratio: remainder.abs() / chi,
            i_nu,
        });
    }
    let bounded = first_unbounded(&rows).is_none();
    Ok(AsymptoticReport {
        d,
        rows,
        leading_a: a.value,
        leading_a_se: a.std_error,
        method_agreement: a.method_agreement,
        regime: if r_star > 2.0 {
            Regime::RStarGt2
        } else {
            Regime::RStarLe2
        },
        beta: (r_star > 2.0).then(|| 1.0 / (r_star - 2.0)),
        tail,
        bounded,
    })
}

fn tail_diagnostic(
    spec: &ProblemSpec,
    nu: f64,
    t_beta: f64,
    est: &IntegralEstimate,
    opts: VerifyOptions,
) -> Result<TailDiagnostic> {
    let tube_tail = est
        .stratum("tube_tail")
        .map(|s| IntegralEstimate {
            value: s.value,
            std_error: s.std_error,
            n_samples: s.n_samples,
            strata: vec![s.clone()],
            converged: true,
        })
        .unwrap_or_else(|| IntegralEstimate::exact(0.0));
    let signed = |z: &[f64]| {
        if norm(z) <= t_beta {
            return 0.0;
        }
        spec.f.eval(z) / (norm(z) * spec.gamma.eval(z))
    };
    let absolute = |z: &[f64]| signed(z).abs();
    let so = SurfaceOptions::new(opts.surface_budget / 4, opts.seed);
    let lt = surface_integral(spec.d, &signed, SurfaceMethod::Charts, so)?;
    let lb = surface_integral(spec.d, &absolute, SurfaceMethod::Charts, so)?;
    let leading_tail = PI * lt.value / nu;
    let bound = (PI + 2.0) * lb.value / nu;
    let diff = (tube_tail.value - leading_tail).abs();
    let passed = diff <= bound + 3.0 * tube_tail.std_error.hypot(PI * lt.std_error / nu);
    Ok(TailDiagnostic {
        nu,
        t_beta,
        tube_tail,
        leading_tail,
        bound,
        passed,
    })
}

/// Fraction of `∫_0^∞ t^{2d−3} |F/Γ|(tη) dt` beyond the fitted radial extent,
/// maximised over probe directions on `Σ¹`.
pub fn radial_tail_fraction(spec: &ProblemSpec, probes: usize, seed: u64) -> Result<f64> {
    let d = spec.d;
    let n = 2 * d;
    let mut rng = substream(seed, 0xAB5, d as u64);
    let mut eta = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        sigma1_product_point(&mut rng, d, &mut eta);
        let mut profile = |t: f64| {
            z.iter_mut().zip(&eta).for_each(|(a, b)| *a = t * b);
            t.powi(n as i32 - 3) * (spec.f.eval(&z) / spec.gamma.eval(&z)).abs()
        };
        let (lo, hi) = radial_extent(&mut profile, 1e-15)?;
        let body = integrate_log(&mut profile, lo, hi, 8, 20);
        if body == 0.0 {
            continue;
        }
        let tail = integrate_log(&mut profile, hi, hi * 1e6, 8, 20);
        worst = worst.max(tail / body);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{gaussian, poly_growth, ScalarField, WeightField};

    fn gauss_spec(d: usize) -> ProblemSpec {
        ProblemSpec::new(gaussian(2 * d), WeightField::constant(2 * d, 1.0), d).unwrap()
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi_d(3, 1e-3), 1.0);
        assert!((chi_d(2, 1e-2) - 100f64.ln()).abs() < 1e-15);
        assert_eq!(chi_d(2, 0.9), 1.0);
    }

    #[test]
    fn leading_coefficient_gaussian() {
        let a = leading_coefficient(&gauss_spec(2), 20_000_000, 1).unwrap();
        assert!((a.value - PI * PI).abs() < 1e-9 * PI * PI, "{a:?}");
        let sigma = a.thin_slab.std_error;
        assert!(sigma / a.value < 0.01);
        assert!((a.thin_slab.value - PI * PI).abs() < 3.0 * sigma);
    }

    #[test]
    fn leading_coefficient_zero_field() {
        let spec = ProblemSpec::new(ScalarField::zero(4), WeightField::constant(4, 1.0), 2).unwrap();
        assert_eq!(leading_coefficient(&spec, 1000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn leading_coefficient_quadratic_weight() {
        // 2π² ∫ t e^{−t²}/(1+t²) dt = π² e E₁(1).
        let spec = ProblemSpec::new(gaussian(4), poly_growth(4, 2.0), 2).unwrap();
        let a = leading_coefficient(&spec, 5_000_000, 2).unwrap();
        let e1 = 0.219_383_934_395_520_27;
        let want = PI * PI * std::f64::consts::E * e1;
        assert!((a.value - want).abs() < 1e-8 * want, "{} vs {want}", a.value);
    }

    #[test]
    fn sweep_validation() {
        let spec = gauss_spec(2);
        let o = VerifyOptions::new(1000, 1);
        assert!(matches!(
            verify_theorem(&spec, &[0.1, 0.2], o),
            Err(Error::BadParams { .. })
        ));
        assert!(matches!(verify_theorem(&spec, &[1.5], o), Err(Error::NuOutOfRange(_))));
    }

    #[test]
    fn default_sweeps() {
        let s = default_sweep(2);
        assert_eq!(s.len(), 11);
        assert!((s[10] - 1e-3).abs() < 1e-15);
        assert_eq!(default_sweep(3).len(), 6);
    }

    #[test]
    fn beta_cutoff() {
        let spec = ProblemSpec::new(gaussian(4), poly_growth(4, 4.0), 2).unwrap();
        let tb = t_beta(&spec, 1e-2, 0.1).unwrap();
        assert!((tb - (0.05f64 / (1.0 + 1e-9)).sqrt() * 10.0).abs() < 1e-9);
        assert!(t_beta(&gauss_spec(2), 1e-2, 0.1).is_none());
    }

    #[test]
    fn gaussian_radial_tail_negligible() {
        assert!(radial_tail_fraction(&gauss_spec(2), 16, 1).unwrap() < 1e-12);
    }
}
