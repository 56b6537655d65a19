//! Integrands `F` and weights `Γ` together with the decay/growth metadata the
//! asymptotic machinery relies on:
//!
//! * `|F(z)| ≤ K ⟨z⟩^{-M}`
//! * `K⁻¹ ⟨z⟩^{r*} ≤ Γ(z) ≤ K ⟨z⟩^{r*}`
//! * `M + r* > 2d − 2` and `M > 2d − 4`
//!
//! where `⟨z⟩ = sqrt(|z|² + 1)`. Fields are immutable and cheap to clone
//! (closures are shared behind `Arc`).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{substream, unit_sphere};

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// `⟨z⟩ = sqrt(|z|² + 1)`.
pub fn japanese(z: &[f64]) -> f64 {
    (norm_sq(z) + 1.0).sqrt()
}

pub(crate) fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

pub(crate) fn norm(z: &[f64]) -> f64 {
    norm_sq(z).sqrt()
}

/// Central-difference gradient with step `h·⟨z⟩`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, z: &[f64], h: f64, out: &mut [f64]) {
    let step = h * japanese(z);
    let mut p = z.to_vec();
    for i in 0..z.len() {
        p[i] = z[i] + step;
        let fp = f(&p);
        p[i] = z[i] - step;
        let fm = f(&p);
        p[i] = z[i];
        out[i] = (fp - fm) / (2.0 * step);
    }
}

/// A decaying integrand on `R^dim`.
#[derive(Clone)]
pub struct ScalarField {
    pub name: String,
    eval: PointFn,
    grad: Option<GradFn>,
    /// Number of coordinates the field accepts (`2d` for the main integral).
    pub dim: usize,
    pub decay_m: f64,
    pub bound_k: f64,
    /// `F ≡ 0` for `|z| ≥ support_radius`.
    pub support_radius: Option<f64>,
    /// `F ≡ 0` for `|z| ≤ vanishing_radius`.
    pub vanishing_radius: Option<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("decay_m", &self.decay_m)
            .field("bound_k", &self.bound_k)
            .field("support_radius", &self.support_radius)
            .field("vanishing_radius", &self.vanishing_radius)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(name: impl Into<String>, dim: usize, decay_m: f64, bound_k: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
            grad: None,
            dim,
            decay_m,
            bound_k,
            support_radius: None,
            vanishing_radius: None,
        }
    }

    pub fn with_grad<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_support(mut self, radius: f64) -> Self {
        self.support_radius = Some(radius);
        self
    }

    pub fn with_vanishing_radius(mut self, radius: f64) -> Self {
        self.vanishing_radius = Some(radius);
        self
    }

    /// The zero field; satisfies every decay condition.
    pub fn zero(dim: usize) -> Self {
        Self::new("zero", dim, f64::INFINITY, 1.0 + 1e-9, |_| 0.0)
            .with_grad(|_, g| g.iter_mut().for_each(|v| *v = 0.0))
            .with_support(0.0)
    }

    #[inline]
    pub fn eval(&self, z: &[f64]) -> f64 {
        (self.eval)(z)
    }

    pub fn has_analytic_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// Supplied gradient, or central differences with step `1e-5·⟨z⟩`.
    pub fn gradient(&self, z: &[f64], out: &mut [f64]) {
        match &self.grad {
            Some(g) => g(z, out),
            None => fd_gradient(&*self.eval, z, 1e-5, out),
        }
    }

    /// `c·F`, with the bound constant rescaled accordingly.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        let grad = self.grad.clone();
        Self {
            name: format!("{}*{c}", self.name),
            eval: Arc::new(move |z| c * inner(z)),
            grad: grad.map(|g| -> GradFn {
                Arc::new(move |z, out| {
                    g(z, out);
                    out.iter_mut().for_each(|v| *v *= c);
                })
            }),
            bound_k: (self.bound_k * c.abs()).max(1.0 + 1e-9),
            ..self.clone()
        }
    }

    pub fn is_zero_field(&self) -> bool {
        self.support_radius == Some(0.0)
    }
}

/// A strictly positive weight on `R^dim` with power-law growth `r*`.
#[derive(Clone)]
pub struct WeightField {
    pub name: String,
    eval: PointFn,
    grad: Option<GradFn>,
    pub dim: usize,
    pub growth_r_star: f64,
    pub bound_k: f64,
}

impl fmt::Debug for WeightField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("growth_r_star", &self.growth_r_star)
            .field("bound_k", &self.bound_k)
            .finish()
    }
}

impl WeightField {
    pub fn new<F>(name: impl Into<String>, dim: usize, growth_r_star: f64, bound_k: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
            grad: None,
            dim,
            growth_r_star,
            bound_k,
        }
    }

    pub fn with_grad<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    /// `Γ ≡ c`.
    pub fn constant(dim: usize, c: f64) -> Self {
        let k = c.max(1.0 / c) * (1.0 + 1e-9);
        Self::new(format!("const({c})"), dim, 0.0, k, move |_| c).with_grad(|_, g| g.iter_mut().for_each(|v| *v = 0.0))
    }

    #[inline]
    pub fn eval(&self, z: &[f64]) -> f64 {
        (self.eval)(z)
    }

    pub fn has_analytic_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn gradient(&self, z: &[f64], out: &mut [f64]) {
        match &self.grad {
            Some(g) => g(z, out),
            None => fd_gradient(&*self.eval, z, 1e-5, out),
        }
    }
}

/// The pair `(F, Γ)` on `R^{2d}`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub f: ScalarField,
    pub gamma: WeightField,
    pub d: usize,
}

impl ProblemSpec {
    pub fn new(f: ScalarField, gamma: WeightField, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::BadParams {
                field: "ProblemSpec".into(),
                reason: "d must be at least 1".into(),
            });
        }
        for got in [f.dim, gamma.dim] {
            if got != 2 * d {
                return Err(Error::DimensionMismatch { expected: 2 * d, got });
            }
        }
        Ok(Self { f, gamma, d })
    }

    /// Same weight, integrand multiplied by `c`.
    pub fn with_scaled_f(&self, c: f64) -> Self {
        Self {
            f: self.f.scaled(c),
            ..self.clone()
        }
    }

    /// The exponent conditions on `(M, r*)` for this `d`.
    pub fn exponent_check(&self) -> Result<()> {
        exponent_check(self.f.decay_m, self.gamma.growth_r_star, self.d)
    }
}

pub fn exponent_check(m: f64, r_star: f64, d: usize) -> Result<()> {
    let two_d = 2.0 * d as f64;
    if !(m + r_star > two_d - 2.0) {
        return Err(Error::ConditionHrViolated(format!(
            "M + r* = {} must exceed 2d - 2 = {}",
            m + r_star,
            two_d - 2.0
        )));
    }
    if !(m > two_d - 4.0) {
        return Err(Error::ConditionHrViolated(format!(
            "M = {m} must exceed 2d - 4 = {}",
            two_d - 4.0
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// `|F| ≤ K⟨z⟩^{-M}`
    FDecay,
    /// `Γ ≥ K⁻¹⟨z⟩^{r*}`
    GammaLower,
    /// `|Γ| ≤ K⟨z⟩^{r*}`
    GammaUpper,
    /// `M + r* > 2d − 2`, `M > 2d − 4`
    Exponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub passed: bool,
    pub detail: String,
    pub violating_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
    pub points_probed: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// First failure as an error.
    pub fn ensure(&self, spec: &ProblemSpec) -> Result<()> {
        for c in &self.checks {
            if c.passed {
                continue;
            }
            return Err(match c.condition {
                Condition::Exponents => Error::ConditionHrViolated(c.detail.clone()),
                Condition::FDecay => Error::FieldUnbounded {
                    field: spec.f.name.clone(),
                    point: c.violating_point.clone().unwrap_or_default(),
                    detail: c.detail.clone(),
                },
                Condition::GammaLower | Condition::GammaUpper => Error::FieldUnbounded {
                    field: spec.gamma.name.clone(),
                    point: c.violating_point.clone().unwrap_or_default(),
                    detail: c.detail.clone(),
                },
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// Random points per dyadic shell `⟨z⟩ ∈ [2^j, 2^{j+1}]`.
    pub n_probe: usize,
    /// Shells `j = 0..shells`.
    pub shells: u32,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            n_probe: 256,
            shells: 11,
            seed: 0x5eed,
        }
    }
}

/// Spot-check the field bounds on dyadic shells and the exponent conditions.
pub fn validate(spec: &ProblemSpec, opts: ValidateOptions) -> ValidationReport {
    let dim = 2 * spec.d;
    let mut z = vec![0.0; dim];
    let mut first: [Option<(Vec<f64>, String)>; 3] = [None, None, None];
    let mut probed = 0;
    let (m, kf) = (spec.f.decay_m, spec.f.bound_k);
    let (r, kg) = (spec.gamma.growth_r_star, spec.gamma.bound_k);
    for j in 0..opts.shells {
        let mut rng = substream(opts.seed, 0xF1E1D, j as u64);
        for _ in 0..opts.n_probe {
            unit_sphere(&mut rng, &mut z);
            let bracket = 2f64.powi(j as i32) * (1.0 + rng.random::<f64>());
            let radius = (bracket * bracket - 1.0).max(0.0).sqrt();
            z.iter_mut().for_each(|v| *v *= radius);
            probed += 1;
            let jz = japanese(&z);
            let fv = spec.f.eval(&z);
            if first[0].is_none() && !(fv.is_finite() && fv.abs() <= kf * jz.powf(-m)) {
                first[0] = Some((z.clone(), format!("|F| = {fv:e} > K⟨z⟩^-M = {:e}", kf * jz.powf(-m))));
            }
            let gv = spec.gamma.eval(&z);
            let scale = jz.powf(r);
            if first[1].is_none() && !(gv.is_finite() && gv >= scale / kg) {
                first[1] = Some((z.clone(), format!("Γ = {gv:e} < K⁻¹⟨z⟩^r* = {:e}", scale / kg)));
            }
            if first[2].is_none() && !(gv.is_finite() && gv.abs() <= kg * scale) {
                first[2] = Some((z.clone(), format!("|Γ| = {gv:e} > K⟨z⟩^r* = {:e}", kg * scale)));
            }
        }
    }
    let mut checks = Vec::new();
    for (cond, slot) in [Condition::FDecay, Condition::GammaLower, Condition::GammaUpper]
        .into_iter()
        .zip(first)
    {
        checks.push(match slot {
            None => ConditionCheck {
                condition: cond,
                passed: true,
                detail: "ok".into(),
                violating_point: None,
            },
            Some((p, detail)) => ConditionCheck {
                condition: cond,
                passed: false,
                detail,
                violating_point: Some(p),
            },
        });
    }
    let hr = spec.exponent_check();
    checks.push(ConditionCheck {
        condition: Condition::Exponents,
        passed: hr.is_ok(),
        detail: match hr {
            Ok(()) => "ok".into(),
            Err(Error::ConditionHrViolated(s)) => s,
            Err(e) => e.to_string(),
        },
        violating_point: None,
    });
    ValidationReport {
        checks,
        points_probed: probed,
    }
}

/// `1.1 · max_r profile(r)` over `r ∈ [0, 10³]`, at least `1 + 10⁻⁹`.
///
/// Metadata constants are fitted this way for the radial catalog fields.
pub fn fit_radial_bound(profile: impl Fn(f64) -> f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..=20_000 {
        best = best.max(profile(i as f64 * 5e-4));
    }
    for i in 0..=4_000 {
        let r = 10f64.powf(1.0 + 2.0 * i as f64 / 4_000.0);
        best = best.max(profile(r));
    }
    (1.1 * best).max(1.0 + 1e-9)
}

/// Result of a catalog lookup.
#[derive(Debug, Clone)]
pub enum CatalogField {
    Scalar(ScalarField),
    Weight(WeightField),
}

impl CatalogField {
    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            CatalogField::Scalar(f) => Ok(f),
            CatalogField::Weight(w) => Err(Error::BadParams {
                field: w.name,
                reason: "expected an integrand, got a weight".into(),
            }),
        }
    }

    pub fn into_weight(self) -> Result<WeightField> {
        match self {
            CatalogField::Weight(w) => Ok(w),
            CatalogField::Scalar(f) => Err(Error::BadParams {
                field: f.name,
                reason: "expected a weight, got an integrand".into(),
            }),
        }
    }
}

pub const CATALOG: [&str; 5] = ["gaussian", "poly_decay", "bump_annulus", "const", "poly_growth"];

fn param(params: &BTreeMap<String, f64>, field: &str, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key).copied().or(default) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::BadParams {
            field: field.into(),
            reason: format!("`{key}` = {v} is not finite"),
        }),
        None => Err(Error::BadParams {
            field: field.into(),
            reason: format!("missing `{key}`"),
        }),
    }
}

fn reject_unknown(params: &BTreeMap<String, f64>, field: &str, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::BadParams {
            field: field.into(),
            reason: format!("unknown parameter `{k}` (allowed: {})", allowed.join(", ")),
        }),
        None => Ok(()),
    }
}

/// Smooth bump on `r1 < r < r2`, peak value 1 at the midpoint.
fn bump_profile(r: f64, r1: f64, r2: f64) -> (f64, f64) {
    let s = (2.0 * r - r1 - r2) / (r2 - r1);
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let v = (1.0 - 1.0 / q).exp();
    let dv = v * (-2.0 * s / (q * q)) * (2.0 / (r2 - r1));
    (v, dv)
}

/// Look up a built-in field on `R^dim`.
///
/// | name | params | field |
/// |---|---|---|
/// | `gaussian` | `M` (4), `a` (1) | `exp(−a|z|²)` |
/// | `poly_decay` | `p` | `⟨z⟩^{−p}` |
/// | `bump_annulus` | `r1`, `r2`, `M` (4) | smooth bump supported in `r1 < |z| < r2` |
/// | `const` | `c` (1) | weight `Γ ≡ c` |
/// | `poly_growth` | `r` | weight `⟨z⟩^r` |
pub fn catalog_lookup(name: &str, params: &BTreeMap<String, f64>, dim: usize) -> Result<CatalogField> {
    if dim == 0 {
        return Err(Error::BadParams {
            field: name.into(),
            reason: "dimension must be positive".into(),
        });
    }
    match name {
        "gaussian" => {
            reject_unknown(params, name, &["M", "a"])?;
            let m = param(params, name, "M", Some(4.0))?;
            let a = param(params, name, "a", Some(1.0))?;
            if a <= 0.0 {
                return Err(Error::BadParams {
                    field: name.into(),
                    reason: "`a` must be positive".into(),
                });
            }
            let k = fit_radial_bound(|r| (-a * r * r).exp() * (1.0 + r * r).powf(m / 2.0));
            let f = ScalarField::new(format!("gaussian(a={a})"), dim, m, k, move |z| (-a * norm_sq(z)).exp())
                .with_grad(move |z, g| {
                    let e = -2.0 * a * (-a * norm_sq(z)).exp();
                    g.iter_mut().zip(z).for_each(|(gi, zi)| *gi = e * zi);
                });
            Ok(CatalogField::Scalar(f))
        }
        "poly_decay" => {
            reject_unknown(params, name, &["p"])?;
            let p = param(params, name, "p", None)?;
            let f = ScalarField::new(format!("poly_decay(p={p})"), dim, p, 1.0 + 1e-9, move |z| {
                japanese(z).powf(-p)
            })
            .with_grad(move |z, g| {
                let jz2 = norm_sq(z) + 1.0;
                let c = -p * jz2.powf(-p / 2.0 - 1.0);
                g.iter_mut().zip(z).for_each(|(gi, zi)| *gi = c * zi);
            });
            Ok(CatalogField::Scalar(f))
        }
        "bump_annulus" => {
            reject_unknown(params, name, &["r1", "r2", "M"])?;
            let r1 = param(params, name, "r1", None)?;
            let r2 = param(params, name, "r2", None)?;
            let m = param(params, name, "M", Some(4.0))?;
            if !(r1 >= 0.0 && r2 > r1) {
                return Err(Error::BadParams {
                    field: name.into(),
                    reason: format!("need 0 <= r1 < r2, got r1 = {r1}, r2 = {r2}"),
                });
            }
            let k = fit_radial_bound(|r| bump_profile(r, r1, r2).0 * (1.0 + r * r).powf(m / 2.0));
            let mut f = ScalarField::new(format!("bump_annulus({r1},{r2})"), dim, m, k, move |z| {
                bump_profile(norm(z), r1, r2).0
            })
            .with_grad(move |z, g| {
                let r = norm(z);
                let dv = if r > 0.0 { bump_profile(r, r1, r2).1 / r } else { 0.0 };
                g.iter_mut().zip(z).for_each(|(gi, zi)| *gi = dv * zi);
            })
            .with_support(r2);
            if r1 > 0.0 {
                f = f.with_vanishing_radius(r1);
            }
            Ok(CatalogField::Scalar(f))
        }
        "const" => {
            reject_unknown(params, name, &["c"])?;
            let c = param(params, name, "c", Some(1.0))?;
            if c <= 0.0 {
                return Err(Error::BadParams {
                    field: name.into(),
                    reason: "weight must be strictly positive".into(),
                });
            }
            Ok(CatalogField::Weight(WeightField::constant(dim, c)))
        }
        "poly_growth" => {
            reject_unknown(params, name, &["r"])?;
            let r = param(params, name, "r", None)?;
            let w = WeightField::new(format!("poly_growth(r={r})"), dim, r, 1.0 + 1e-9, move |z| {
                japanese(z).powf(r)
            })
            .with_grad(move |z, g| {
                let jz2 = norm_sq(z) + 1.0;
                let c = r * jz2.powf(r / 2.0 - 1.0);
                g.iter_mut().zip(z).for_each(|(gi, zi)| *gi = c * zi);
            });
            Ok(CatalogField::Weight(w))
        }
        other => Err(Error::UnknownField(other.to_string())),
    }
}

/// Convenience: catalog integrand with no parameters beyond defaults.
pub fn gaussian(dim: usize) -> ScalarField {
    catalog_lookup("gaussian", &BTreeMap::new(), dim)
        .and_then(CatalogField::into_scalar)
        .expect("gaussian is in the catalog")
}

/// Convenience: `Γ = ⟨z⟩^r`.
pub fn poly_growth(dim: usize, r: f64) -> WeightField {
    let params = BTreeMap::from([("r".to_string(), r)]);
    catalog_lookup("poly_growth", &params, dim)
        .and_then(CatalogField::into_weight)
        .expect("poly_growth is in the catalog")
}

/// Convenience: smooth bump on `r1 < |z| < r2`.
pub fn bump_annulus(dim: usize, r1: f64, r2: f64) -> Result<ScalarField> {
    let params = BTreeMap::from([("r1".to_string(), r1), ("r2".to_string(), r2)]);
    catalog_lookup("bump_annulus", &params, dim).and_then(CatalogField::into_scalar)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn gaussian_with_unit_weight_passes() {
        let spec = ProblemSpec::new(gaussian(4), WeightField::constant(4, 1.0), 2).unwrap();
        let report = validate(&spec, ValidateOptions::default());
        assert!(report.passed(), "{report:?}");
        assert!(spec.f.bound_k > 1.0 && spec.f.bound_k < 2.0);
    }

    #[test]
    fn slow_decay_violates_exponents() {
        let f = catalog_lookup("poly_decay", &params(&[("p", 1.0)]), 4)
            .unwrap()
            .into_scalar()
            .unwrap();
        let spec = ProblemSpec::new(f, WeightField::constant(4, 1.0), 2).unwrap();
        let report = validate(&spec, ValidateOptions::default());
        assert!(!report.passed());
        assert!(matches!(report.ensure(&spec), Err(Error::ConditionHrViolated(_))));
    }

    #[test]
    fn gaussian_with_quadratic_weight_in_six_dims() {
        let f = catalog_lookup("gaussian", &params(&[("M", 12.0)]), 6)
            .unwrap()
            .into_scalar()
            .unwrap();
        let spec = ProblemSpec::new(f, poly_growth(6, 2.0), 3).unwrap();
        assert!(validate(&spec, ValidateOptions::default()).passed());
    }

    #[test]
    fn understated_bound_is_reported_with_point() {
        let f = ScalarField::new("liar", 4, 4.0, 1.01, |z| 3.0 * (-norm_sq(z)).exp());
        let spec = ProblemSpec::new(f, WeightField::constant(4, 1.0), 2).unwrap();
        let report = validate(&spec, ValidateOptions::default());
        let bad = report.checks.iter().find(|c| !c.passed).unwrap();
        assert_eq!(bad.condition, Condition::FDecay);
        assert!(bad.violating_point.is_some());
        assert!(matches!(report.ensure(&spec), Err(Error::FieldUnbounded { .. })));
    }

    #[test]
    fn catalog_metadata() {
        match catalog_lookup("const", &params(&[("c", 1.0)]), 4).unwrap() {
            CatalogField::Weight(w) => {
                assert_eq!(w.growth_r_star, 0.0);
                assert!(w.bound_k > 1.0 && w.bound_k < 1.0 + 1e-6);
                assert_eq!(w.eval(&[3.0, 1.0, 0.0, 2.0]), 1.0);
            }
            _ => panic!("const must be a weight"),
        }
        let w = poly_growth(4, 2.0);
        assert_eq!(w.growth_r_star, 2.0);
        assert!((w.eval(&[1.0, 1.0, 0.0, 0.0]) - 3.0).abs() < 1e-14);
        let b = bump_annulus(2, 0.5, 2.0).unwrap();
        assert_eq!(b.support_radius, Some(2.0));
        assert_eq!(b.vanishing_radius, Some(0.5));
        assert_eq!(b.eval(&[0.4, 0.0]), 0.0);
        assert_eq!(b.eval(&[2.1, 0.0]), 0.0);
        assert!((b.eval(&[1.25, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(
            catalog_lookup("sinc", &BTreeMap::new(), 4),
            Err(Error::UnknownField(_))
        ));
        assert!(matches!(
            catalog_lookup("poly_decay", &BTreeMap::new(), 4),
            Err(Error::BadParams { .. })
        ));
        assert!(matches!(
            catalog_lookup("gaussian", &params(&[("sigma", 1.0)]), 4),
            Err(Error::BadParams { .. })
        ));
        assert!(matches!(
            catalog_lookup("bump_annulus", &params(&[("r1", 2.0), ("r2", 1.0)]), 4),
            Err(Error::BadParams { .. })
        ));
        assert!(matches!(
            catalog_lookup("const", &params(&[("c", -1.0)]), 4),
            Err(Error::BadParams { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let err = ProblemSpec::new(gaussian(3), WeightField::constant(4, 1.0), 2).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 4, got: 3 });
    }

    #[test]
    fn scaling_multiplies_values() {
        let f = gaussian(4).scaled(2.5);
        let z = [0.3, -0.1, 0.2, 0.7];
        assert_eq!(f.eval(&z), 2.5 * (-norm_sq(&z)).exp());
    }
}
