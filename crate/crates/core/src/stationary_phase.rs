//! Oscillatory integrals `I(λ) = ∫ φ e^{iλg} dx` with one nondegenerate
//! critical point, the stationary-phase leading term, and the resolvent-type
//! integral
//!
//! ```text
//! 𝓘(ν) = ν ∫ f / (νΓ + i g) dx,     |𝓘(ν)| ≤ K ν χ_n(ν).
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{check_sweep, chi_d};
use crate::error::{Error, Result};
use crate::fields::{fd_gradient, norm, PointFn, ScalarField};
use crate::mc::{ball_volume, substream, uniform_ball};
use crate::quadrature::{clustered_breaks, gauss_legendre, integrate_adaptive, merge_breaks, sphere_rule};

type HessFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type VecFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A `C³` phase on `R^n`.
#[derive(Clone)]
pub struct Phase {
    pub name: String,
    pub n: usize,
    value: PointFn,
    grad: Option<VecFn>,
    hess: Option<HessFn>,
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Phase")
            .field("name", &self.name)
            .field("n", &self.n)
            .finish()
    }
}

impl Phase {
    pub fn new<G>(name: impl Into<String>, n: usize, g: G) -> Self
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            n,
            value: Arc::new(g),
            grad: None,
            hess: None,
        }
    }

    pub fn with_grad<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hessian<H>(mut self, h: H) -> Self
    where
        H: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(h));
        self
    }

    /// `|x|²/2 + c`.
    pub fn quadratic(n: usize, c: f64) -> Self {
        Self::new(format!("|x|^2/2{c:+}"), n, move |x| {
            0.5 * x.iter().map(|v| v * v).sum::<f64>() + c
        })
        .with_grad(|x, g| g.copy_from_slice(x))
        .with_hessian(move |_| DMatrix::identity(n, n))
    }

    /// `−g`.
    pub fn negated(&self) -> Self {
        let v = self.value.clone();
        let g = self.grad.clone();
        let h = self.hess.clone();
        Self {
            name: format!("-({})", self.name),
            n: self.n,
            value: Arc::new(move |x| -v(x)),
            grad: g.map(|g| -> VecFn {
                Arc::new(move |x, out| {
                    g(x, out);
                    out.iter_mut().for_each(|v| *v = -*v);
                })
            }),
            hess: h.map(|h| -> HessFn { Arc::new(move |x| -h(x)) }),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.grad {
            Some(g) => g(x, out),
            None => fd_gradient(&*self.value, x, 1e-6, out),
        }
    }

    /// Supplied Hessian, or central second differences with step `10⁻⁴`.
    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        if let Some(h) = &self.hess {
            return h(x);
        }
        let n = self.n;
        let h = 1e-4;
        let mut p = x.to_vec();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (si, sj, s) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    p.copy_from_slice(x);
                    p[i] += si * h;
                    p[j] += sj * h;
                    acc += s * self.eval(&p);
                }
                let v = acc / (4.0 * h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// `φ`, `g` and the critical point `x₀`.
#[derive(Debug, Clone)]
pub struct PhaseProblem {
    pub phi: ScalarField,
    pub g: Phase,
    pub x0: Vec<f64>,
    pub n: usize,
    /// Declared `C` with `C⁻¹ ≤ |det g_xx(x₀)| ≤ C`.
    pub hess_c: f64,
    /// `sup_{supp φ} |x − x₀| / |∇g(x)|`, sampled.
    pub c_sharp: f64,
}

/// Determinant and signature of `g_xx(x₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianInfo {
    pub det: f64,
    pub signature: i32,
}

/// Eigenvalues below `10⁻⁸‖H‖` count as zero and make the Hessian degenerate.
pub fn hessian_info(h: &DMatrix<f64>) -> Result<HessianInfo> {
    let scale = h.norm();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::DegenerateHessian);
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut signature = 0;
    for &l in eig.eigenvalues.iter() {
        if l.abs() <= 1e-8 * scale {
            return Err(Error::DegenerateHessian);
        }
        signature += if l > 0.0 { 1 } else { -1 };
    }
    Ok(HessianInfo {
        det: eig.eigenvalues.iter().product(),
        signature,
    })
}

impl PhaseProblem {
    pub fn new(phi: ScalarField, g: Phase, x0: Vec<f64>, hess_c: f64) -> Result<Self> {
        let n = g.n;
        for got in [phi.dim, x0.len()] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        let radius = phi
            .support_radius
            .ok_or_else(|| Error::NotCompactlySupported(phi.name.clone()))?;
        let mut grad = vec![0.0; n];
        g.gradient(&x0, &mut grad);
        if norm(&grad) > 1e-10 {
            return Err(Error::BadParams {
                field: "x0".into(),
                reason: format!("|grad g(x0)| = {:e} > 1e-10", norm(&grad)),
            });
        }
        let info = hessian_info(&g.hessian(&x0))?;
        if !(hess_c >= 1.0 && info.det.abs() >= 1.0 / hess_c && info.det.abs() <= hess_c) {
            return Err(Error::DegenerateHessian);
        }
        let c_sharp = sample_c_sharp(&g, &x0, radius)?;
        Ok(Self {
            phi,
            g,
            x0,
            n,
            hess_c,
            c_sharp,
        })
    }

    pub fn support_radius(&self) -> f64 {
        self.phi.support_radius.unwrap_or(0.0)
    }

    pub fn hessian_info(&self) -> Result<HessianInfo> {
        hessian_info(&self.g.hessian(&self.x0))
    }
}

fn sample_c_sharp(g: &Phase, x0: &[f64], radius: f64) -> Result<f64> {
    let n = g.n;
    let mut rng = substream(0xC5, n as u64, 0);
    let mut x = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut sup = 0.0f64;
    for _ in 0..4096 {
        uniform_ball(&mut rng, radius, &mut x);
        let dist = x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist < 1e-6 * radius.max(1.0) {
            continue;
        }
        g.gradient(&x, &mut grad);
        let gn = norm(&grad);
        if gn == 0.0 {
            return Err(Error::BadParams {
                field: "g".into(),
                reason: format!("second critical point near {x:?}"),
            });
        }
        sup = sup.max(dist / gn);
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy)]
pub struct OscillatoryOptions {
    pub nodes_per_wavelength: f64,
    /// Cap on the total number of tensor-product nodes.
    pub max_nodes: u64,
}

impl Default for OscillatoryOptions {
    fn default() -> Self {
        Self {
            nodes_per_wavelength: 20.0,
            max_nodes: 400_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryValue {
    pub value: Complex64,
    /// `|I_N − I_{N/2}|` for the rule with half the panels per axis.
    pub error_estimate: f64,
    pub nodes: u64,
}

const PANEL: usize = 16;

/// Composite Gauss–Legendre nodes on `[−R, R]`, `panels` panels of 16.
fn axis_rule(radius: f64, panels: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(PANEL);
    let h = 2.0 * radius / panels as f64;
    let mut out = Vec::with_capacity(panels * PANEL);
    for p in 0..panels {
        let mid = -radius + h * (p as f64 + 0.5);
        for &(x, w) in rule {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

fn tensor_sum(p: &PhaseProblem, lambda: f64, axis: &[(f64, f64)]) -> Complex64 {
    let n = p.n;
    let m = axis.len();
    let r2 = p.support_radius().powi(2);
    (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            let mut x = vec![0.0; n];
            let mut acc = Complex64::new(0.0, 0.0);
            loop {
                let mut w = 1.0;
                let mut rr = 0.0;
                for k in 0..n {
                    let (xk, wk) = axis[idx[k]];
                    x[k] = xk;
                    w *= wk;
                    rr += xk * xk;
                }
                if rr < r2 {
                    let f = p.phi.eval(&x);
                    if f != 0.0 {
                        acc += Complex64::from_polar(w * f, lambda * p.g.eval(&x));
                    }
                }
                // Odometer over the remaining axes.
                let mut k = n;
                loop {
                    if k == 1 {
                        return acc;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < m {
                        break;
                    }
                    idx[k] = 0;
                }
                if n == 1 {
                    return acc;
                }
            }
        })
        .sum()
}

/// Largest `|∂_i g|` over the support box, sampled on a grid, with a 10% margin.
fn axis_frequency(p: &PhaseProblem) -> f64 {
    let n = p.n;
    let r = p.support_radius();
    let k = if n <= 2 { 64 } else { 24 };
    let mut x = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut idx = vec![0usize; n];
    let mut best = 0.0f64;
    loop {
        for j in 0..n {
            x[j] = -r + 2.0 * r * idx[j] as f64 / (k - 1) as f64;
        }
        p.g.gradient(&x, &mut grad);
        best = best.max(grad.iter().fold(0.0, |a: f64, b| a.max(b.abs())));
        let mut j = 0;
        loop {
            if j == n {
                return 1.1 * best;
            }
            idx[j] += 1;
            if idx[j] < k {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// `I(λ)` by tensor-product Gauss–Legendre over the support box.
pub fn oscillatory_integral(p: &PhaseProblem, lambda: f64) -> Result<OscillatoryValue> {
    oscillatory_integral_with(p, lambda, OscillatoryOptions::default())
}

pub fn oscillatory_integral_with(p: &PhaseProblem, lambda: f64, opts: OscillatoryOptions) -> Result<OscillatoryValue> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::BadParams {
            field: "lambda".into(),
            reason: format!("need lambda >= 1, got {lambda}"),
        });
    }
    if p.phi.is_zero_field() {
        return Ok(OscillatoryValue {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            nodes: 0,
        });
    }
    let r = p.support_radius();
    let wavelength = 2.0 * PI / (lambda * axis_frequency(p)).max(1e-300);
    let per_axis = (opts.nodes_per_wavelength * 2.0 * r / wavelength).max(4.0 * PANEL as f64);
    let mut panels = (per_axis / PANEL as f64).ceil() as usize;
    panels += panels % 2;
    let m = (panels * PANEL) as u64;
    let nodes = m.saturating_pow(p.n as u32);
    if nodes > opts.max_nodes {
        return Err(Error::ResolutionExceeded {
            lambda,
            nodes,
            budget: opts.max_nodes,
        });
    }
    let fine = tensor_sum(p, lambda, &axis_rule(r, panels));
    let coarse = tensor_sum(p, lambda, &axis_rule(r, panels / 2));
    Ok(OscillatoryValue {
        value: fine,
        error_estimate: (fine - coarse).norm(),
        nodes,
    })
}

/// `(2π/λ)^{n/2} |det g_xx(x₀)|^{−1/2} φ(x₀) e^{iλg(x₀) + iπ sgn g_xx(x₀)/4}`.
pub fn stationary_phase_leading(p: &PhaseProblem, lambda: f64) -> Result<Complex64> {
    let info = p.hessian_info()?;
    let amp = (2.0 * PI / lambda).powf(0.5 * p.n as f64) * info.det.abs().powf(-0.5) * p.phi.eval(&p.x0);
    let arg = lambda * p.g.eval(&p.x0) + 0.25 * PI * info.signature as f64;
    Ok(Complex64::from_polar(amp, arg))
}

/// `|I(λ) − leading(λ)|` over a `λ` ladder, its log-log slope, and `R`
/// fitted at the first `λ` and checked at the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFit {
    pub lambdas: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    /// Expected `−n/2 − 1`.
    pub expected_slope: f64,
    pub r_const: f64,
    pub bound_holds: bool,
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn leading_error_fit(p: &PhaseProblem, lambdas: &[f64]) -> Result<ErrorFit> {
    if lambdas.len() < 2 {
        return Err(Error::BadParams {
            field: "lambdas".into(),
            reason: "need at least two values".into(),
        });
    }
    let half = 0.5 * p.n as f64;
    let mut errors = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let i = oscillatory_integral(p, l)?;
        errors.push((i.value - stationary_phase_leading(p, l)?).norm());
    }
    let r_const = 1.1 * errors[0] * lambdas[0].powf(half + 1.0);
    let bound_holds = lambdas
        .iter()
        .zip(&errors)
        .all(|(l, e)| *e <= r_const * l.powf(-half - 1.0));
    Ok(ErrorFit {
        slope: loglog_slope(lambdas, &errors),
        expected_slope: -half - 1.0,
        lambdas: lambdas.to_vec(),
        errors,
        r_const,
        bound_holds,
    })
}

/// `C′ = 1.1 max_λ |I(λ)| λ^{n/2}` over the ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambdas: Vec<f64>,
    pub abs_values: Vec<f64>,
    pub c_prime: f64,
}

pub fn decay_constant_fit(p: &PhaseProblem, lambdas: &[f64]) -> Result<DecayFit> {
    let half = 0.5 * p.n as f64;
    let mut abs_values = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        abs_values.push(oscillatory_integral(p, l)?.value.norm());
    }
    let c_prime = 1.1
        * lambdas
            .iter()
            .zip(&abs_values)
            .map(|(l, a)| a * l.powf(half))
            .fold(0.0, f64::max);
    Ok(DecayFit {
        lambdas: lambdas.to_vec(),
        abs_values,
        c_prime,
    })
}

/// The split `𝓘 = 𝓘₁ + 𝓘₂` at `t = −ν` of the Laplace representation
/// `∫_{−∞}^0 e^{t(Γ + iν⁻¹g)} dt = 1/(Γ + iν⁻¹g)`, truncated at `t = −40/Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceSplit {
    pub i1: Complex64,
    pub i2: Complex64,
    /// `|𝓘₁ + 𝓘₂ − 𝓘|`
    pub identity_gap: f64,
    /// `C²ν` with `C = max(sup|f|, meas supp f)`.
    pub i1_bound: f64,
    pub i1_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventRow {
    pub nu: f64,
    pub value: Complex64,
    pub abs_i: f64,
    /// `|𝓘(ν)| / (ν χ_n(ν))`
    pub bound_ratio: f64,
    pub laplace: Option<LaplaceSplit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventReport {
    pub n: usize,
    pub rows: Vec<ResolventRow>,
    /// Every ratio at most three times the ratio at the largest `ν`.
    pub bounded: bool,
}

impl ResolventReport {
    pub fn certify(&self) -> Result<()> {
        let limit = 3.0 * self.rows.first().map(|r| r.bound_ratio).unwrap_or(0.0);
        match self.rows.iter().find(|r| r.bound_ratio > limit) {
            Some(r) => Err(Error::RemainderUnbounded {
                nu: r.nu,
                ratio: r.bound_ratio,
                limit,
            }),
            None => Ok(()),
        }
    }
}

/// `∫_{R^n} h(x) dx` in polar coordinates about `x₀`; radial panels are
/// clustered at the sign changes of `g` along each ray on the scale `width/|∂_r g|`.
fn polar_integral<H>(p_n: usize, g: &Phase, x0: &[f64], r_max: f64, width: f64, h: H) -> Result<Complex64>
where
    H: Fn(&[f64]) -> Complex64 + Sync,
{
    let base: Vec<f64> = (0..=16).map(|i| r_max * i as f64 / 16.0).collect();
    let ray = |u: &[f64]| -> Result<Complex64> {
        let mut x = vec![0.0; p_n];
        let at = |r: f64, x: &mut [f64]| {
            x.iter_mut().zip(u).zip(x0).for_each(|((a, b), c)| *a = c + r * b);
        };
        let gr = |r: f64| {
            let mut y = vec![0.0; p_n];
            at(r, &mut y);
            g.eval(&y)
        };
        let mut sets = vec![base.clone()];
        let probes = 256;
        let mut prev = gr(0.0);
        for i in 1..=probes {
            let (a, b) = (r_max * (i - 1) as f64 / probes as f64, r_max * i as f64 / probes as f64);
            let cur = gr(b);
            if prev == 0.0 || prev.signum() != cur.signum() {
                let (mut lo, mut hi) = (a, b);
                let s_lo = gr(lo).signum();
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if gr(mid).signum() == s_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let root = 0.5 * (lo + hi);
                let step = 1e-6 * r_max;
                let slope = ((gr(root + step) - gr(root - step)) / (2.0 * step)).abs().max(1e-12);
                sets.push(clustered_breaks(0.0, r_max, root, width / slope / 8.0));
            }
            prev = cur;
        }
        let breaks = merge_breaks(&sets);
        let f = |r: f64| {
            at(r, &mut x);
            h(&x) * r.powi(p_n as i32 - 1)
        };
        Ok(integrate_adaptive(f, &breaks, 1e-10, 1e-300)?.0)
    };
    let eval = |level: u32| -> Result<Complex64> {
        let parts: Vec<Result<Complex64>> = sphere_rule(p_n, level)
            .par_iter()
            .map(|(u, w)| ray(&u[..p_n]).map(|v| v * *w))
            .collect();
        parts.into_iter().sum()
    };
    let mut prev = eval(0)?;
    for level in 1..=6 {
        let cur = eval(level)?;
        if (cur - prev).norm() <= 1e-8 * cur.norm() || cur == prev {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergent(
        "angular refinement in resolvent integral".into(),
    ))
}

/// `𝓘(ν)` over the sweep, with the ratio test and, when `laplace` is set,
/// the `𝓘₁ + 𝓘₂` split.
pub fn resolvent_bound_check(
    f: &ScalarField,
    g: &Phase,
    x0: &[f64],
    gamma: f64,
    nu_sweep: &[f64],
    laplace: bool,
) -> Result<ResolventReport> {
    let n = g.n;
    if !(2..=3).contains(&n) {
        return Err(Error::Unsupported(format!("resolvent quadrature for n = {n}")));
    }
    for got in [f.dim, x0.len()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    if !(gamma > 0.0) {
        return Err(Error::BadParams {
            field: "gamma".into(),
            reason: format!("need gamma > 0, got {gamma}"),
        });
    }
    check_sweep(nu_sweep)?;
    let radius = f
        .support_radius
        .ok_or_else(|| Error::NotCompactlySupported(f.name.clone()))?;
    if (norm(x0) - radius).abs() <= 1e-9 * radius.max(1.0) {
        return Err(Error::CriticalPointOnSupportBoundary);
    }
    hessian_info(&g.hessian(x0))?;
    if f.is_zero_field() {
        let rows = nu_sweep
            .iter()
            .map(|&nu| ResolventRow {
                nu,
                value: Complex64::new(0.0, 0.0),
                abs_i: 0.0,
                bound_ratio: 0.0,
                laplace: None,
            })
            .collect();
        return Ok(ResolventReport { n, rows, bounded: true });
    }
    let r_max = norm(x0) + radius;
    let sup_f = {
        let mut rng = substream(0x5F, n as u64, 0);
        let mut x = vec![0.0; n];
        (0..20_000)
            .map(|_| {
                uniform_ball(&mut rng, radius, &mut x);
                f.eval(&x).abs()
            })
            .fold(0.0, f64::max)
            * 1.1
    };
    let c_const = sup_f.max(ball_volume(n) * radius.powi(n as i32));
    let mut rows = Vec::with_capacity(nu_sweep.len());
    for &nu in nu_sweep {
        let width = nu * gamma;
        let value = polar_integral(n, g, x0, r_max, width, |x| {
            let fv = f.eval(x);
            if fv == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            nu * fv / Complex64::new(nu * gamma, g.eval(x))
        })?;
        let split = if laplace {
            let c_of = |x: &[f64]| Complex64::new(gamma, g.eval(x) / nu);
            let i1 = polar_integral(n, g, x0, r_max, width, |x| {
                let fv = f.eval(x);
                if fv == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let c = c_of(x);
                fv * (1.0 - (-nu * c).exp()) / c
            })?;
            let i2 = polar_integral(n, g, x0, r_max, width, |x| {
                let fv = f.eval(x);
                if fv == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let c = c_of(x);
                fv * ((-nu * c).exp() - (-40.0 * c / gamma).exp()) / c
            })?;
            let i1_bound = c_const * c_const * nu;
            Some(LaplaceSplit {
                i1,
                i2,
                identity_gap: (i1 + i2 - value).norm(),
                i1_bound,
                i1_ok: i1.norm() <= i1_bound,
            })
        } else {
            None
        };
        let abs_i = value.norm();
        rows.push(ResolventRow {
            nu,
            value,
            abs_i,
            bound_ratio: abs_i / (nu * chi_d(n, nu)),
            laplace: split,
        });
    }
    let limit = 3.0 * rows[0].bound_ratio;
    let bounded = rows.iter().all(|r| r.bound_ratio <= limit);
    Ok(ResolventReport { n, rows, bounded })
}

/// `φ = e^{−a|x|²}` cut off at `|x| = R`.
pub fn gaussian_bump(n: usize, a: f64, radius: f64) -> ScalarField {
    let r2 = radius * radius;
    ScalarField::new(format!("exp(-{a}|x|^2)"), n, f64::INFINITY, 1.0 + 1e-9, move |x| {
        let s: f64 = x.iter().map(|v| v * v).sum();
        if s < r2 {
            (-a * s).exp()
        } else {
            0.0
        }
    })
    .with_support(radius)
}

/// The stock problem: `φ = e^{−4|x|²}` on `|x| < 3.05`, `g = |x|²/2`, `x₀ = 0`.
pub fn gaussian_problem(n: usize) -> Result<PhaseProblem> {
    PhaseProblem::new(gaussian_bump(n, 4.0, 3.05), Phase::quadratic(n, 0.0), vec![0.0; n], 2.0)
}

/// Monte Carlo cross-check of `𝓘(ν)` in a ball (used in tests).
#[doc(hidden)]
pub fn resolvent_mc(f: &ScalarField, g: &Phase, gamma: f64, nu: f64, samples: usize, seed: u64) -> Complex64 {
    let n = g.n;
    let radius = f.support_radius.unwrap_or(1.0);
    let vol = ball_volume(n) * radius.powi(n as i32);
    let mut rng = substream(seed, 0x4E5, 0);
    let mut x = vec![0.0; n];
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..samples {
        uniform_ball(&mut rng, radius, &mut x);
        acc += nu * f.eval(&x) / Complex64::new(nu * gamma, g.eval(&x));
    }
    acc * (vol / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::bump_annulus;

    #[test]
    fn leading_term_for_identity_hessian() {
        let p = gaussian_problem(2).unwrap();
        let l = stationary_phase_leading(&p, 50.0).unwrap();
        let want = Complex64::new(0.0, 2.0 * PI / 50.0);
        assert!((l - want).norm() < 1e-15);
    }

    #[test]
    fn gaussian_integral_is_exact() {
        // ∫ e^{−4x² + iλx²/2} dx = sqrt(π/(4 − iλ/2)).
        let p = gaussian_problem(1).unwrap();
        for lambda in [1.0, 10.0, 80.0] {
            let v = oscillatory_integral(&p, lambda).unwrap();
            let exact = (Complex64::new(PI, 0.0) / Complex64::new(4.0, -0.5 * lambda)).sqrt();
            assert!((v.value - exact).norm() < 1e-12 * exact.norm(), "{lambda}: {v:?}");
        }
    }

    #[test]
    fn constant_phase_factors_out() {
        let phi = gaussian_bump(2, 4.0, 3.05);
        let g = Phase::new("const", 2, |_| 0.7);
        let p = PhaseProblem {
            phi: phi.clone(),
            g,
            x0: vec![0.0, 0.0],
            n: 2,
            hess_c: 1.0,
            c_sharp: f64::INFINITY,
        };
        let v = oscillatory_integral(&p, 3.0).unwrap().value;
        let mass = PI / 4.0;
        let want = Complex64::from_polar(mass, 2.1);
        assert!((v - want).norm() < 1e-13);
    }

    #[test]
    fn conjugate_phase_conjugates() {
        let p = gaussian_problem(2).unwrap();
        let q = PhaseProblem::new(p.phi.clone(), p.g.negated(), vec![0.0, 0.0], 2.0).unwrap();
        let a = oscillatory_integral(&p, 15.0).unwrap().value;
        let b = oscillatory_integral(&q, 15.0).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-13);
        assert_eq!(q.hessian_info().unwrap().signature, -2);
    }

    #[test]
    fn error_slope_in_one_dimension() {
        let p = gaussian_problem(1).unwrap();
        let fit = leading_error_fit(&p, &[20.0, 40.0, 80.0, 160.0]).unwrap();
        assert!((fit.slope - fit.expected_slope).abs() < 0.15, "{fit:?}");
        assert!(fit.bound_holds);
    }

    #[test]
    fn degenerate_and_resolution_errors() {
        let g = Phase::new("quartic", 1, |x| x[0].powi(4));
        let bad = PhaseProblem::new(gaussian_bump(1, 4.0, 3.05), g, vec![0.0], 2.0);
        assert!(matches!(bad, Err(Error::DegenerateHessian)));
        let p = gaussian_problem(2).unwrap();
        let opts = OscillatoryOptions {
            max_nodes: 1000,
            ..Default::default()
        };
        assert!(matches!(
            oscillatory_integral_with(&p, 100.0, opts),
            Err(Error::ResolutionExceeded { .. })
        ));
    }

    #[test]
    fn resolvent_matches_mc_and_split_adds_up() {
        let f = bump_annulus(2, 0.0, 1.0).unwrap();
        let g = Phase::quadratic(2, -0.1);
        let rep = resolvent_bound_check(&f, &g, &[0.0, 0.0], 1.0, &[0.1], true).unwrap();
        let row = rep.rows[0];
        let mc = resolvent_mc(&f, &g, 1.0, 0.1, 400_000, 1);
        assert!((row.value - mc).norm() < 0.02 * row.abs_i, "{row:?} vs {mc}");
        let split = row.laplace.unwrap();
        assert!(split.identity_gap < 1e-8 * row.abs_i);
        assert!(split.i1_ok);
    }

    #[test]
    fn resolvent_ratio_bounded() {
        let f = bump_annulus(2, 0.0, 1.0).unwrap();
        let g = Phase::quadratic(2, -0.1);
        let rep = resolvent_bound_check(&f, &g, &[0.0, 0.0], 1.0, &[0.1, 0.01, 0.001], false).unwrap();
        assert!(rep.bounded, "{rep:?}");
        rep.certify().unwrap();
    }

    #[test]
    fn critical_point_on_boundary() {
        let f = bump_annulus(2, 0.0, 1.0).unwrap();
        let g = Phase::new("shifted", 2, |x| 0.5 * ((x[0] - 1.0).powi(2) + x[1] * x[1]));
        let err = resolvent_bound_check(&f, &g, &[1.0, 0.0], 1.0, &[0.1], false);
        assert!(matches!(err, Err(Error::CriticalPointOnSupportBoundary)));
    }
}
