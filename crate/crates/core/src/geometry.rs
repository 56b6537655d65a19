//! Geometry of the quadric `Σ = {x·y = 0} ⊂ R^{2d}`.
//!
//! Points of `R^{2d}` are stored as `z = (x, y)` with `x = z[..d]`, `y = z[d..]`.
//! Near `Σ* = Σ \ {0}` every point is written uniquely as
//! `π(ξ, θ) = (x_ξ + θ y_ξ, y_ξ + θ x_ξ)` with `ξ ∈ Σ*`, and the map inverts in
//! closed form through `a = x + y`, `b = x − y`:
//!
//! ```text
//! θ = (|a| − |b|)/(|a| + |b|),   x_ξ + y_ξ = a/(1+θ),   x_ξ − y_ξ = b/(1−θ).
//! ```
//!
//! Splitting `ξ = tη` with `t = |ξ|`, `η ∈ Σ¹`, the Lebesgue measure becomes
//! `t^{2d−1} μ(η, θ) m(dη) dt dθ` where `m` is the surface measure of `Σ¹`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{norm, norm_sq};
use crate::mc::{sphere_area, substream, unit_sphere, McRng};

/// Default half-width of the certified tube `|θ| < θ₀*`.
pub const THETA0_STAR: f64 = 0.1;

/// Relative tolerance for membership in `Σ`.
pub const ON_QUADRIC_TOL: f64 = 1e-12;

/// `ω(z) = x·y`.
#[inline]
pub fn omega(z: &[f64]) -> f64 {
    let d = z.len() / 2;
    z[..d].iter().zip(&z[d..]).map(|(a, b)| a * b).sum()
}

/// A point `z = (x, y)` of `R^{2d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl AmbientPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn from_z(z: &[f64]) -> Self {
        let d = z.len() / 2;
        Self {
            x: z[..d].to_vec(),
            y: z[d..].to_vec(),
        }
    }

    pub fn to_z(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.extend_from_slice(&self.y);
        z
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn omega(&self) -> f64 {
        self.x.iter().zip(&self.y).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        (norm_sq(&self.x) + norm_sq(&self.y)).sqrt()
    }
}

/// A point of `Σ* = {x·y = 0} \ {0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadricPoint {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl QuadricPoint {
    /// Checks `|x·y| ≤ 10⁻¹²(|x|² + |y|²)` and `(x, y) ≠ 0`.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let p = AmbientPoint::new(x, y)?;
        let n2 = norm_sq(&p.x) + norm_sq(&p.y);
        if n2 == 0.0 {
            return Err(Error::DegeneratePoint);
        }
        let residual = p.omega().abs();
        if residual > ON_QUADRIC_TOL * n2 {
            return Err(Error::NotOnQuadric { residual });
        }
        Ok(Self { x: p.x, y: p.y })
    }

    pub fn from_z(z: &[f64]) -> Result<Self> {
        let p = AmbientPoint::from_z(z);
        Self::new(p.x, p.y)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn to_z(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.extend_from_slice(&self.y);
        z
    }

    /// `|ξ|`
    pub fn norm(&self) -> f64 {
        (norm_sq(&self.x) + norm_sq(&self.y)).sqrt()
    }

    /// The normal `N(ξ) = (y_ξ, x_ξ)`.
    pub fn normal(&self) -> Vec<f64> {
        let mut n = self.y.clone();
        n.extend_from_slice(&self.x);
        n
    }

    /// `(η, t)` with `t = |ξ|` and `η = ξ/t ∈ Σ¹`.
    pub fn split(&self) -> (QuadricPoint, f64) {
        let t = self.norm();
        let s = 1.0 / t;
        (
            QuadricPoint {
                x: self.x.iter().map(|v| v * s).collect(),
                y: self.y.iter().map(|v| v * s).collect(),
            },
            t,
        )
    }

    pub fn scaled(&self, r: f64) -> QuadricPoint {
        QuadricPoint {
            x: self.x.iter().map(|v| v * r).collect(),
            y: self.y.iter().map(|v| v * r).collect(),
        }
    }
}

/// Normal coordinates of a point near `Σ*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeCoords {
    pub base: QuadricPoint,
    pub theta: f64,
    pub theta0: f64,
}

impl TubeCoords {
    /// Normal coordinates of `z`, failing outside `|θ| < θ₀`.
    pub fn of(z: &AmbientPoint, theta0: f64) -> Result<Self> {
        let (base, theta) = invert_pi(z)?;
        if theta.abs() >= theta0 {
            return Err(Error::OutsideTube { theta, theta0 });
        }
        Ok(Self { base, theta, theta0 })
    }

    pub fn eta_t(&self) -> (QuadricPoint, f64) {
        self.base.split()
    }

    pub fn point(&self) -> AmbientPoint {
        pi_map(&self.base, self.theta)
    }
}

/// Volume density at a tube point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianSample {
    /// `μ(η, θ)`
    pub mu: f64,
    /// Square root of the Gram determinant of `(s, t, θ) ↦ π(tγ(s), θ)`.
    pub gram_det_sqrt: f64,
}

/// `π(ξ, θ) = ξ + θ N(ξ)`.
pub fn pi_map(xi: &QuadricPoint, theta: f64) -> AmbientPoint {
    let d = xi.d();
    let mut out = vec![0.0; 2 * d];
    pi_map_into(&xi.to_z(), theta, &mut out);
    AmbientPoint::from_z(&out)
}

/// Slice form of [`pi_map`]: `out = π(xi, θ)` with `xi = (x_ξ, y_ξ)`.
#[inline]
pub fn pi_map_into(xi: &[f64], theta: f64, out: &mut [f64]) {
    let d = xi.len() / 2;
    for i in 0..d {
        out[i] = xi[i] + theta * xi[d + i];
        out[d + i] = xi[d + i] + theta * xi[i];
    }
}

/// Closed-form inverse of [`pi_map`].
pub fn invert_pi(z: &AmbientPoint) -> Result<(QuadricPoint, f64)> {
    let zz = z.to_z();
    let mut xi = vec![0.0; zz.len()];
    let theta = invert_pi_into(&zz, &mut xi).ok_or(Error::DegeneratePoint)?;
    let d = z.d();
    Ok((
        QuadricPoint {
            x: xi[..d].to_vec(),
            y: xi[d..].to_vec(),
        },
        theta,
    ))
}

/// Slice form of [`invert_pi`]; writes `ξ` into `xi` and returns `θ`, or
/// `None` when `x + y = 0` or `x − y = 0`.
#[inline]
pub fn invert_pi_into(z: &[f64], xi: &mut [f64]) -> Option<f64> {
    let d = z.len() / 2;
    let (mut na, mut nb) = (0.0, 0.0);
    for i in 0..d {
        let a = z[i] + z[d + i];
        let b = z[i] - z[d + i];
        na += a * a;
        nb += b * b;
    }
    let (na, nb) = (na.sqrt(), nb.sqrt());
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let theta = (na - nb) / (na + nb);
    // a/(1+θ) and b/(1−θ) both have length (|a|+|b|)/2.
    let sa = 0.5 * (na + nb) / na;
    let sb = 0.5 * (na + nb) / nb;
    for i in 0..d {
        let s = (z[i] + z[d + i]) * sa;
        let dv = (z[i] - z[d + i]) * sb;
        xi[i] = 0.5 * (s + dv);
        xi[d + i] = 0.5 * (s - dv);
    }
    Some(theta)
}

/// Normal coordinate `θ(z)`, defined everywhere except where `x ± y = 0`
/// (there `|θ| = 1`). Scale invariant.
#[inline]
pub fn theta_of(z: &[f64]) -> f64 {
    let d = z.len() / 2;
    let (mut na, mut nb) = (0.0, 0.0);
    for i in 0..d {
        let a = z[i] + z[d + i];
        let b = z[i] - z[d + i];
        na += a * a;
        nb += b * b;
    }
    let (na, nb) = (na.sqrt(), nb.sqrt());
    if na + nb == 0.0 {
        return 0.0;
    }
    (na - nb) / (na + nb)
}

/// Euclidean distance from `z` to `Σ`, valid for every `z`:
/// `||A| − |B|| / √2` with `A = (x+y)/√2`, `B = (x−y)/√2`.
pub fn distance_exact(z: &[f64]) -> f64 {
    let d = z.len() / 2;
    let (mut na, mut nb) = (0.0, 0.0);
    for i in 0..d {
        let a = z[i] + z[d + i];
        let b = z[i] - z[d + i];
        na += a * a;
        nb += b * b;
    }
    (na.sqrt() - nb.sqrt()).abs() / 2.0
}

/// `|ξ||θ|` inside the certified tube `|θ| < theta0_star`.
pub fn dist_to_quadric(z: &AmbientPoint, theta0_star: f64) -> Result<f64> {
    let (xi, theta) = invert_pi(z)?;
    if theta.abs() >= theta0_star {
        return Err(Error::OutsideTube {
            theta,
            theta0: theta0_star,
        });
    }
    Ok(xi.norm() * theta.abs())
}

/// Orthonormal basis of `T_η Σ¹ = {η, N(η)}^⊥`, by Gram–Schmidt on the
/// standard basis.
pub fn tangent_frame(eta: &QuadricPoint) -> Result<Vec<Vec<f64>>> {
    let z = eta.to_z();
    let n = z.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let zn = norm(&z);
    if zn == 0.0 {
        return Err(Error::FrameConstructionFailed);
    }
    basis.push(z.iter().map(|v| v / zn).collect());
    let nn = eta.normal();
    let nnn = norm(&nn);
    basis.push(nn.iter().map(|v| v / nnn).collect());
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        // Two passes of modified Gram–Schmidt.
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = v.iter().zip(b).map(|(p, q)| p * q).sum();
                v.iter_mut().zip(b).for_each(|(p, q)| *p -= c * q);
            }
        }
        let vn = norm(&v);
        if vn > 1e-6 {
            basis.push(v.iter().map(|p| p / vn).collect());
        }
    }
    if basis.len() != n {
        return Err(Error::FrameConstructionFailed);
    }
    Ok(basis.split_off(2))
}

/// Retraction of `η + v` back onto `Σ¹`.
fn retract(eta: &[f64], v: &[f64], out: &mut [f64]) {
    let p: Vec<f64> = eta.iter().zip(v).map(|(a, b)| a + b).collect();
    invert_pi_into(&p, out).expect("retraction near Σ¹");
    let s = 1.0 / norm(out);
    out.iter_mut().for_each(|v| *v *= s);
}

/// `μ(η, θ)` from the Gram determinant of `(s, t, θ) ↦ π(tγ(s), θ)` at `t`,
/// where `γ` retracts the tangent frame of `Σ¹` at `η`. Derivatives by central
/// differences with step `10⁻⁵`.
pub fn mu_density_at(eta: &QuadricPoint, theta: f64, t: f64) -> Result<JacobianSample> {
    const H: f64 = 1e-5;
    let d = eta.d();
    let n = 2 * d;
    let e = eta.to_z();
    let frame = tangent_frame(eta)?;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    let mut pp = vec![0.0; n];
    let mut pm = vec![0.0; n];
    let param = |g: &[f64], tt: f64, th: f64, out: &mut [f64]| {
        let base: Vec<f64> = g.iter().map(|v| v * tt).collect();
        pi_map_into(&base, th, out);
    };
    for v in &frame {
        let vp: Vec<f64> = v.iter().map(|c| c * H).collect();
        let vm: Vec<f64> = v.iter().map(|c| -c * H).collect();
        retract(&e, &vp, &mut gp);
        retract(&e, &vm, &mut gm);
        param(&gp, t, theta, &mut pp);
        param(&gm, t, theta, &mut pm);
        cols.push(pp.iter().zip(&pm).map(|(a, b)| (a - b) / (2.0 * H)).collect());
    }
    let ht = H * t;
    param(&e, t + ht, theta, &mut pp);
    param(&e, t - ht, theta, &mut pm);
    cols.push(pp.iter().zip(&pm).map(|(a, b)| (a - b) / (2.0 * ht)).collect());
    param(&e, t, theta + H, &mut pp);
    param(&e, t, theta - H, &mut pm);
    cols.push(pp.iter().zip(&pm).map(|(a, b)| (a - b) / (2.0 * H)).collect());

    let gram = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum::<f64>()
    });
    let det = gram.determinant();
    if !(det > 0.0) {
        return Err(Error::FrameConstructionFailed);
    }
    let gram_det_sqrt = det.sqrt();
    Ok(JacobianSample {
        mu: gram_det_sqrt / t.powi(n as i32 - 1),
        gram_det_sqrt,
    })
}

/// `μ(η, θ)` evaluated at `t = 1`.
pub fn mu_density(eta: &QuadricPoint, theta: f64) -> Result<JacobianSample> {
    mu_density_at(eta, theta, 1.0)
}

/// Closed form `μ(η, θ) = (1 − θ²)^{d−1}`, used on hot paths.
#[inline]
pub fn mu_closed_form(d: usize, theta: f64) -> f64 {
    (1.0 - theta * theta).powi(d as i32 - 1)
}

/// `m(Σ¹) = 2^{1−d} |S^{d−1}|²` (for `d = 1`, four points).
pub fn sigma1_mass(d: usize) -> f64 {
    let s = sphere_area(d);
    s * s * 2f64.powi(1 - d as i32)
}

/// How points on `Σ¹` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sigma1Scheme {
    /// Uniform proposals on `S^{2d−1}` accepted when `|ω| < eps_slab`, then
    /// projected onto `Σ¹`.
    ThinSlab { eps_slab: f64 },
    /// `x = (u+v)/2`, `y = (u−v)/2` with `u, v` uniform on `S^{d−1}`; exact.
    Product,
}

impl Default for Sigma1Scheme {
    fn default() -> Self {
        Sigma1Scheme::ThinSlab { eps_slab: 1e-3 }
    }
}

/// A weighted point of `Σ¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sigma1Sample {
    pub eta: QuadricPoint,
    pub weight: f64,
}

/// Draw one exact-uniform point of `Σ¹` into `out` (length `2d`).
pub fn sigma1_product_point<R: Rng + ?Sized>(rng: &mut R, d: usize, out: &mut [f64]) {
    let mut u = [0.0f64; 16];
    let mut v = [0.0f64; 16];
    let (u, v) = if d <= 16 {
        (&mut u[..d], &mut v[..d])
    } else {
        unreachable!("dimension above 16 is not supported by the product sampler")
    };
    unit_sphere(rng, u);
    unit_sphere(rng, v);
    for i in 0..d {
        out[i] = 0.5 * (u[i] + v[i]);
        out[d + i] = 0.5 * (u[i] - v[i]);
    }
}

/// Weighted samples whose weighted sums estimate `∫_{Σ¹} g m(dη)`.
///
/// `n` is the number of proposals. The thin-slab scheme returns only the
/// accepted ones, each weighted `|S^{2d−1}| / (2 ε_slab n)`; on `Σ¹` the
/// spherical gradient of `ω` has unit length, so no further correction is
/// needed at first order. The product scheme returns `n` points of weight
/// `m(Σ¹)/n`.
pub fn sample_sigma1(d: usize, n: usize, seed: u64, scheme: Sigma1Scheme, theta0: f64) -> Result<Vec<Sigma1Sample>> {
    if d == 0 || d > 16 {
        return Err(Error::Unsupported(format!("sample_sigma1 for d = {d}")));
    }
    if n == 0 {
        return Err(Error::BadParams {
            field: "sample_sigma1".into(),
            reason: "n must be at least 1".into(),
        });
    }
    let mut rng: McRng = substream(seed, 0x51, d as u64);
    let mut z = vec![0.0; 2 * d];
    let mut xi = vec![0.0; 2 * d];
    let mut out = Vec::new();
    match scheme {
        Sigma1Scheme::Product => {
            let w = sigma1_mass(d) / n as f64;
            for _ in 0..n {
                sigma1_product_point(&mut rng, d, &mut z);
                out.push(Sigma1Sample {
                    eta: snap(&z)?,
                    weight: w,
                });
            }
        }
        Sigma1Scheme::ThinSlab { eps_slab } => {
            if eps_slab > theta0 / 4.0 {
                return Err(Error::SlabTooWide {
                    eps_slab,
                    limit: theta0 / 4.0,
                });
            }
            let w = sphere_area(2 * d) / (2.0 * eps_slab * n as f64);
            for _ in 0..n {
                unit_sphere(&mut rng, &mut z);
                if omega(&z).abs() >= eps_slab {
                    continue;
                }
                if invert_pi_into(&z, &mut xi).is_none() {
                    continue;
                }
                let s = 1.0 / norm(&xi);
                xi.iter_mut().for_each(|v| *v *= s);
                out.push(Sigma1Sample {
                    eta: snap(&xi)?,
                    weight: w,
                });
            }
        }
    }
    Ok(out)
}

fn snap(z: &[f64]) -> Result<QuadricPoint> {
    let d = z.len() / 2;
    Ok(QuadricPoint {
        x: z[..d].to_vec(),
        y: z[d..].to_vec(),
    })
    .and_then(|p: QuadricPoint| {
        let n2 = norm_sq(&p.x) + norm_sq(&p.y);
        let r = p.x.iter().zip(&p.y).map(|(a, b)| a * b).sum::<f64>().abs();
        if r > ON_QUADRIC_TOL * n2 {
            Err(Error::NotOnQuadric { residual: r })
        } else {
            Ok(p)
        }
    })
}

/// Smallest `|x·y|/R²` over random points of `S^R` at distance at least
/// `(θ₀/2) R (1+θ₀²)^{−1/2}` from `Σ`, i.e. outside the tube.
pub fn fit_outside_tube_constant(d: usize, theta0: f64, n: usize, seed: u64) -> f64 {
    let mut rng = substream(seed, 0x5A, d as u64);
    let mut z = vec![0.0; 2 * d];
    let mut c = f64::INFINITY;
    for i in 0..n {
        let r = 10f64.powf(-2.0 + 4.0 * (i as f64 + 0.5) / n as f64);
        unit_sphere(&mut rng, &mut z);
        z.iter_mut().for_each(|v| *v *= r);
        if distance_exact(&z) >= 0.5 * theta0 * r / (1.0 + theta0 * theta0).sqrt() {
            c = c.min(omega(&z).abs() / (r * r));
        }
    }
    c
}

/// Analytic lower bound for [`fit_outside_tube_constant`]:
/// `θ₀ / (2√2 √(1+θ₀²))`.
pub fn outside_tube_constant(theta0: f64) -> f64 {
    theta0 / (2.0 * 2f64.sqrt() * (1.0 + theta0 * theta0).sqrt())
}

/// Worst case of one identity over a random batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub cases: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: &str, cases: usize, max_rel_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            cases,
            max_rel_error,
            tolerance,
            passed: max_rel_error <= tolerance,
        }
    }
}

/// The normal-coordinate identities on `n` random `(ξ, θ)`, `|ξ|` log-uniform
/// on `[10⁻³, 10³]` and `|θ| < 0.9`:
///
/// * `|π(ξ, θ)| = |ξ| √(1 + θ²)`;
/// * `ω(π(ξ, θ)) = |ξ|² θ` (error relative to `|π|²`);
/// * `π⁻¹(π(ξ, θ)) = (ξ, θ)`;
/// * `π(rξ, θ) = r π(ξ, θ)` and `θ(rz) = θ(z)`.
pub fn identity_suite(d: usize, n: usize, seed: u64) -> Result<Vec<IdentityCheck>> {
    if d == 0 || d > 16 {
        return Err(Error::Unsupported(format!("identity suite for d = {d}")));
    }
    let m = 2 * d;
    let mut rng = substream(seed, 0x1D, d as u64);
    let (mut e_norm, mut e_omega, mut e_trip, mut e_dil) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut xi = vec![0.0; m];
    let mut z = vec![0.0; m];
    let mut back = vec![0.0; m];
    let mut zr = vec![0.0; m];
    for _ in 0..n {
        sigma1_product_point(&mut rng, d, &mut xi);
        let t = 10f64.powf(rng.random_range(-3.0..3.0));
        xi.iter_mut().for_each(|v| *v *= t);
        let theta: f64 = rng.random_range(-0.9..0.9);
        pi_map_into(&xi, theta, &mut z);
        let nz = norm(&z);
        e_norm = e_norm.max((nz - t * (1.0 + theta * theta).sqrt()).abs() / nz);
        e_omega = e_omega.max((omega(&z) - t * t * theta).abs() / (nz * nz));
        let th = invert_pi_into(&z, &mut back).ok_or(Error::DegeneratePoint)?;
        let dx = back.iter().zip(&xi).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / t;
        e_trip = e_trip.max(dx.max((th - theta).abs()));
        let r = 10f64.powf(rng.random_range(-2.0..2.0));
        let scaled: Vec<f64> = xi.iter().map(|v| r * v).collect();
        pi_map_into(&scaled, theta, &mut zr);
        let dd = zr.iter().zip(&z).map(|(a, b)| (a - r * b).powi(2)).sum::<f64>().sqrt() / (r * nz);
        let dth = (theta_of(&zr) - theta_of(&z)).abs();
        e_dil = e_dil.max(dd.max(dth));
    }
    Ok(vec![
        IdentityCheck::new("norm", n, e_norm, 1e-12),
        IdentityCheck::new("omega", n, e_omega, 1e-12),
        IdentityCheck::new("round_trip", n, e_trip, 1e-10),
        IdentityCheck::new("dilation", n, e_dil, 1e-12),
    ])
}

/// Volume element on an `n_eta × n_theta` grid: largest `|μ(η, 0) − 1|`,
/// largest `|μ_Gram(η, θ) − (1 − θ²)^{d−1}|`, and largest spread of
/// `μ(η, θ)` over `t ∈ {0.1, 1, 10}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeElementCheck {
    pub at_zero: f64,
    pub vs_closed_form: f64,
    pub t_spread: f64,
}

pub fn volume_element_suite(d: usize, n_eta: usize, n_theta: usize, seed: u64) -> Result<VolumeElementCheck> {
    let mut rng = substream(seed, 0x4D, d as u64);
    let mut e = vec![0.0; 2 * d];
    let mut out = VolumeElementCheck {
        at_zero: 0.0,
        vs_closed_form: 0.0,
        t_spread: 0.0,
    };
    for _ in 0..n_eta {
        sigma1_product_point(&mut rng, d, &mut e);
        let eta = QuadricPoint::from_z(&e)?;
        out.at_zero = out.at_zero.max((mu_density(&eta, 0.0)?.mu - 1.0).abs());
        for j in 0..n_theta {
            let theta = -0.09 + 0.18 * j as f64 / (n_theta.max(2) - 1) as f64;
            let mus = [0.1, 1.0, 10.0]
                .iter()
                .map(|&t| mu_density_at(&eta, theta, t).map(|s| s.mu))
                .collect::<Result<Vec<_>>>()?;
            let lo = mus.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = mus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out.t_spread = out.t_spread.max(hi - lo);
            out.vs_closed_form = out.vs_closed_form.max((mus[1] - mu_closed_form(d, theta)).abs());
        }
    }
    Ok(out)
}
