//! `d = 1`: `I'_ν = ∫_{R²} F / (x²y² + ν²Γ²) dx dy` for `F` vanishing near
//! the origin. The quadric `{xy = 0}` minus the origin is four open rays and
//! the leading term is `π ν⁻¹` times a contour integral along them.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::check_sweep;
use crate::error::{Error, Result};
use crate::fields::{ScalarField, WeightField};
use crate::quadrature::{clustered_breaks, integrate_adaptive};

/// Directions of the rays `x > 0`, `y > 0`, `x < 0`, `y < 0`.
pub const RAYS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];

/// `∫_{Σ'} F/(|z|Γ) |dz|`, split by ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourResult {
    pub value: f64,
    pub per_ray: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourRow {
    pub nu: f64,
    pub i_nu: f64,
    /// `π ν⁻¹ · contour`
    pub leading: f64,
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourReport {
    pub contour: ContourResult,
    pub rows: Vec<ContourRow>,
    /// Largest `|remainder|` at most three times the one at the largest `ν`.
    pub bounded: bool,
}

impl ContourReport {
    pub fn max_remainder(&self) -> f64 {
        self.rows.iter().map(|r| r.remainder.abs()).fold(0.0, f64::max)
    }

    pub fn certify(&self) -> Result<()> {
        if self.bounded {
            return Ok(());
        }
        let limit = ratio_limit(&self.rows);
        let worst = self
            .rows
            .iter()
            .find(|r| r.remainder.abs() > limit)
            .expect("unbounded report has an offending row");
        Err(Error::RemainderUnbounded {
            nu: worst.nu,
            ratio: worst.remainder.abs(),
            limit,
        })
    }
}

fn ratio_limit(rows: &[ContourRow]) -> f64 {
    rows.first()
        .map(|r| 3.0 * r.remainder.abs() + 1e-8 * r.i_nu.abs())
        .unwrap_or(0.0)
}

/// Radii `(r_v, r_s)` with `F = 0` off `r_v < |z| < r_s`.
fn radial_window(f: &ScalarField) -> Result<(f64, f64)> {
    let rs = f
        .support_radius
        .ok_or_else(|| Error::NotCompactlySupported(f.name.clone()))?;
    let rv = match f.vanishing_radius {
        Some(r) if r > 0.0 => r,
        _ => return Err(Error::SupportTouchesOrigin(f.name.clone())),
    };
    // The declaration is trusted only if a probe circle inside it sees zeros.
    for i in 0..64 {
        let phi = 2.0 * PI * i as f64 / 64.0;
        for s in [0.25, 0.5, 0.9] {
            let r = s * rv;
            if f.eval(&[r * phi.cos(), r * phi.sin()]) != 0.0 {
                return Err(Error::SupportTouchesOrigin(f.name.clone()));
            }
        }
    }
    Ok((rv, rs))
}

fn check_dims(f: &ScalarField, gamma: &WeightField) -> Result<()> {
    for got in [f.dim, gamma.dim] {
        if got != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got });
        }
    }
    Ok(())
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// The contour integral, each ray by adaptive Gauss–Legendre.
pub fn contour_integral(f: &ScalarField, gamma: &WeightField) -> Result<ContourResult> {
    check_dims(f, gamma)?;
    if f.is_zero_field() {
        return Ok(ContourResult {
            value: 0.0,
            per_ray: [0.0; 4],
        });
    }
    let (rv, rs) = radial_window(f)?;
    let breaks = uniform(rv, rs, 16);
    let mut per_ray = [0.0; 4];
    for (k, e) in RAYS.iter().enumerate() {
        let g = |t: f64| {
            let z = [t * e[0], t * e[1]];
            f.eval(&z) / (t * gamma.eval(&z))
        };
        per_ray[k] = integrate_adaptive(g, &breaks, 1e-13, 1e-300)?.0;
    }
    Ok(ContourResult {
        value: per_ray.iter().sum(),
        per_ray,
    })
}

/// `I'_ν` in polar coordinates; the angular integral is split into quarters
/// centred on the rays, with panels clustered at each ray on the scale
/// `νΓ/r²` of the peak.
fn i_prime(f: &ScalarField, gamma: &WeightField, nu: f64, rv: f64, rs: f64) -> Result<f64> {
    let mut err = None;
    let radial = |r: f64| {
        let r2 = r * r;
        let mut total = 0.0;
        for (k, e) in RAYS.iter().enumerate() {
            let c = k as f64 * FRAC_PI_2;
            let width = nu * gamma.eval(&[r * e[0], r * e[1]]) / r2;
            let breaks = clustered_breaks(c - FRAC_PI_4, c + FRAC_PI_4, c, width / 8.0);
            let g = |phi: f64| {
                let z = [r * phi.cos(), r * phi.sin()];
                let fv = f.eval(&z);
                if fv == 0.0 {
                    return 0.0;
                }
                let xy = z[0] * z[1];
                let gv = nu * gamma.eval(&z);
                r * fv / (xy * xy + gv * gv)
            };
            match integrate_adaptive(g, &breaks, 1e-11, 1e-300) {
                Ok((v, _)) => total += v,
                Err(e) => err = Some(e),
            }
        }
        total
    };
    let (v, _) = integrate_adaptive(radial, &uniform(rv, rs, 24), 1e-10, 1e-300)?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `I'_ν` and its leading term over the sweep, with the remainder test
/// (`χ ≡ 1`).
pub fn d1_contour(f: &ScalarField, gamma: &WeightField, nu_sweep: &[f64]) -> Result<ContourReport> {
    check_sweep(nu_sweep)?;
    let contour = contour_integral(f, gamma)?;
    if f.is_zero_field() {
        let rows = nu_sweep
            .iter()
            .map(|&nu| ContourRow {
                nu,
                i_nu: 0.0,
                leading: 0.0,
                remainder: 0.0,
            })
            .collect();
        return Ok(ContourReport {
            contour,
            rows,
            bounded: true,
        });
    }
    let (rv, rs) = radial_window(f)?;
    let rows: Vec<Result<ContourRow>> = nu_sweep
        .par_iter()
        .map(|&nu| {
            let i_nu = i_prime(f, gamma, nu, rv, rs)?;
            let leading = PI / nu * contour.value;
            Ok(ContourRow {
                nu,
                i_nu,
                leading,
                remainder: i_nu - leading,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let limit = ratio_limit(&rows);
    let bounded = rows.iter().all(|r| r.remainder.abs() <= limit);
    Ok(ContourReport { contour, rows, bounded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::bump_annulus;

    fn sweep() -> Vec<f64> {
        (0..=4).map(|k| 0.1 * 10f64.powf(-(k as f64) / 2.0)).collect()
    }

    #[test]
    fn radial_bump_has_four_equal_rays() {
        let f = bump_annulus(2, 0.5, 2.0).unwrap();
        let g = WeightField::constant(2, 1.0);
        let c = contour_integral(&f, &g).unwrap();
        for v in c.per_ray {
            assert!((v - c.per_ray[0]).abs() < 1e-14 * c.value);
        }
        assert!((c.value - c.per_ray.iter().sum::<f64>()).abs() < 1e-14);
    }

    #[test]
    fn remainder_stays_bounded() {
        let f = bump_annulus(2, 0.5, 2.0).unwrap();
        let g = WeightField::constant(2, 1.0);
        let rep = d1_contour(&f, &g, &sweep()).unwrap();
        assert!(rep.bounded, "{rep:?}");
        rep.certify().unwrap();
        let last = rep.rows.last().unwrap();
        assert!((last.i_nu / last.leading - 1.0).abs() < 1e-2);
    }

    #[test]
    fn full_support_is_rejected() {
        let f = crate::fields::gaussian(2);
        let g = WeightField::constant(2, 1.0);
        assert!(matches!(
            d1_contour(&f, &g, &[0.1]),
            Err(Error::NotCompactlySupported(_))
        ));
        let f = bump_annulus(2, 0.0, 2.0).unwrap();
        assert!(matches!(
            d1_contour(&f, &g, &[0.1]),
            Err(Error::SupportTouchesOrigin(_))
        ));
    }

    #[test]
    fn zero_field() {
        let rep = d1_contour(&ScalarField::zero(2), &WeightField::constant(2, 1.0), &[0.1, 0.01]).unwrap();
        assert!(rep.rows.iter().all(|r| r.i_nu == 0.0 && r.leading == 0.0));
    }
}
