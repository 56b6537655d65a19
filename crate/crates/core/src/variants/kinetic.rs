//! The four-wave kinetic kernel for `ω_k = |k|²`:
//!
//! ```text
//! K_k = ∫∫∫ F_k(k₁,k₂,k₃) δ(k + k₃ − k₁ − k₂) δ(|k|² + |k₃|² − |k₁|² − |k₂|²) dk₁dk₂dk₃.
//! ```
//!
//! Eliminating `k₃ = k₁ + k₂ − k` and writing `x = k₁ − k`, `y = k₂ − k` turns
//! the frequency argument into `2 x·y`, so
//!
//! ```text
//! K_k = ∫ F̃ δ(2x·y) dx dy = ½ ∫_{Σ*} F̃/|z| dσ,   F̃(x, y) = F_k(k + x, k + y, k + x + y).
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::IntegralEstimate;
use crate::surface::{surface_integral, SurfaceMethod, SurfaceOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticKernel {
    /// `∫_{Σ*} F̃/|z| dσ`, the leading coefficient of the main integral for `F̃`.
    pub measure_integral: IntegralEstimate,
    /// `K_k = ½ measure_integral`, from `δ(2x·y) = ½ δ(x·y)`.
    pub kernel: IntegralEstimate,
}

/// `K_k` by the charts method.
pub fn kinetic_kernel_demo<Fk>(f_k: Fk, k: &[f64], budget: u64, seed: u64) -> Result<KineticKernel>
where
    Fk: Fn(&[f64], &[f64], &[f64]) -> f64 + Sync,
{
    kinetic_kernel_with(f_k, k, SurfaceMethod::Charts, SurfaceOptions::new(budget, seed))
}

/// `K_k` with an explicit surface estimator.
pub fn kinetic_kernel_with<Fk>(f_k: Fk, k: &[f64], method: SurfaceMethod, opts: SurfaceOptions) -> Result<KineticKernel>
where
    Fk: Fn(&[f64], &[f64], &[f64]) -> f64 + Sync,
{
    let d = k.len();
    if d == 0 || d > 16 {
        return Err(Error::Unsupported(format!("kinetic kernel for d = {d}")));
    }
    let g = |z: &[f64]| {
        let (x, y) = z.split_at(d);
        let mut k1 = [0.0; 16];
        let mut k2 = [0.0; 16];
        let mut k3 = [0.0; 16];
        for i in 0..d {
            k1[i] = k[i] + x[i];
            k2[i] = k[i] + y[i];
            k3[i] = k[i] + x[i] + y[i];
        }
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        f_k(&k1[..d], &k2[..d], &k3[..d]) / r
    };
    let est = surface_integral(d, &g, method, opts).map_err(|e| match e {
        Error::NonIntegrableProfile(msg) => Error::DecayInsufficient(msg),
        other => other,
    })?;
    Ok(KineticKernel {
        kernel: est.scaled(0.5),
        measure_integral: est,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sq(v: &[f64]) -> f64 {
        v.iter().map(|a| a * a).sum()
    }

    #[test]
    fn separable_gaussian_at_zero_momentum() {
        let f = |k1: &[f64], k2: &[f64], _: &[f64]| (-sq(k1) - sq(k2)).exp();
        let kk = kinetic_kernel_demo(f, &[0.0, 0.0], 2_000_000, 5).unwrap();
        assert!((kk.measure_integral.value - PI * PI).abs() < 1e-9);
        assert_eq!(kk.kernel.value, 0.5 * kk.measure_integral.value);
    }

    #[test]
    fn zero_and_slow_decay() {
        let z = kinetic_kernel_demo(|_: &[f64], _: &[f64], _: &[f64]| 0.0, &[1.0, 0.0], 100_000, 1).unwrap();
        assert_eq!(z.kernel.value, 0.0);
        let slow = |k1: &[f64], k2: &[f64], _: &[f64]| 1.0 / (1.0 + sq(k1) + sq(k2));
        assert!(matches!(
            kinetic_kernel_demo(slow, &[0.0, 0.0], 100_000, 1),
            Err(Error::DecayInsufficient(_))
        ));
    }
}
