use std::f64::consts::PI;

use quadric_asym::fields::{bump_annulus, gaussian, ScalarField, WeightField};
use quadric_asym::surface::{SurfaceMethod, SurfaceOptions};
use quadric_asym::variants::{d1_contour, kinetic_kernel_with, sphere_surface_integral};

#[test]
fn contour_is_invariant_under_reflections() {
    // F(x, y) and F(y, x), F(−x, y) give the same contour integral and I'_ν.
    let base = bump_annulus(2, 0.5, 2.0).unwrap();
    let skew = |z: &[f64]| 1.0 + 0.5 * z[0] + 0.2 * z[1] * z[1];
    let make = |name: &str, map: fn(&[f64]) -> [f64; 2]| {
        let b = base.clone();
        ScalarField::new(name, 2, b.decay_m, 10.0 * b.bound_k, move |z| {
            let w = map(z);
            b.eval(&w) * skew(&w)
        })
        .with_support(2.0)
        .with_vanishing_radius(0.5)
    };
    let f = make("f", |z| [z[0], z[1]]);
    let swapped = make("swap", |z| [z[1], z[0]]);
    let flipped = make("flip", |z| [-z[0], z[1]]);
    let gamma = WeightField::constant(2, 1.0);
    let sweep = [1e-1, 1e-2];
    let a = d1_contour(&f, &gamma, &sweep).unwrap();
    for g in [&swapped, &flipped] {
        let b = d1_contour(g, &gamma, &sweep).unwrap();
        assert!((a.contour.value - b.contour.value).abs() <= 1e-10 * a.contour.value.abs());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!((ra.i_nu - rb.i_nu).abs() <= 1e-8 * ra.i_nu.abs(), "{ra:?} vs {rb:?}");
        }
    }
    // Per-ray values are permuted, not preserved.
    let s = d1_contour(&swapped, &gamma, &sweep).unwrap();
    assert!((a.contour.per_ray[0] - s.contour.per_ray[1]).abs() <= 1e-10);
}

#[test]
fn kinetic_kernel_methods_agree_off_zero() {
    let f = gaussian(2);
    let fk = |k1: &[f64], k2: &[f64], k3: &[f64]| f.eval(k1) * f.eval(k2) * f.eval(k3);
    let k = [1.0, 0.0];
    let a = kinetic_kernel_with(fk, &k, SurfaceMethod::Charts, SurfaceOptions::new(4_000_000, 1)).unwrap();
    let b = kinetic_kernel_with(fk, &k, SurfaceMethod::ThinSlab, SurfaceOptions::new(8_000_000, 2)).unwrap();
    let (x, y) = (&a.kernel, &b.kernel);
    let tol = (3.0 * x.std_error.hypot(y.std_error)).max(5e-3 * x.value.abs());
    assert!((x.value - y.value).abs() <= tol, "{x:?} vs {y:?}");
    assert!((a.kernel.value - 0.5 * a.measure_integral.value).abs() <= 1e-15 * a.measure_integral.value);
}

#[test]
fn sphere_surface_integral_of_gaussian() {
    // ∫_{|z|=ρ} e^{−|z|²} dσ = |S^{d−1}| ρ^{d−1} e^{−ρ²}
    for (d, area) in [(2usize, 2.0 * PI), (3, 4.0 * PI)] {
        let rho = 1.3f64;
        let v = sphere_surface_integral(d, rho, |z| (-z.iter().map(|a| a * a).sum::<f64>()).exp()).unwrap();
        let want = area * rho.powi(d as i32 - 1) * (-rho * rho).exp();
        assert!((v - want).abs() < 1e-12 * want);
    }
}
