//! Relatives of the main integral: the planar case `d = 1`, the divisor
//! linear in `ω`, the sphere quadric of three-wave systems, and the kinetic
//! kernel of four-wave systems written as an integral over `Σ*`.

mod contour;
mod kinetic;
mod linear;
mod sphere;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use contour::{d1_contour, ContourReport, ContourResult, ContourRow, RAYS};
pub use kinetic::{kinetic_kernel_demo, kinetic_kernel_with, KineticKernel};
pub use linear::{linear_divisor, LinearOptions, LinearReport, LinearRow};
pub use sphere::{sphere_quadric, sphere_surface_integral, SphereOptions, SphereReport};

/// A complex integral with independent standard errors on each part.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub re: f64,
    pub re_se: f64,
    pub im: f64,
    pub im_se: f64,
}

impl ComplexEstimate {
    pub fn new(re: f64, re_se: f64, im: f64, im_se: f64) -> Self {
        Self { re, re_se, im, im_se }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_finite(&self) -> bool {
        [self.re, self.re_se, self.im, self.im_se].iter().all(|v| v.is_finite())
    }

    /// Each part within `max(k·σ, rel·|other|)` of `other`'s, with σ the
    /// combined error of that part.
    pub fn agrees_with(&self, other: &ComplexEstimate, k: f64, rel: f64) -> bool {
        let scale = other.value().norm();
        let part = |a: f64, sa: f64, b: f64, sb: f64| (a - b).abs() <= (k * sa.hypot(sb)).max(rel * scale);
        part(self.re, self.re_se, other.re, other.re_se) && part(self.im, self.im_se, other.im, other.im_se)
    }
}
