//! Singular integrals concentrated near the quadric `Σ = {x·y = 0} ⊂ R^{2d}`:
//!
//! ```text
//! I_ν = ∫ F(z) / ((x·y)² + (ν Γ(z))²) dz,     z = (x, y) ∈ R^{2d},
//! ```
//!
//! their leading behaviour `π ν⁻¹ ∫_{Σ*} F/(|z| Γ) dσ` as `ν → 0`, and the
//! remainder envelope `χ_d(ν)`.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod estimate;
pub mod fields;
pub mod geometry;
pub mod integrator;
pub mod mc;
pub mod measure;
pub mod quadrature;
pub mod stationary_phase;
pub mod surface;
pub mod variants;

pub use error::{Error, Result};
pub use estimate::{IntegralEstimate, StratumReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/integrator.md")]
    mod integrator {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    mod asymptotics {}
    #[doc = include_str!("../../../book/src/measure.md")]
    mod measure {}
    #[doc = include_str!("../../../book/src/variants.md")]
    mod variants {}
    #[doc = include_str!("../../../book/src/stationary_phase.md")]
    mod stationary_phase {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
