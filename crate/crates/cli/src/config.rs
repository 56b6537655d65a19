use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use quadric_asym::fields::{catalog_lookup, CatalogField, ScalarField, WeightField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config key `{key}`: {reason}")]
    ConfigInvalid { key: String, reason: String },
    #[error("{0}")]
    Library(#[from] quadric_asym::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("non-finite value in column `{0}`")]
    NonFinite(String),
}

pub fn invalid(key: &str, reason: impl Into<String>) -> CliError {
    CliError::ConfigInvalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyAsymptotic,
    SurfaceIntegral,
    GeometryCheck,
    MeasureCheck,
    Variants,
    StationaryPhase,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::VerifyAsymptotic,
        Command::SurfaceIntegral,
        Command::GeometryCheck,
        Command::MeasureCheck,
        Command::Variants,
        Command::StationaryPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyAsymptotic => "verify-asymptotic",
            Command::SurfaceIntegral => "surface-integral",
            Command::GeometryCheck => "geometry-check",
            Command::MeasureCheck => "measure-check",
            Command::Variants => "variants",
            Command::StationaryPhase => "stationary-phase",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid("command", format!("unknown command `{s}`")))
    }
}

/// A catalog name with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl FieldSpec {
    fn named(name: &str) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn scalar(&self, key: &str, dim: usize) -> Result<ScalarField, CliError> {
        match catalog_lookup(&self.name, &self.params, dim).map_err(|e| invalid(key, e.to_string()))? {
            CatalogField::Scalar(f) => Ok(f),
            CatalogField::Weight(_) => Err(invalid(key, format!("`{}` is a weight, not an integrand", self.name))),
        }
    }

    pub fn weight(&self, key: &str, dim: usize) -> Result<WeightField, CliError> {
        match catalog_lookup(&self.name, &self.params, dim).map_err(|e| invalid(key, e.to_string()))? {
            CatalogField::Weight(w) => Ok(w),
            CatalogField::Scalar(_) => Err(invalid(key, format!("`{}` is an integrand, not a weight", self.name))),
        }
    }
}

fn default_f() -> FieldSpec {
    FieldSpec::named("gaussian")
}

fn default_gamma() -> FieldSpec {
    FieldSpec::named("const")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    /// Evaluations per surface estimator.
    #[serde(default = "SurfaceSection::default_budget")]
    pub budget: u64,
}

impl SurfaceSection {
    fn default_budget() -> u64 {
        20_000_000
    }
}

impl Default for SurfaceSection {
    fn default() -> Self {
        Self {
            budget: Self::default_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    /// Norm exponent `m` of `|f|_m`; defaults to `2d − 1`.
    pub m: Option<f64>,
    /// Compactly supported test function for the weak-limit check.
    #[serde(default = "MeasureSection::default_weak_f")]
    pub weak_f: FieldSpec,
}

impl MeasureSection {
    fn default_weak_f() -> FieldSpec {
        FieldSpec {
            name: "bump_annulus".into(),
            params: BTreeMap::from([("r1".into(), 0.5), ("r2".into(), 2.0)]),
        }
    }
}

impl Default for MeasureSection {
    fn default() -> Self {
        Self {
            m: None,
            weak_f: Self::default_weak_f(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Contour,
    Linear,
    Sphere,
    Kinetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantsSection {
    #[serde(default = "VariantsSection::default_kind")]
    pub kind: VariantKind,
    /// `|k|` for the sphere quadric.
    #[serde(default = "VariantsSection::default_k_mod")]
    pub k_mod: f64,
    /// External momentum for the kinetic kernel; zero when empty.
    #[serde(default)]
    pub k: Vec<f64>,
}

impl VariantsSection {
    fn default_kind() -> VariantKind {
        VariantKind::Sphere
    }

    fn default_k_mod() -> f64 {
        2.0
    }
}

impl Default for VariantsSection {
    fn default() -> Self {
        Self {
            kind: Self::default_kind(),
            k_mod: Self::default_k_mod(),
            k: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryPhaseSection {
    #[serde(default = "StationaryPhaseSection::default_n")]
    pub n: usize,
    #[serde(default = "StationaryPhaseSection::default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Critical value shift `c` in `g = |x|²/2 + c` for the resolvent check.
    #[serde(default = "StationaryPhaseSection::default_shift")]
    pub shift: f64,
}

impl StationaryPhaseSection {
    fn default_n() -> usize {
        1
    }

    fn default_lambdas() -> Vec<f64> {
        vec![20.0, 40.0, 80.0, 160.0]
    }

    fn default_shift() -> f64 {
        -0.1
    }
}

impl Default for StationaryPhaseSection {
    fn default() -> Self {
        Self {
            n: Self::default_n(),
            lambdas: Self::default_lambdas(),
            shift: Self::default_shift(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "RunConfig::default_d")]
    pub d: usize,
    #[serde(default = "default_f")]
    pub f: FieldSpec,
    #[serde(default = "default_gamma")]
    pub gamma: FieldSpec,
    /// Strictly decreasing values in `(0, 1]`.
    pub nu_sweep: Vec<f64>,
    #[serde(default = "RunConfig::default_budget")]
    pub budget: u64,
    #[serde(default = "RunConfig::default_seed")]
    pub seed: u64,
    #[serde(default = "RunConfig::default_theta0")]
    pub theta0: f64,
    #[serde(default = "RunConfig::default_output_dir")]
    pub output_dir: PathBuf,
    /// Write the two-column plot file.
    #[serde(default = "RunConfig::default_plot")]
    pub plot: bool,
    #[serde(default)]
    pub surface: SurfaceSection,
    #[serde(default)]
    pub measure: MeasureSection,
    #[serde(default)]
    pub variants: VariantsSection,
    #[serde(default)]
    pub stationary_phase: StationaryPhaseSection,
}

impl RunConfig {
    fn default_d() -> usize {
        2
    }
    fn default_budget() -> u64 {
        2_000_000
    }
    fn default_seed() -> u64 {
        1
    }
    fn default_theta0() -> f64 {
        0.1
    }
    fn default_output_dir() -> PathBuf {
        PathBuf::from("out")
    }
    fn default_plot() -> bool {
        true
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // Serde names unknown or missing keys in backticks.
            let key = msg
                .split('`')
                .nth(1)
                .filter(|k| !k.contains(' '))
                .unwrap_or("<document>")
                .to_string();
            invalid(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Range checks and catalog resolution.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.nu_sweep.is_empty() {
            return Err(invalid("nu_sweep", "must not be empty"));
        }
        for &nu in &self.nu_sweep {
            if !(nu > 0.0 && nu <= 1.0) {
                return Err(invalid("nu_sweep", format!("{nu} is outside (0, 1]")));
            }
        }
        if self.nu_sweep.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("nu_sweep", "must be strictly decreasing"));
        }
        if !(1..=16).contains(&self.d) {
            return Err(invalid("d", format!("{} is outside 1..=16", self.d)));
        }
        if self.budget == 0 {
            return Err(invalid("budget", "must be positive"));
        }
        if !(self.theta0 > 0.0 && self.theta0 < 1.0) {
            return Err(invalid("theta0", format!("{} is outside (0, 1)", self.theta0)));
        }
        let dim = self.field_dim();
        self.f.scalar("f", dim)?;
        self.gamma.weight("gamma", dim)?;
        if self.command == Command::MeasureCheck {
            self.measure.weak_f.scalar("measure.weak_f", 2 * self.d)?;
        }
        if self.command == Command::Variants {
            let v = &self.variants;
            if !(v.k_mod > 0.0 && v.k_mod.is_finite()) {
                return Err(invalid("variants.k_mod", "must be positive"));
            }
            if !v.k.is_empty() && v.k.len() != self.d {
                return Err(invalid("variants.k", format!("needs {} components", self.d)));
            }
        }
        if self.command == Command::StationaryPhase {
            let sp = &self.stationary_phase;
            if !(1..=3).contains(&sp.n) {
                return Err(invalid("stationary_phase.n", "must be 1, 2 or 3"));
            }
            if sp.lambdas.len() < 2 || sp.lambdas.iter().any(|&l| l.is_nan() || l < 1.0) {
                return Err(invalid("stationary_phase.lambdas", "need at least two values >= 1"));
            }
        }
        Ok(())
    }

    /// Number of coordinates the catalog fields take.
    pub fn field_dim(&self) -> usize {
        match (self.command, self.variants.kind) {
            (Command::Variants, VariantKind::Sphere | VariantKind::Kinetic) => self.d,
            (Command::Variants, VariantKind::Contour) => 2,
            _ => 2 * self.d,
        }
    }
}
