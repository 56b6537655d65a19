use serde::{Deserialize, Serialize};

/// Contribution of one named stratum to an [`IntegralEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub id: String,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

/// A Monte Carlo (or deterministic, `std_error = 0`) integral value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub strata: Vec<StratumReport>,
    /// False when a requested tolerance was not reached within the budget.
    pub converged: bool,
}

impl IntegralEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            n_samples: 0,
            strata: Vec::new(),
            converged: true,
        }
    }

    pub fn stratum(&self, id: &str) -> Option<&StratumReport> {
        self.strata.iter().find(|s| s.id == id)
    }

    /// Multiply value and error by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            value: self.value * c,
            std_error: self.std_error * c.abs(),
            n_samples: self.n_samples,
            strata: self
                .strata
                .iter()
                .map(|s| StratumReport {
                    value: s.value * c,
                    std_error: s.std_error * c.abs(),
                    ..s.clone()
                })
                .collect(),
            converged: self.converged,
        }
    }

    /// True when `|self - other| <= k·σ_combined` or within `rel` of `|other|`.
    pub fn agrees_with(&self, other: f64, other_sigma: f64, k: f64, rel: f64) -> bool {
        let diff = (self.value - other).abs();
        let sigma = self.std_error.hypot(other_sigma);
        diff <= k * sigma || diff <= rel * other.abs()
    }
}
