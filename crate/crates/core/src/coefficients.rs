use serde::{Deserialize, Serialize};

/// Centering and scale applied to an estimated-score feature column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub mean: f64,
    pub scale: f64,
}

impl ColumnScaling {
    pub const IDENTITY: ColumnScaling = ColumnScaling {
        mean: 0.0,
        scale: 1.0,
    };

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .map(|v| (v - self.mean) / self.scale)
            .collect()
    }
}

/// Scalings of the two estimated-score columns used by the iterative method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateScaling {
    /// Column `M~ ŷ_a` appended to question rows.
    pub question: ColumnScaling,
    /// Column `M' ŷ_q` appended to answer rows.
    pub answer: ColumnScaling,
}

/// Fitted question and answer coefficients plus fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPair {
    pub beta_q: Vec<f64>,
    pub beta_a: Vec<f64>,
    /// Initial answer coefficients of the iterative method, needed to seed
    /// the first answer estimate at inference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_a0: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default)]
    pub objective_trace: Vec<f64>,
}
