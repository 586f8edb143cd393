use std::collections::BTreeMap;

use drci::sensitivity::{BoundResult, BoundStatus, Direction, Estimand, Model};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// The JSON document written by the bound commands. Non-finite numbers are
/// stored as `null` so that the document round-trips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub estimand: Estimand,
    pub model: Model,
    pub estimate: Option<f64>,
    pub direction: Direction,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub active_shift: Option<f64>,
    pub se: Option<f64>,
    pub status: BoundStatus,
    pub n: usize,
    pub n1: usize,
    pub n0: usize,
    pub observed_mean: Option<f64>,
    pub counterfactual_mean: Option<f64>,
    /// Weight per reweighted unit, keyed by 0-based data row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<usize, f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
    pub config: RunConfig,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Report {
    pub fn new(result: &BoundResult, config: &RunConfig, sizes: (usize, usize, usize)) -> Self {
        let s = &config.sensitivity;
        Self {
            estimand: result.estimand,
            model: config.model,
            estimate: finite(result.estimate),
            direction: result.direction,
            gamma: s.gamma,
            delta: s.delta,
            epsilon: s.epsilon.and_then(finite),
            active_shift: result.active_shift,
            se: finite(result.se),
            status: result.status,
            n: sizes.0,
            n1: sizes.1,
            n0: sizes.2,
            observed_mean: finite(result.observed_mean),
            counterfactual_mean: finite(result.counterfactual_mean),
            weights: config.emit_weights.then(|| result.weights.clone()),
            warnings: result.warnings.clone(),
            runtime_ms: None,
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            BoundStatus::Optimal => 0,
            BoundStatus::Infeasible => 2,
        }
    }
}
