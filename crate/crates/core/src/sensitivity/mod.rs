//! Sensitivity models that bound the average treatment effect on the treated
//! by optimizing over reweightings of the control outcomes.
//!
//! Every model represents the unobserved counterfactual distribution of the
//! treated units as a weighted ECDF of control outcomes. The models differ in
//! which weight vectors they admit:
//!
//! * [`marginal_att_bound`]: the odds-ratio box `1/Γ ≤ n0·wᵢ ≤ Γ`;
//! * [`tv_att_bound`]: a total-variation ball around uniform weights;
//! * [`distributional_att_bound`]: the box `0 ≤ n0·wᵢ ≤ Γ` plus a shifted
//!   Kolmogorov–Smirnov constraint tying the counterfactual to the observed
//!   treated outcomes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distributions::KsMode;
use crate::error::{invalid, Result};
use crate::lp::{LpProblem, Sense};

mod balance;
mod chain;
mod distributional;
mod marginal;
mod se;
mod tv;

pub use balance::{balance_terms, BalanceMode, BalanceTerms};
pub use distributional::{
    distributional_att_bound, distributional_att_bound_with, shift_feasibility, MeanBand,
    ShiftOutcome,
};
pub use marginal::{marginal_att_bound, marginal_att_bound_lp, MarginalFloor};
pub use se::conditional_se;
pub use tv::{tv_att_bound, tv_att_bound_lp};

pub(crate) use distributional::ShiftSolve;

/// Which end of the identified interval to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Lower,
    Upper,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Lower => Direction::Upper,
            Direction::Upper => Direction::Lower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Marginal,
    Distributional,
    Tv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimand {
    #[default]
    Att,
    Atc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundStatus {
    Optimal,
    Infeasible,
}

/// Default shift-grid resolution.
pub const DEFAULT_M: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivityConfig {
    /// Weight-box parameter `Γ ≥ 1`.
    pub gamma: f64,
    /// KS radius `δ ∈ [0, 1]`.
    pub delta: f64,
    /// Mean-difference slack for the DiD, CIC and IV extensions. `None`
    /// leaves the extension constraint out.
    pub epsilon: Option<f64>,
    /// Total-variation radius `Λ ∈ [0, 1]`.
    pub lambda_tv: f64,
    /// Shift-grid resolution: `2m + 1` candidate shifts.
    pub m: usize,
    /// Lagrangian weight on first-moment covariate imbalance.
    pub balance_lambda: f64,
    /// Hard cap on total covariate imbalance (replaces the penalty).
    pub balance_epsilon: Option<f64>,
    pub direction: Direction,
    pub ks_mode: KsMode,
    pub marginal_floor: MarginalFloor,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            delta: 1.0,
            epsilon: None,
            lambda_tv: 0.0,
            m: DEFAULT_M,
            balance_lambda: 0.0,
            balance_epsilon: None,
            direction: Direction::Lower,
            ks_mode: KsMode::Grid,
            marginal_floor: MarginalFloor::Reciprocal,
        }
    }
}

impl SensitivityConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_epsilon(mut self, epsilon: Option<f64>) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_lambda_tv(mut self, lambda_tv: f64) -> Self {
        self.lambda_tv = lambda_tv;
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_ks_mode(mut self, mode: KsMode) -> Self {
        self.ks_mode = mode;
        self
    }

    pub fn with_balance_lambda(mut self, lambda: f64) -> Self {
        self.balance_lambda = lambda;
        self
    }

    pub fn with_balance_epsilon(mut self, epsilon: Option<f64>) -> Self {
        self.balance_epsilon = epsilon;
        self
    }

    pub fn with_marginal_floor(mut self, floor: MarginalFloor) -> Self {
        self.marginal_floor = floor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 1.0) || !self.gamma.is_finite() {
            return Err(invalid(format!("gamma must be a finite value ≥ 1, got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.lambda_tv) {
            return Err(invalid(format!(
                "lambda_tv must lie in [0, 1], got {}",
                self.lambda_tv
            )));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return Err(invalid(format!("epsilon must be ≥ 0, got {e}")));
            }
        }
        if !(self.balance_lambda >= 0.0) || !self.balance_lambda.is_finite() {
            return Err(invalid(format!(
                "balance_lambda must be ≥ 0, got {}",
                self.balance_lambda
            )));
        }
        if let Some(e) = self.balance_epsilon {
            if !(e >= 0.0) {
                return Err(invalid(format!("balance_epsilon must be ≥ 0, got {e}")));
            }
        }
        if self.m == 0 {
            return Err(invalid("m must be positive"));
        }
        Ok(())
    }

    /// Whether covariate-balance terms enter the weight problem.
    pub fn uses_balance(&self) -> bool {
        self.balance_lambda > 0.0 || self.balance_epsilon.is_some()
    }
}

/// A robust bound on the ATT (or ATC) together with the optimizing weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub estimand: Estimand,
    /// The bound. `NaN` when infeasible.
    pub estimate: f64,
    pub direction: Direction,
    /// Optimal weight per reweighted unit, keyed by index into the dataset.
    pub weights: BTreeMap<usize, f64>,
    /// The location shift `c` of the winning KS constraint, if any.
    pub active_shift: Option<f64>,
    /// Fixed-weight conditional standard error (`NaN` when undefined).
    pub se: f64,
    pub status: BoundStatus,
    /// Mean of the observed arm: treated for the ATT, control for the ATC.
    pub observed_mean: f64,
    /// Mean of the reweighted counterfactual distribution.
    pub counterfactual_mean: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BoundResult {
    pub(crate) fn optimal(
        data: &Dataset,
        direction: Direction,
        weights: &[f64],
        active_shift: Option<f64>,
    ) -> Self {
        let controls = data.control_indices();
        let ys = data.control_outcomes();
        let counterfactual_mean: f64 = weights.iter().zip(&ys).map(|(w, y)| w * y).sum();
        let observed_mean = data.treated_mean();
        let se = conditional_se(data, weights).unwrap_or(f64::NAN);
        Self {
            estimand: Estimand::Att,
            estimate: observed_mean - counterfactual_mean,
            direction,
            weights: controls.into_iter().zip(weights.iter().copied()).collect(),
            active_shift,
            se,
            status: BoundStatus::Optimal,
            observed_mean,
            counterfactual_mean,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn infeasible(data: &Dataset, direction: Direction) -> Self {
        Self {
            estimand: Estimand::Att,
            estimate: f64::NAN,
            direction,
            weights: BTreeMap::new(),
            active_shift: None,
            se: f64::NAN,
            status: BoundStatus::Infeasible,
            observed_mean: data.treated_mean(),
            counterfactual_mean: f64::NAN,
            warnings: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == BoundStatus::Optimal
    }

    /// Weights in dataset order of the reweighted units.
    pub fn weight_vec(&self) -> Vec<f64> {
        self.weights.values().copied().collect()
    }
}

/// `max` (lower bound) or `min` (upper bound) of `Σ wᵢYᵢ` over
/// `{Σw = 1, floor ≤ wᵢ ≤ cap}`; variables `0..n0` are the weights.
pub(crate) fn weight_lp(ys: &[f64], direction: Direction, floor: f64, cap: f64) -> LpProblem {
    let sense = match direction {
        Direction::Lower => Sense::Maximize,
        Direction::Upper => Sense::Minimize,
    };
    let mut lp = LpProblem::new(sense, ys.to_vec());
    for i in 0..ys.len() {
        lp.set_bounds(i, floor, cap);
    }
    lp.add_eq(vec![1.0; ys.len()], 1.0);
    lp
}

/// ATT bound under the chosen model.
pub fn att_bound(data: &Dataset, model: Model, config: &SensitivityConfig) -> Result<BoundResult> {
    match model {
        Model::Marginal => marginal_att_bound(data, config),
        Model::Distributional => distributional_att_bound(data, config),
        Model::Tv => tv_att_bound(data, config.lambda_tv, config.direction),
    }
}

/// ATC bound: the ATT bound of the label-swapped data in the opposite
/// direction, negated.
pub fn atc_bound(data: &Dataset, model: Model, config: &SensitivityConfig) -> Result<BoundResult> {
    let swapped = data.swap_treatment();
    let flipped = SensitivityConfig {
        direction: config.direction.flip(),
        ..config.clone()
    };
    let mut r = att_bound(&swapped, model, &flipped)?;
    r.estimand = Estimand::Atc;
    r.direction = config.direction;
    r.estimate = -r.estimate;
    Ok(r)
}
