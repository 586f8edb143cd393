//! First-moment covariate balance between the treated arm and the reweighted
//! controls, `Σⱼ |X̄ⱼ(treated) − Σᵢ wᵢ Xᵢⱼ|`, either penalized in the objective
//! or capped.

use serde::{Deserialize, Serialize};

use super::SensitivityConfig;
use crate::data::{mean, Dataset};
use crate::error::{invalid, Result};
use crate::lp::{LpProblem, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMode {
    /// Adds `λ Σⱼ sⱼ` to the objective, against the optimization direction.
    Penalty(f64),
    /// Requires `Σⱼ sⱼ ≤ ε`.
    Hard(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceTerms {
    pub mode: BalanceMode,
    /// Treated covariate means, one per covariate.
    pub targets: Vec<f64>,
    /// `columns[j][i]`: covariate `j` of the `i`-th control unit.
    pub columns: Vec<Vec<f64>>,
}

/// Penalized balance terms with weight `lambda`.
pub fn balance_terms(data: &Dataset, lambda: f64) -> Result<BalanceTerms> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("balance penalty must be ≥ 0, got {lambda}")));
    }
    BalanceTerms::build(data, BalanceMode::Penalty(lambda))
}

impl BalanceTerms {
    /// Balance terms in the capped form `Σⱼ sⱼ ≤ epsilon`.
    pub fn hard(data: &Dataset, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(invalid(format!("balance cap must be ≥ 0, got {epsilon}")));
        }
        Self::build(data, BalanceMode::Hard(epsilon))
    }

    /// The terms requested by `config`, if any. A cap takes precedence over a
    /// penalty.
    pub fn from_config(data: &Dataset, config: &SensitivityConfig) -> Result<Option<Self>> {
        if let Some(eps) = config.balance_epsilon {
            Self::hard(data, eps).map(Some)
        } else if config.balance_lambda > 0.0 {
            balance_terms(data, config.balance_lambda).map(Some)
        } else {
            Ok(None)
        }
    }

    fn build(data: &Dataset, mode: BalanceMode) -> Result<Self> {
        let dim = data.dim();
        if dim == 0 {
            return Err(invalid("covariate balance needs at least one covariate"));
        }
        let units = data.units();
        let targets = (0..dim)
            .map(|j| {
                let xs: Vec<f64> = units
                    .iter()
                    .filter(|u| u.treated)
                    .map(|u| u.covariates[j])
                    .collect();
                mean(&xs)
            })
            .collect();
        let columns = (0..dim)
            .map(|j| {
                units
                    .iter()
                    .filter(|u| !u.treated)
                    .map(|u| u.covariates[j])
                    .collect()
            })
            .collect();
        Ok(Self {
            mode,
            targets,
            columns,
        })
    }

    pub fn dim(&self) -> usize {
        self.targets.len()
    }

    /// Adds one variable `sⱼ ≥ |target_j − Σ wᵢXᵢⱼ|` per covariate. The first
    /// `n0` variables of `lp` must be the control weights.
    pub fn apply(&self, lp: &mut LpProblem) {
        let cost = match (self.mode, lp.sense) {
            (BalanceMode::Penalty(l), Sense::Minimize) => l,
            (BalanceMode::Penalty(l), Sense::Maximize) => -l,
            (BalanceMode::Hard(_), _) => 0.0,
        };
        let n0 = self.columns[0].len();
        let slacks: Vec<usize> = (0..self.dim())
            .map(|_| lp.add_variable(cost, 0.0, f64::INFINITY))
            .collect();
        let width = lp.num_vars();
        for (j, &s) in slacks.iter().enumerate() {
            // target − Σ wX ≤ s  and  Σ wX − target ≤ s
            let mut up = vec![0.0; width];
            let mut down = vec![0.0; width];
            up[..n0].copy_from_slice(&self.columns[j]);
            for i in 0..n0 {
                down[i] = -self.columns[j][i];
            }
            up[s] = -1.0;
            down[s] = -1.0;
            lp.add_le(up, self.targets[j]);
            lp.add_le(down, -self.targets[j]);
        }
        if let BalanceMode::Hard(eps) = self.mode {
            let mut row = vec![0.0; width];
            for &s in &slacks {
                row[s] = 1.0;
            }
            lp.add_le(row, eps);
        }
    }

    /// `Σⱼ |target_j − Σ wᵢXᵢⱼ|` for control weights `w`.
    pub fn imbalance(&self, w: &[f64]) -> f64 {
        self.targets
            .iter()
            .zip(&self.columns)
            .map(|(t, col)| (t - col.iter().zip(w).map(|(x, w)| x * w).sum::<f64>()).abs())
            .sum()
    }

    /// Objective contribution of `w` in penalty mode, zero otherwise.
    pub fn penalty(&self, w: &[f64]) -> f64 {
        match self.mode {
            BalanceMode::Penalty(l) => l * self.imbalance(w),
            BalanceMode::Hard(_) => 0.0,
        }
    }
}
