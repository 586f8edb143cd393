//! The marginal sensitivity model: each control weight is confined to a box
//! around `1/n0` whose width is set by the odds-ratio bound `Γ`.

use serde::{Deserialize, Serialize};

use super::{weight_lp, BalanceTerms, BoundResult, Direction, SensitivityConfig};
use crate::data::Dataset;
use crate::error::Result;
use crate::lp::solve_lp;

/// Lower edge of the per-unit weight box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalFloor {
    /// `wᵢ ≥ 1/(Γ n0)`, the odds-ratio box.
    #[default]
    Reciprocal,
    /// `wᵢ ≥ 0`: only the upper edge `Γ/n0` is kept.
    Zero,
}

impl MarginalFloor {
    pub fn value(self, gamma: f64, n0: usize) -> f64 {
        match self {
            MarginalFloor::Reciprocal => 1.0 / (gamma * n0 as f64),
            MarginalFloor::Zero => 0.0,
        }
    }
}

/// Closed-form bound: start every weight at the floor, then hand the rest of
/// the mass, up to the cap, to the controls in order of outcome (largest first
/// for the lower bound). Falls back to [`marginal_att_bound_lp`] when the
/// configuration carries covariate-balance terms.
pub fn marginal_att_bound(data: &Dataset, config: &SensitivityConfig) -> Result<BoundResult> {
    config.validate()?;
    if config.uses_balance() {
        return marginal_att_bound_lp(data, config);
    }
    let ys = data.control_outcomes();
    let n0 = ys.len();
    let floor = config.marginal_floor.value(config.gamma, n0);
    let cap = config.gamma / n0 as f64;

    let mut order: Vec<usize> = (0..n0).collect();
    order.sort_by(|&a, &b| match config.direction {
        Direction::Lower => ys[b].total_cmp(&ys[a]),
        Direction::Upper => ys[a].total_cmp(&ys[b]),
    });
    let mut w = vec![floor; n0];
    let mut rest = 1.0 - floor * n0 as f64;
    for i in order {
        if rest <= 0.0 {
            break;
        }
        let add = (cap - floor).min(rest);
        w[i] += add;
        rest -= add;
    }
    Ok(BoundResult::optimal(data, config.direction, &w, None))
}

/// The same bound solved as a linear program, optionally with balance terms.
pub fn marginal_att_bound_lp(data: &Dataset, config: &SensitivityConfig) -> Result<BoundResult> {
    config.validate()?;
    let ys = data.control_outcomes();
    let n0 = ys.len();
    let floor = config.marginal_floor.value(config.gamma, n0);
    let mut lp = weight_lp(&ys, config.direction, floor, config.gamma / n0 as f64);
    if let Some(b) = BalanceTerms::from_config(data, config)? {
        b.apply(&mut lp);
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Ok(BoundResult::infeasible(data, config.direction));
    }
    Ok(BoundResult::optimal(data, config.direction, &sol.x[..n0], None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_arms(&[2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn gamma_one_is_difference_in_means() {
        let r = marginal_att_bound(&toy(), &SensitivityConfig::default()).unwrap();
        assert!((r.estimate - 1.5).abs() < 1e-12);
    }

    #[test]
    fn gamma_two_both_directions() {
        let c = SensitivityConfig::default().with_gamma(2.0);
        let lo = marginal_att_bound(&toy(), &c).unwrap();
        assert!((lo.counterfactual_mean - 1.5).abs() < 1e-12);
        assert!((lo.estimate - 1.0).abs() < 1e-12);
        let w = lo.weight_vec();
        for (a, b) in w.iter().zip([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let up = marginal_att_bound(&toy(), &c.with_direction(Direction::Upper)).unwrap();
        assert!((up.counterfactual_mean - 0.5).abs() < 1e-12);
        assert!((up.estimate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_matches_lp() {
        for floor in [MarginalFloor::Reciprocal, MarginalFloor::Zero] {
            for direction in [Direction::Lower, Direction::Upper] {
                let c = SensitivityConfig::default()
                    .with_gamma(2.7)
                    .with_direction(direction)
                    .with_marginal_floor(floor);
                let d = Dataset::from_arms(&[1.0], &[3.0, -1.0, 0.5, 2.0, 2.0]).unwrap();
                let g = marginal_att_bound(&d, &c).unwrap();
                let l = marginal_att_bound_lp(&d, &c).unwrap();
                assert!((g.estimate - l.estimate).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_floor_is_wider() {
        let c = SensitivityConfig::default().with_gamma(2.0);
        let d = toy();
        let r = marginal_att_bound(&d, &c).unwrap();
        let z = marginal_att_bound(&d, &c.with_marginal_floor(MarginalFloor::Zero)).unwrap();
        assert!(z.estimate <= r.estimate);
    }
}
