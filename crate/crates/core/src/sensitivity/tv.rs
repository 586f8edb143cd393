//! Total-variation ambiguity: counterfactual distributions on the control
//! atoms within TV distance `Λ` of the uniform weighting.

use super::{BoundResult, Direction};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::lp::solve_lp;

/// Extremal weighted mean over `{w ≥ 0, Σw = 1, ½Σ|wᵢ − 1/n0| ≤ Λ}`.
///
/// Moving mass `Λ` from the least favourable controls onto the most
/// favourable one is optimal, so the bound is computed by that transfer; the
/// linearized program is [`tv_att_bound_lp`].
pub fn tv_att_bound(data: &Dataset, lambda_tv: f64, direction: Direction) -> Result<BoundResult> {
    check_lambda(lambda_tv)?;
    let ys = data.control_outcomes();
    let n0 = ys.len();
    let base = 1.0 / n0 as f64;
    let mut order: Vec<usize> = (0..n0).collect();
    // Most favourable first.
    order.sort_by(|&a, &b| match direction {
        Direction::Lower => ys[b].total_cmp(&ys[a]),
        Direction::Upper => ys[a].total_cmp(&ys[b]),
    });
    let mut w = vec![base; n0];
    let movable = lambda_tv.min(1.0 - base);
    let mut taken = 0.0;
    for &i in order.iter().rev().take(n0 - 1) {
        if taken >= movable {
            break;
        }
        let t = (movable - taken).min(base);
        w[i] -= t;
        taken += t;
    }
    w[order[0]] += taken;
    Ok(BoundResult::optimal(data, direction, &w, None))
}

/// [`tv_att_bound`] solved as a linear program with `tᵢ ≥ |wᵢ − 1/n0|`.
pub fn tv_att_bound_lp(data: &Dataset, lambda_tv: f64, direction: Direction) -> Result<BoundResult> {
    check_lambda(lambda_tv)?;
    let ys = data.control_outcomes();
    let n0 = ys.len();
    let base = 1.0 / n0 as f64;
    let mut lp = super::weight_lp(&ys, direction, 0.0, 1.0);
    let t: Vec<usize> = (0..n0)
        .map(|_| lp.add_variable(0.0, 0.0, f64::INFINITY))
        .collect();
    let width = lp.num_vars();
    let mut budget = vec![0.0; width];
    for i in 0..n0 {
        let mut up = vec![0.0; width];
        up[i] = 1.0;
        up[t[i]] = -1.0;
        lp.add_le(up, base);
        let mut down = vec![0.0; width];
        down[i] = -1.0;
        down[t[i]] = -1.0;
        lp.add_le(down, -base);
        budget[t[i]] = 1.0;
    }
    lp.add_le(budget, 2.0 * lambda_tv);
    let sol = solve_lp(&lp)?;
    debug_assert!(sol.is_optimal());
    Ok(BoundResult::optimal(data, direction, &sol.x[..n0], None))
}

fn check_lambda(lambda_tv: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda_tv) {
        return Err(invalid(format!("lambda_tv must lie in [0, 1], got {lambda_tv}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_arms(&[2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn zero_radius_is_difference_in_means() {
        let r = tv_att_bound(&toy(), 0.0, Direction::Lower).unwrap();
        assert!((r.estimate - 1.5).abs() < 1e-12);
    }

    #[test]
    fn full_radius_hits_extreme_control() {
        let r = tv_att_bound(&toy(), 1.0, Direction::Lower).unwrap();
        assert!((r.counterfactual_mean - 2.0).abs() < 1e-12);
        let r = tv_att_bound(&toy(), 1.0, Direction::Upper).unwrap();
        assert!(r.counterfactual_mean.abs() < 1e-12);
    }

    #[test]
    fn third_of_mass_moves_to_top() {
        let r = tv_att_bound(&toy(), 1.0 / 3.0, Direction::Lower).unwrap();
        // w = (0, 1/3, 2/3)
        assert!((r.counterfactual_mean - 5.0 / 3.0).abs() < 1e-12);
        assert!((r.estimate - (2.5 - 5.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn transfer_matches_lp() {
        let d = Dataset::from_arms(&[1.0, 4.0], &[3.0, -1.0, 0.5, 2.0, 2.0, 7.0]).unwrap();
        for lambda in [0.0, 0.05, 0.2, 0.5, 0.9, 1.0] {
            for dir in [Direction::Lower, Direction::Upper] {
                let a = tv_att_bound(&d, lambda, dir).unwrap();
                let b = tv_att_bound_lp(&d, lambda, dir).unwrap();
                assert!((a.estimate - b.estimate).abs() < 1e-9, "{lambda} {dir:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(tv_att_bound(&toy(), 1.5, Direction::Lower).is_err());
    }
}
