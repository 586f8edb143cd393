//! The distributional sensitivity model.
//!
//! Besides the box `0 ≤ wᵢ ≤ Γ/n0`, the reweighted control CDF must stay
//! within KS distance `δ` of the treated CDF after some location shift `c`.
//! The shift is chosen from a finite grid, so the problem splits into one
//! convex subproblem per shift and the bound is the best of them.
//!
//! Evaluated at a point `y`, the reweighted control CDF is the prefix sum of
//! the weights on controls with outcome `≤ y`. Each KS row is therefore a
//! bound on one prefix sum and, without covariate-balance terms, every
//! subproblem is solved exactly by the sweep in `chain`. Balance terms couple
//! arbitrary units, and those subproblems go to the simplex solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{solve_chain, solve_chain_tol, ChainExtremes, ControlArm, PrefixBounds};
use super::{weight_lp, BalanceTerms, BoundResult, Direction, SensitivityConfig};
use crate::data::Dataset;
use crate::distributions::{shift_grid, shift_key_less, KsMode, ShiftGrid, WeightedEcdf};
use crate::error::{invalid, Result};
use crate::lp::{solve_lp, LpProblem, FEASIBILITY_TOL};

const OBJECTIVE_TIE: f64 = 1e-12;
const ROUNDING_TOL: f64 = 64.0 * f64::EPSILON;

/// A band `|μ(w) − target| ≤ epsilon` on the counterfactual mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanBand {
    pub target: f64,
    pub epsilon: f64,
}

impl MeanBand {
    pub fn new(target: f64, epsilon: f64) -> Result<Self> {
        if !target.is_finite() {
            return Err(invalid("mean band target must be finite"));
        }
        if !(epsilon >= 0.0) {
            return Err(invalid(format!("mean band width must be ≥ 0, got {epsilon}")));
        }
        Ok(Self { target, epsilon })
    }

    pub fn lower(&self) -> f64 {
        self.target - self.epsilon
    }

    pub fn upper(&self) -> f64 {
        self.target + self.epsilon
    }
}

/// Diagnostics for one candidate shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftOutcome {
    pub shift: f64,
    /// Smallest KS radius for which some weight vector in the box fits this
    /// shift.
    pub min_ks: f64,
    /// Whether the configured `δ` is feasible for this shift.
    pub feasible: bool,
    /// The extremal counterfactual mean in the configured direction.
    pub counterfactual_mean: Option<f64>,
}

/// Compresses the KS rows of shift `j` into bounds on the prefix sums.
pub(crate) fn shift_constraints(
    arm: &ControlArm,
    treated: &WeightedEcdf,
    grid: &ShiftGrid,
    j: usize,
    delta: f64,
    mode: KsMode,
) -> PrefixBounds {
    let mut b = PrefixBounds::unconstrained(arm.groups());
    let mut row = |y: f64, level: f64| {
        b.restrict(arm.prefix_len(y), level - delta, level + delta);
    };
    if mode == KsMode::Grid && !grid.is_degenerate() {
        for k in 0..grid.lattice_len() {
            row(grid.eval_point(k), treated.cdf(grid.shifted_eval_point(j, k)));
        }
    } else {
        let c = grid.shifts[j];
        for &v in &arm.group_values {
            row(v, treated.cdf(v + c));
        }
        for &a in treated.atoms() {
            row(a - c, treated.cdf(a));
        }
    }
    b
}

/// Per-shift subproblems over one control arm and one treated reference.
#[derive(Debug, Clone)]
pub(crate) struct ShiftSolve {
    pub arm: ControlArm,
    pub treated: WeightedEcdf,
    pub grid: ShiftGrid,
    pub mode: KsMode,
    pub cap: f64,
}

impl ShiftSolve {
    pub fn new(
        controls: Vec<f64>,
        treated: &[f64],
        grid: ShiftGrid,
        mode: KsMode,
        gamma: f64,
    ) -> Result<Self> {
        let cap = gamma / controls.len() as f64;
        Ok(Self {
            arm: ControlArm::new(controls),
            treated: WeightedEcdf::uniform(treated)?,
            grid,
            mode,
            cap,
        })
    }

    pub fn shifts(&self) -> &[f64] {
        &self.grid.shifts
    }

    pub fn bounds(&self, j: usize, delta: f64) -> PrefixBounds {
        shift_constraints(&self.arm, &self.treated, &self.grid, j, delta, self.mode)
    }

    pub fn extremes(&self, j: usize, delta: f64) -> Option<ChainExtremes> {
        solve_chain(&self.arm, &self.bounds(j, delta), 0.0, self.cap)
    }

    /// Smallest feasible KS radius for shift `j`, by bisection on a
    /// feasibility test whose tolerance only absorbs rounding.
    pub fn min_ks(&self, j: usize) -> f64 {
        let fits = |delta: f64| {
            solve_chain_tol(&self.arm, &self.bounds(j, delta), 0.0, self.cap, ROUNDING_TOL).is_some()
        };
        if fits(0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0 + 1e-12);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// The counterfactual mean interval of shift `j`, intersected with `band`.
    pub fn mean_interval(&self, j: usize, delta: f64, band: Option<MeanBand>) -> Option<(f64, f64, ChainExtremes)> {
        let e = self.extremes(j, delta)?;
        let (mut lo, mut hi) = (e.mean_min, e.mean_max);
        if let Some(b) = band {
            lo = lo.max(b.lower());
            hi = hi.min(b.upper());
            if lo > hi + FEASIBILITY_TOL {
                return None;
            }
            if lo > hi {
                let mid = 0.5 * (lo + hi);
                lo = mid;
                hi = mid;
            }
        }
        Some((lo, hi, e))
    }
}

/// One feasible shift's optimum: comparison key (larger is better), weights.
struct Candidate {
    key: f64,
    shift: f64,
    weights: Vec<f64>,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    if (a.key - b.key).abs() > OBJECTIVE_TIE {
        a.key > b.key
    } else {
        shift_key_less(a.shift, b.shift)
    }
}

/// Distributional-model bound on the ATT.
pub fn distributional_att_bound(data: &Dataset, config: &SensitivityConfig) -> Result<BoundResult> {
    distributional_att_bound_with(data, config, None)
}

/// Distributional-model bound with an optional band on the counterfactual
/// mean, the building block of the difference-in-differences and
/// changes-in-changes variants.
pub fn distributional_att_bound_with(
    data: &Dataset,
    config: &SensitivityConfig,
    band: Option<MeanBand>,
) -> Result<BoundResult> {
    config.validate()?;
    let solver = build_solver(data, config)?;
    let balance = BalanceTerms::from_config(data, config)?;
    let direction = config.direction;

    let candidates: Vec<Option<Candidate>> = match &balance {
        None => (0..solver.shifts().len())
            .map(|j| chain_candidate(&solver, j, config.delta, direction, band))
            .collect(),
        Some(b) => (0..solver.shifts().len())
            .into_par_iter()
            .map(|j| lp_candidate(&solver, j, config.delta, direction, band, b))
            .collect::<Result<_>>()?,
    };
    let best = candidates
        .into_iter()
        .flatten()
        .reduce(|a, b| if better(&b, &a) { b } else { a });
    Ok(match best {
        Some(c) => BoundResult::optimal(data, direction, &c.weights, Some(c.shift)),
        None => BoundResult::infeasible(data, direction),
    })
}

fn build_solver(data: &Dataset, config: &SensitivityConfig) -> Result<ShiftSolve> {
    let grid = shift_grid(&data.all_outcomes(), config.m)?;
    ShiftSolve::new(
        data.control_outcomes(),
        &data.treated_outcomes(),
        grid,
        config.ks_mode,
        config.gamma,
    )
}

fn chain_candidate(
    solver: &ShiftSolve,
    j: usize,
    delta: f64,
    direction: Direction,
    band: Option<MeanBand>,
) -> Option<Candidate> {
    let (lo, hi, e) = solver.mean_interval(j, delta, band)?;
    let (key, weights) = match (direction, band) {
        (Direction::Lower, None) => (e.mean_max, e.w_max),
        (Direction::Upper, None) => (-e.mean_min, e.w_min),
        (Direction::Lower, Some(_)) => (hi, e.weights_with_mean(hi)),
        (Direction::Upper, Some(_)) => (-lo, e.weights_with_mean(lo)),
    };
    Some(Candidate {
        key,
        shift: solver.shifts()[j],
        weights,
    })
}

fn lp_candidate(
    solver: &ShiftSolve,
    j: usize,
    delta: f64,
    direction: Direction,
    band: Option<MeanBand>,
    balance: &BalanceTerms,
) -> Result<Option<Candidate>> {
    let bounds = solver.bounds(j, delta);
    if solve_chain(&solver.arm, &bounds, 0.0, solver.cap).is_none() {
        return Ok(None);
    }
    let ys = &solver.arm.values;
    let n0 = ys.len();
    let mut lp = weight_lp(ys, direction, 0.0, solver.cap);
    add_prefix_rows(&mut lp, &solver.arm, &bounds);
    if let Some(b) = band {
        let mut row = ys.clone();
        lp.add_le(row.clone(), b.upper());
        row.iter_mut().for_each(|v| *v = -*v);
        lp.add_le(row, -b.lower());
    }
    balance.apply(&mut lp);
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Ok(None);
    }
    let key = match direction {
        Direction::Lower => sol.objective_value,
        Direction::Upper => -sol.objective_value,
    };
    Ok(Some(Candidate {
        key,
        shift: solver.shifts()[j],
        weights: sol.x[..n0].to_vec(),
    }))
}

fn add_prefix_rows(lp: &mut LpProblem, arm: &ControlArm, bounds: &PrefixBounds) {
    for r in 1..arm.groups() {
        let (lo, hi) = (bounds.lower[r], bounds.upper[r]);
        if lo <= 0.0 && hi >= 1.0 {
            continue;
        }
        let row = arm.prefix_row(r);
        if hi < 1.0 {
            lp.add_le(row.clone(), hi);
        }
        if lo > 0.0 {
            lp.add_ge(row, lo);
        }
    }
}

/// Per-shift feasibility diagnostics at the configured `δ` and `Γ`, ignoring
/// balance terms.
pub fn shift_feasibility(data: &Dataset, config: &SensitivityConfig) -> Result<Vec<ShiftOutcome>> {
    config.validate()?;
    let solver = build_solver(data, config)?;
    Ok((0..solver.shifts().len())
        .map(|j| {
            let e = solver.extremes(j, config.delta);
            ShiftOutcome {
                shift: solver.shifts()[j],
                min_ks: solver.min_ks(j),
                feasible: e.is_some(),
                counterfactual_mean: e.map(|e| match config.direction {
                    Direction::Lower => e.mean_max,
                    Direction::Upper => e.mean_min,
                }),
            }
        })
        .collect())
}
