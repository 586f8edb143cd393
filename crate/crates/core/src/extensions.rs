//! Panel and instrumental-variable variants of the distributional model.
//!
//! Difference-in-differences and changes-in-changes relax their identifying
//! assumption to "the counterfactual mean lies within `ε` of what the
//! assumption predicts", which is a band on `Σ wᵢYᵢ` added to every shift
//! subproblem. The instrumental-variable variant couples two reweightings per
//! encouragement level through the same kind of mean band.

use serde::{Deserialize, Serialize};

use crate::data::{mean, Dataset};
use crate::distributions::{cic_target_cdf, shift_grid, shift_key_less, WeightedEcdf};
use crate::error::{invalid, Error, Result};
use crate::lp::FEASIBILITY_TOL;
use crate::sensitivity::{
    distributional_att_bound_with, BoundResult, Direction, MeanBand, SensitivityConfig, ShiftSolve,
};

/// Shift-grid resolution suggested for the instrumental-variable model, whose
/// cost grows with the square of the grid size.
pub const DEFAULT_M_IV: usize = 20;

/// The three means behind the parallel-trends prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DidTargets {
    /// Baseline mean of the treated.
    pub mu_b1: f64,
    /// Endline mean of the controls.
    pub mu_00: f64,
    /// Baseline mean of the controls.
    pub mu_b0: f64,
}

impl DidTargets {
    pub fn from_data(data: &Dataset) -> Result<Self> {
        Ok(Self {
            mu_b1: mean(&data.baselines(true)?),
            mu_00: data.control_mean(),
            mu_b0: mean(&data.baselines(false)?),
        })
    }

    /// Predicted untreated endline mean of the treated.
    pub fn target_mean(&self) -> f64 {
        self.mu_b1 + self.mu_00 - self.mu_b0
    }
}

/// The distributional bound with `|Σ wᵢYᵢ − (μ_b1 + μ_00 − μ_b0)| ≤ ε`.
/// With `config.epsilon = None` no band is added.
pub fn did_att_bound(data: &Dataset, config: &SensitivityConfig) -> Result<BoundResult> {
    let target = DidTargets::from_data(data)?.target_mean();
    banded(data, config, target)
}

/// Mean of the changes-in-changes counterfactual `F_b1(F_b0⁻¹(F_00(y)))`.
pub fn cic_target_mean(data: &Dataset) -> Result<f64> {
    let f_b1 = WeightedEcdf::uniform(&data.baselines(true)?)?;
    let f_b0 = WeightedEcdf::uniform(&data.baselines(false)?)?;
    let f_00 = data.arm_ecdf(false);
    Ok(cic_target_cdf(&f_b1, &f_b0, &f_00).mean())
}

/// The distributional bound with the counterfactual mean held within `ε` of
/// the changes-in-changes prediction.
pub fn cic_att_bound(data: &Dataset, config: &SensitivityConfig) -> Result<BoundResult> {
    let target = cic_target_mean(data)?;
    banded(data, config, target)
}

fn banded(data: &Dataset, config: &SensitivityConfig, target: f64) -> Result<BoundResult> {
    let band = config
        .epsilon
        .map(|eps| MeanBand::new(target, eps))
        .transpose()?;
    distributional_att_bound_with(data, config, band)
}

/// Outcomes split by treatment and encouragement.
#[derive(Debug, Clone, PartialEq)]
pub struct IvStrata {
    /// `outcomes[t][z]`.
    pub outcomes: [[Vec<f64>; 2]; 2],
    /// `indices[t][z]`: positions in the dataset.
    pub indices: [[Vec<usize>; 2]; 2],
}

impl IvStrata {
    pub fn from_data(data: &Dataset) -> Result<Self> {
        let mut outcomes: [[Vec<f64>; 2]; 2] = Default::default();
        let mut indices: [[Vec<usize>; 2]; 2] = Default::default();
        for (i, u) in data.units().iter().enumerate() {
            let z = u.instrument.ok_or(Error::MissingField("instrument"))?;
            outcomes[u.treated as usize][z as usize].push(u.y);
            indices[u.treated as usize][z as usize].push(i);
        }
        for t in 0..2 {
            for z in 0..2 {
                if outcomes[t][z].is_empty() {
                    return Err(Error::EmptyStratum {
                        treated: t as u8,
                        instrument: z as u8,
                    });
                }
            }
        }
        Ok(Self { outcomes, indices })
    }

    pub fn count(&self, t: usize, z: usize) -> usize {
        self.outcomes[t][z].len()
    }

    pub fn n(&self) -> usize {
        (0..2).flat_map(|t| (0..2).map(move |z| (t, z))).map(|(t, z)| self.count(t, z)).sum()
    }

    /// `p_tz = n_tz / n`.
    pub fn proportion(&self, t: usize, z: usize) -> f64 {
        self.count(t, z) as f64 / self.n() as f64
    }
}

/// Optimum of one encouragement level.
struct IvSide {
    mean: f64,
    weights: Vec<f64>,
}

/// ATT bound under the relaxed exclusion restriction.
///
/// For each `z`, the counterfactual of the treated with `Z = z` is a
/// reweighting `w` of the controls with `Z = z`; a second reweighting `w'` of
/// the controls with `Z = 1 − z` describes the same counterfactual as seen
/// through the other encouragement arm. Both must satisfy the box and the
/// shifted KS constraint against the treated `Z = z` outcomes, each with its
/// own shift, and `|μ(w) − μ(w')| ≤ ε`. The two levels are combined with
/// weights `p_1z / p_1`. With `config.epsilon = None`, `w'` is dropped.
///
/// The feasible set of each `(w, shift)` is convex, so its set of means is an
/// interval and the coupling reduces to intersecting intervals over all shift
/// pairs.
pub fn iv_att_bound(data: &Dataset, config: &SensitivityConfig) -> Result<BoundResult> {
    config.validate()?;
    if config.uses_balance() {
        return Err(invalid("covariate balance is not supported by the instrumental-variable model"));
    }
    let strata = IvStrata::from_data(data)?;
    let grid = shift_grid(&data.all_outcomes(), config.m)?;
    let n1 = data.n1() as f64;

    let mut warnings = Vec::new();
    for t in 0..2 {
        for z in 0..2 {
            let n = strata.count(t, z);
            if n < 2 {
                warnings.push(format!(
                    "stratum T={t}, Z={z} has {n} unit; bounds may be very conservative"
                ));
            }
        }
    }

    let mut weights = vec![0.0; data.n0()];
    let controls = data.control_indices();
    let position = |idx: usize| controls.binary_search(&idx).expect("control index");
    for z in 0..2 {
        let solve = |stratum: usize| {
            ShiftSolve::new(
                strata.outcomes[0][stratum].clone(),
                &strata.outcomes[1][z],
                grid.clone(),
                config.ks_mode,
                config.gamma,
            )
        };
        let main = solve(z)?;
        let aux = match config.epsilon {
            Some(_) => Some(solve(1 - z)?),
            None => None,
        };
        let Some(side) = iv_side(&main, aux.as_ref(), config) else {
            let mut r = BoundResult::infeasible(data, config.direction);
            r.warnings = warnings;
            return Ok(r);
        };
        debug_assert!(side.mean.is_finite());
        let share = strata.count(1, z) as f64 / n1;
        for (k, &idx) in strata.indices[0][z].iter().enumerate() {
            weights[position(idx)] = share * side.weights[k];
        }
    }
    let mut r = BoundResult::optimal(data, config.direction, &weights, None);
    r.warnings = warnings;
    Ok(r)
}

fn iv_side(main: &ShiftSolve, aux: Option<&ShiftSolve>, config: &SensitivityConfig) -> Option<IvSide> {
    let delta = config.delta;
    let main_sets: Vec<_> = (0..main.shifts().len())
        .map(|j| main.extremes(j, delta))
        .collect();
    let aux_ranges: Option<Vec<(f64, f64, f64)>> = aux.map(|a| {
        (0..a.shifts().len())
            .filter_map(|j| a.extremes(j, delta).map(|e| (e.mean_min, e.mean_max, a.shifts()[j])))
            .collect()
    });
    if matches!(&aux_ranges, Some(r) if r.is_empty()) {
        return None;
    }
    let eps = config.epsilon.unwrap_or(f64::INFINITY);
    let lower = config.direction == Direction::Lower;
    // (key, shift, aux shift, mean, index); larger key wins.
    let mut best: Option<(f64, f64, f64, f64, usize)> = None;
    for (j, e) in main_sets.iter().enumerate() {
        let Some(e) = e else { continue };
        let c = main.shifts()[j];
        let pairs: Vec<(f64, f64, f64)> = match &aux_ranges {
            None => vec![(e.mean_min, e.mean_max, 0.0)],
            Some(ranges) => ranges
                .iter()
                .filter_map(|&(a, b, c2)| {
                    let lo = e.mean_min.max(a - eps);
                    let hi = e.mean_max.min(b + eps);
                    (lo <= hi + FEASIBILITY_TOL).then(|| (lo.min(hi), hi.max(lo), c2))
                })
                .collect(),
        };
        for (lo, hi, c2) in pairs {
            let (key, mean) = if lower { (hi, hi) } else { (-lo, lo) };
            let replace = match best {
                None => true,
                Some((bk, bc, bc2, _, _)) => {
                    if (key - bk).abs() > 1e-12 {
                        key > bk
                    } else if c != bc {
                        shift_key_less(c, bc)
                    } else {
                        shift_key_less(c2, bc2)
                    }
                }
            };
            if replace {
                best = Some((key, c, c2, mean, j));
            }
        }
    }
    let (_, _, _, mean, j) = best?;
    let e = main_sets[j].as_ref().expect("chosen shift is feasible");
    Some(IvSide {
        mean,
        weights: e.weights_with_mean(mean),
    })
}
