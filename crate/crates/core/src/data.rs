//! Per-unit observational records.

use serde::{Deserialize, Serialize};

use crate::distributions::WeightedEcdf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub y: f64,
    pub treated: bool,
    /// Pre-treatment outcome, for difference-in-differences designs.
    pub baseline: Option<f64>,
    /// Binary encouragement, for instrumental-variable designs.
    pub instrument: Option<bool>,
    pub covariates: Vec<f64>,
}

impl Unit {
    pub fn new(y: f64, treated: bool) -> Self {
        Self {
            y,
            treated,
            baseline: None,
            instrument: None,
            covariates: Vec::new(),
        }
    }

    pub fn with_baseline(mut self, baseline: f64) -> Self {
        self.baseline = Some(baseline);
        self
    }

    pub fn with_instrument(mut self, z: bool) -> Self {
        self.instrument = Some(z);
        self
    }

    pub fn with_covariates(mut self, x: Vec<f64>) -> Self {
        self.covariates = x;
        self
    }
}

/// Stratum sizes `n_tz` keyed by `[t][z]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataCounts(pub [[usize; 2]; 2]);

impl StrataCounts {
    pub fn count(&self, treated: bool, z: bool) -> usize {
        self.0[treated as usize][z as usize]
    }

    pub fn total(&self) -> usize {
        self.0.iter().flatten().sum()
    }

    /// `p_tz = n_tz / n`.
    pub fn proportion(&self, treated: bool, z: bool) -> f64 {
        self.count(treated, z) as f64 / self.total() as f64
    }
}

/// A validated sample with at least one treated and one control unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    units: Vec<Unit>,
    n1: usize,
    n0: usize,
    dim: usize,
}

impl Dataset {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        let dim = units.first().map_or(0, |u| u.covariates.len());
        for (index, u) in units.iter().enumerate() {
            if !u.y.is_finite() {
                return Err(Error::NonFinite("outcome"));
            }
            if u.baseline.is_some_and(|b| !b.is_finite()) {
                return Err(Error::NonFinite("baseline"));
            }
            if u.covariates.len() != dim {
                return Err(Error::CovariateDimension {
                    index,
                    got: u.covariates.len(),
                    expected: dim,
                });
            }
            if u.covariates.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("covariates"));
            }
        }
        let n1 = units.iter().filter(|u| u.treated).count();
        let n0 = units.len() - n1;
        if n1 == 0 {
            return Err(Error::EmptyArm("treated"));
        }
        if n0 == 0 {
            return Err(Error::EmptyArm("control"));
        }
        Ok(Self {
            units,
            n1,
            n0,
            dim,
        })
    }

    /// Outcome-only dataset from the two arms.
    pub fn from_arms(treated: &[f64], control: &[f64]) -> Result<Self> {
        let units = treated
            .iter()
            .map(|&y| Unit::new(y, true))
            .chain(control.iter().map(|&y| Unit::new(y, false)))
            .collect();
        Self::new(units)
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn n(&self) -> usize {
        self.units.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Covariate dimension `J`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Indices (into [`Dataset::units`]) of the control units, in input order.
    pub fn control_indices(&self) -> Vec<usize> {
        self.arm_indices(false)
    }

    pub fn treated_indices(&self) -> Vec<usize> {
        self.arm_indices(true)
    }

    fn arm_indices(&self, treated: bool) -> Vec<usize> {
        self.units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.treated == treated)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn outcomes(&self, treated: bool) -> Vec<f64> {
        self.units
            .iter()
            .filter(|u| u.treated == treated)
            .map(|u| u.y)
            .collect()
    }

    pub fn treated_outcomes(&self) -> Vec<f64> {
        self.outcomes(true)
    }

    pub fn control_outcomes(&self) -> Vec<f64> {
        self.outcomes(false)
    }

    pub fn all_outcomes(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.y).collect()
    }

    pub fn treated_mean(&self) -> f64 {
        mean(&self.treated_outcomes())
    }

    pub fn control_mean(&self) -> f64 {
        mean(&self.control_outcomes())
    }

    /// Uniform-weight ECDF of one arm's outcomes.
    pub fn arm_ecdf(&self, treated: bool) -> WeightedEcdf {
        WeightedEcdf::uniform(&self.outcomes(treated)).expect("arms are nonempty")
    }

    pub fn has_baselines(&self) -> bool {
        self.units.iter().all(|u| u.baseline.is_some())
    }

    pub fn has_instrument(&self) -> bool {
        self.units.iter().all(|u| u.instrument.is_some())
    }

    pub fn baselines(&self, treated: bool) -> Result<Vec<f64>> {
        self.units
            .iter()
            .filter(|u| u.treated == treated)
            .map(|u| u.baseline.ok_or(Error::MissingField("baseline")))
            .collect()
    }

    /// Stratum counts, when every unit carries an instrument value.
    pub fn strata(&self) -> Option<StrataCounts> {
        let mut counts = [[0usize; 2]; 2];
        for u in &self.units {
            let z = u.instrument?;
            counts[u.treated as usize][z as usize] += 1;
        }
        Some(StrataCounts(counts))
    }

    /// Same units with treatment labels flipped.
    pub fn swap_treatment(&self) -> Self {
        let units = self
            .units
            .iter()
            .cloned()
            .map(|mut u| {
                u.treated = !u.treated;
                u
            })
            .collect();
        Self {
            units,
            n1: self.n0,
            n0: self.n1,
            dim: self.dim,
        }
    }

    /// Applies `f` to every outcome (and baseline).
    pub fn map_outcomes(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let units = self
            .units
            .iter()
            .cloned()
            .map(|mut u| {
                u.y = f(u.y);
                u.baseline = u.baseline.map(&f);
                u
            })
            .collect();
        Self::new(units)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
