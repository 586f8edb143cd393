//! Weighted empirical CDFs and the distances used by the sensitivity models.
//!
//! Every distribution here is a right-continuous step function with finitely
//! many atoms. The supremum of a difference of two step functions is attained
//! at one of their jump points, so all distances are evaluated exactly on the
//! union of atoms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when comparing CDF levels against quantile probabilities.
const LEVEL_TOL: f64 = 1e-12;

/// A discrete distribution: strictly increasing atoms with nonnegative
/// weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEcdf {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedEcdf {
    /// Builds the ECDF, merging duplicate values and renormalizing weights.
    pub fn new(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if values.len() != weights.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                got: weights.len(),
                expected: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("values"));
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !weight.is_finite() {
                return Err(Error::NonFinite("weights"));
            }
            if weight < 0.0 {
                return Err(Error::NegativeWeight { index, weight });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }

        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut atoms: Vec<f64> = Vec::with_capacity(values.len());
        let mut merged: Vec<f64> = Vec::with_capacity(values.len());
        for i in order {
            match atoms.last() {
                Some(&last) if last == values[i] => *merged.last_mut().unwrap() += weights[i],
                _ => {
                    atoms.push(values[i]);
                    merged.push(weights[i]);
                }
            }
        }
        merged.iter_mut().for_each(|w| *w /= total);
        Ok(Self::from_sorted_parts(atoms, merged))
    }

    /// Equal weight on every value.
    pub fn uniform(values: &[f64]) -> Result<Self> {
        Self::new(values, &vec![1.0; values.len()])
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        Self::new(&[at], &[1.0])
    }

    fn from_sorted_parts(atoms: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            atoms,
            weights,
            cumulative,
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `F(y)`: total weight on atoms `≤ y`.
    pub fn cdf(&self, y: f64) -> f64 {
        let k = self.atoms.partition_point(|&a| a <= y);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Point mass at `y` (zero off the support).
    pub fn mass_at(&self, y: f64) -> f64 {
        match self.atoms.binary_search_by(|a| a.total_cmp(&y)) {
            Ok(i) => self.weights[i],
            Err(_) => 0.0,
        }
    }

    /// Generalized inverse `inf{y : F(y) ≥ p}`.
    pub fn quantile(&self, p: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c < p - LEVEL_TOL);
        self.atoms[k.min(self.atoms.len() - 1)]
    }

    pub fn mean(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| a * w)
            .sum()
    }

    pub fn min(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max(&self) -> f64 {
        *self.atoms.last().unwrap()
    }
}

/// Kolmogorov–Smirnov distance `max_y |F(y) − G(y)|`.
pub fn ks(f: &WeightedEcdf, g: &WeightedEcdf) -> f64 {
    // Merge walk over the union of atoms.
    let (mut i, mut j) = (0, 0);
    let (mut fv, mut gv) = (0.0f64, 0.0f64);
    let mut best = 0.0f64;
    while i < f.len() || j < g.len() {
        let next = match (f.atoms.get(i), g.atoms.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < f.len() && f.atoms[i] <= next {
            fv = f.cumulative[i];
            i += 1;
        }
        while j < g.len() && g.atoms[j] <= next {
            gv = g.cumulative[j];
            j += 1;
        }
        best = best.max((fv - gv).abs());
    }
    best
}

/// How a shifted KS distance is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsMode {
    /// Both CDFs sampled on the `2m + 1` point lattice anchored at the pooled
    /// minimum, as in the discretized mixed-integer formulation.
    #[default]
    Grid,
    /// Exact supremum over the union of atoms for each candidate shift.
    ExactAtoms,
}

/// The discretized set of location shifts `c0 + j·ε`, `j = 0..=2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftGrid {
    /// Lower end of the pooled outcome range; grid-mode evaluation anchor.
    pub origin: f64,
    /// `−|max − min|`.
    pub c0: f64,
    /// Step `|max − min| / m`.
    pub epsilon: f64,
    pub m: usize,
    pub shifts: Vec<f64>,
}

impl ShiftGrid {
    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// Whether the outcome range was degenerate (single shift at zero).
    pub fn is_degenerate(&self) -> bool {
        self.shifts.len() == 1
    }

    /// Grid-mode evaluation point `min + k·ε` for the shifted-from CDF.
    pub fn eval_point(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.epsilon
    }

    /// Grid-mode evaluation point `min + c0 + (j + k)·ε` for the shifted CDF.
    pub fn shifted_eval_point(&self, j: usize, k: usize) -> f64 {
        self.origin + ((j + k) as f64 - self.m as f64) * self.epsilon
    }

    /// Number of lattice points in grid mode.
    pub fn lattice_len(&self) -> usize {
        if self.is_degenerate() {
            1
        } else {
            2 * self.m + 1
        }
    }
}

/// Builds the shift grid from the pooled outcome values.
pub fn shift_grid(values: &[f64], m: usize) -> Result<ShiftGrid> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if m == 0 {
        return Err(crate::error::invalid("shift grid resolution m must be positive"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("values"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = (hi - lo).abs();
    if range == 0.0 {
        return Ok(ShiftGrid {
            origin: lo,
            c0: 0.0,
            epsilon: 0.0,
            m,
            shifts: vec![0.0],
        });
    }
    let epsilon = range / m as f64;
    // Index arithmetic around the midpoint keeps the grid exactly symmetric.
    let shifts = (0..=2 * m)
        .map(|j| (j as f64 - m as f64) * epsilon)
        .collect();
    Ok(ShiftGrid {
        origin: lo,
        c0: -range,
        epsilon,
        m,
        shifts,
    })
}

/// `KS(F(y), G(y + c))` evaluated exactly on the union of jump points.
pub fn shifted_ks_exact(f: &WeightedEcdf, g: &WeightedEcdf, c: f64) -> f64 {
    let mut best = 0.0f64;
    for &y in &f.atoms {
        best = best.max((f.cdf(y) - g.cdf(y + c)).abs());
    }
    for (k, &a) in g.atoms.iter().enumerate() {
        best = best.max((f.cdf(a - c) - g.cumulative[k]).abs());
    }
    best
}

/// Grid-mode `max_k |F(min + kε) − G(min + c0 + (j + k)ε)|` for shift index `j`.
pub fn shifted_ks_grid(f: &WeightedEcdf, g: &WeightedEcdf, grid: &ShiftGrid, j: usize) -> f64 {
    if grid.is_degenerate() {
        return ks(f, g);
    }
    (0..grid.lattice_len())
        .map(|k| (f.cdf(grid.eval_point(k)) - g.cdf(grid.shifted_eval_point(j, k))).abs())
        .fold(0.0, f64::max)
}

/// Smallest shifted KS distance over the grid, with the minimizing shift `c`
/// in `KS(F(y), G(y + c))`. Ties go to the smallest `|c|`, then the smaller `c`.
pub fn min_shift_ks(
    f: &WeightedEcdf,
    g: &WeightedEcdf,
    grid: &ShiftGrid,
    mode: KsMode,
) -> (f64, f64) {
    let mut best: Option<(f64, f64)> = None;
    for (j, &c) in grid.shifts.iter().enumerate() {
        let d = match mode {
            KsMode::Grid => shifted_ks_grid(f, g, grid, j),
            KsMode::ExactAtoms => shifted_ks_exact(f, g, c),
        };
        best = Some(match best {
            None => (d, c),
            Some(cur) => prefer_shift(cur, (d, c)),
        });
    }
    best.expect("shift grid is never empty")
}

/// Deterministic reduction over `(value, shift)` candidates where smaller
/// values win and ties break toward `|shift|` smallest, then `shift` smallest.
pub(crate) fn prefer_shift(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    if (a.0 - b.0).abs() > LEVEL_TOL {
        return if b.0 < a.0 { b } else { a };
    }
    if shift_key_less(b.1, a.1) {
        b
    } else {
        a
    }
}

pub(crate) fn shift_key_less(a: f64, b: f64) -> bool {
    match a.abs().total_cmp(&b.abs()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a < b,
    }
}

/// Which branch of the jump-difference distance applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRegime {
    /// `Γ ≥ 2`: absolute jump differences (a metric).
    GammaGe2,
    /// `1 ≤ Γ < 2`: positive part of jump differences (a quasimetric).
    GammaLt2,
}

impl GammaRegime {
    pub fn for_gamma(gamma: f64) -> Self {
        if gamma >= 2.0 {
            GammaRegime::GammaGe2
        } else {
            GammaRegime::GammaLt2
        }
    }
}

/// Jump-difference distance between two step CDFs.
pub fn d0(f: &WeightedEcdf, g: &WeightedEcdf, regime: GammaRegime) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut best = 0.0f64;
    while i < f.len() || j < g.len() {
        let diff = match (f.atoms.get(i), g.atoms.get(j)) {
            (Some(&a), Some(&b)) if a == b => {
                i += 1;
                j += 1;
                f.weights[i - 1] - g.weights[j - 1]
            }
            (Some(&a), Some(&b)) if a < b => {
                i += 1;
                f.weights[i - 1]
            }
            (Some(_), None) => {
                i += 1;
                f.weights[i - 1]
            }
            _ => {
                j += 1;
                -g.weights[j - 1]
            }
        };
        let term = match regime {
            GammaRegime::GammaGe2 => diff.abs(),
            GammaRegime::GammaLt2 => diff.max(0.0),
        };
        best = best.max(term);
    }
    best
}

/// The changes-in-changes counterfactual `y ↦ F_b1(F_b0⁻¹(F_00(y)))` on the
/// atoms of `F_00`.
///
/// Treated baseline mass lying above the control baseline support cannot be
/// transported further than the top control endline atom, so whatever the
/// composition leaves unassigned lands there.
pub fn cic_target_cdf(
    f_b1: &WeightedEcdf,
    f_b0: &WeightedEcdf,
    f_00: &WeightedEcdf,
) -> WeightedEcdf {
    let mut weights = Vec::with_capacity(f_00.len());
    let mut prev = 0.0f64;
    let last = f_00.len() - 1;
    for (k, &y) in f_00.atoms.iter().enumerate() {
        let level = if k == last {
            1.0
        } else {
            f_b1.cdf(f_b0.quantile(f_00.cdf(y))).max(prev)
        };
        weights.push(level - prev);
        prev = level;
    }
    WeightedEcdf::from_sorted_parts(f_00.atoms.clone(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn ecdf_two_equal_atoms() {
        let f = WeightedEcdf::new(&[1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert!(close(f.cdf(1.0), 0.5));
        assert!(close(f.cdf(2.0), 1.0));
        assert_eq!(f.cdf(0.999), 0.0);
    }

    #[test]
    fn ecdf_merges_and_normalizes() {
        let f = WeightedEcdf::new(&[2.0, 1.0, 1.0], &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(f.atoms(), &[1.0, 2.0]);
        assert!(close(f.weights()[0], 0.75));
        assert!(close(f.weights()[1], 0.25));
    }

    #[test]
    fn ecdf_point_mass_normalizes() {
        let f = WeightedEcdf::new(&[5.0], &[3.0]).unwrap();
        assert_eq!(f.atoms(), &[5.0]);
        assert_eq!(f.weights(), &[1.0]);
        assert_eq!(f.cdf(5.0), 1.0);
    }

    #[test]
    fn ecdf_errors() {
        assert_eq!(WeightedEcdf::new(&[], &[]), Err(Error::Empty));
        assert!(matches!(
            WeightedEcdf::new(&[1.0, 2.0], &[1.0, -0.5]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert_eq!(
            WeightedEcdf::new(&[1.0], &[0.0]),
            Err(Error::ZeroTotalWeight)
        );
    }

    #[test]
    fn quantile_is_generalized_inverse() {
        let f = WeightedEcdf::uniform(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.quantile(0.0), 0.0);
        assert_eq!(f.quantile(0.25), 0.0);
        assert_eq!(f.quantile(0.26), 1.0);
        assert_eq!(f.quantile(1.0), 3.0);
    }

    #[test]
    fn ks_examples() {
        let f = WeightedEcdf::uniform(&[0.0, 1.0]).unwrap();
        assert_eq!(ks(&f, &f), 0.0);
        let p0 = WeightedEcdf::point_mass(0.0).unwrap();
        let p1 = WeightedEcdf::point_mass(1.0).unwrap();
        assert_eq!(ks(&p0, &p1), 1.0);
        assert!(close(ks(&f, &p0), 0.5));
    }

    #[test]
    fn shift_grid_examples() {
        let g = shift_grid(&[0.0, 10.0], 5).unwrap();
        assert_eq!(g.epsilon, 2.0);
        assert_eq!(g.c0, -10.0);
        assert_eq!(
            g.shifts,
            vec![-10.0, -8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
        );
        assert_eq!(shift_grid(&[3.0, 3.0, 3.0], 7).unwrap().shifts, vec![0.0]);
        assert_eq!(shift_grid(&[0.0, 1.0], 1).unwrap().shifts, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn min_shift_ks_recovers_location_shift() {
        let f = WeightedEcdf::new(&[0.0, 1.0, 3.0], &[0.2, 0.5, 0.3]).unwrap();
        let grid = shift_grid(&[0.0, 10.0], 5).unwrap();
        let g = WeightedEcdf::new(&[4.0, 5.0, 7.0], &[0.2, 0.5, 0.3]).unwrap();
        let (d, c) = min_shift_ks(&f, &g, &grid, KsMode::ExactAtoms);
        assert_eq!((d, c), (0.0, 4.0));
        let (d, c) = min_shift_ks(&f, &f, &grid, KsMode::ExactAtoms);
        assert_eq!((d, c), (0.0, 0.0));
    }

    #[test]
    fn min_shift_ks_uniform_pair() {
        // G(y + 2) puts G's atoms {2, 3} back on {0, 1}.
        let f = WeightedEcdf::uniform(&[0.0, 1.0]).unwrap();
        let g = WeightedEcdf::uniform(&[2.0, 3.0]).unwrap();
        let grid = shift_grid(&[0.0, 1.0, 2.0, 3.0], 3).unwrap();
        assert!(grid.shifts.contains(&-2.0) && grid.shifts.contains(&2.0));
        assert_eq!(min_shift_ks(&f, &g, &grid, KsMode::ExactAtoms), (0.0, 2.0));
        assert_eq!(min_shift_ks(&f, &g, &grid, KsMode::Grid), (0.0, 2.0));
    }

    #[test]
    fn d0_examples() {
        let f = WeightedEcdf::uniform(&[0.0, 1.0]).unwrap();
        let p0 = WeightedEcdf::point_mass(0.0).unwrap();
        assert_eq!(d0(&f, &f, GammaRegime::GammaGe2), 0.0);
        assert!(close(d0(&p0, &f, GammaRegime::GammaGe2), 0.5));
        assert!(close(d0(&p0, &f, GammaRegime::GammaLt2), 0.5));
        assert!(close(d0(&f, &p0, GammaRegime::GammaLt2), 0.5));
    }

    #[test]
    fn cic_identity_transport() {
        // Every level of F_00 is also a level of the baseline CDF.
        let grid: Vec<f64> = (0..20).map(f64::from).collect();
        let b = WeightedEcdf::uniform(&grid).unwrap();
        let f00 = WeightedEcdf::new(&[5.0, 6.0, 7.0, 9.0], &[0.1, 0.4, 0.25, 0.25]).unwrap();
        let out = cic_target_cdf(&b, &b, &f00);
        assert_eq!(out.atoms(), f00.atoms());
        for (a, b) in out.weights().iter().zip(f00.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cic_quantile_shift_by_hand() {
        // F_b0 uniform on {0,1,2}; F_b1 uniform on {1,2,3}; F_00 on {5,6,7}
        // with masses (0.2, 0.3, 0.5).
        //   y=5: F_00=0.2, F_b0⁻¹(0.2)=0, F_b1(0)=0
        //   y=6: F_00=0.5, F_b0⁻¹(0.5)=1, F_b1(1)=1/3
        //   y=7: top atom, closes at 1
        let b0 = WeightedEcdf::uniform(&[0.0, 1.0, 2.0]).unwrap();
        let b1 = WeightedEcdf::uniform(&[1.0, 2.0, 3.0]).unwrap();
        let f00 = WeightedEcdf::new(&[5.0, 6.0, 7.0], &[0.2, 0.3, 0.5]).unwrap();
        let out = cic_target_cdf(&b1, &b0, &f00);
        assert!(close(out.weights()[0], 0.0));
        assert!(close(out.weights()[1], 1.0 / 3.0));
        assert!(close(out.weights()[2], 2.0 / 3.0));
        assert!(close(out.mean(), 6.0 / 3.0 + 14.0 / 3.0));
    }

    #[test]
    fn cic_single_atom() {
        let b0 = WeightedEcdf::uniform(&[0.0, 1.0]).unwrap();
        let b1 = WeightedEcdf::uniform(&[0.5, 4.0]).unwrap();
        let f00 = WeightedEcdf::point_mass(2.5).unwrap();
        let out = cic_target_cdf(&b1, &b0, &f00);
        assert_eq!(out.atoms(), &[2.5]);
        assert_eq!(out.weights(), &[1.0]);
    }
}
