//! Weight problems whose only coupling is through prefix sums of the sorted
//! control outcomes.
//!
//! Group the controls by distinct outcome value `v_0 < … < v_{G-1}` and let
//! `P_r` be the total weight on the first `r` groups. Box constraints on unit
//! weights become `P_{r+1} − P_r ∈ [floor_r, cap_r]`, and a KS constraint
//! evaluated at a point becomes a bound on one `P_r`. This is a system of
//! difference constraints on a path, so its tightest bounds follow from one
//! forward and one backward sweep, and those bounds are themselves feasible.
//! Since `Σ wᵢYᵢ = v_{G-1} − Σ_{r=1}^{G-1} P_r (v_r − v_{r-1})`, the smallest
//! prefix sums maximize the weighted mean and the largest minimize it.

use crate::lp::FEASIBILITY_TOL;

/// Control outcomes sorted and grouped by distinct value.
#[derive(Debug, Clone)]
pub(crate) struct ControlArm {
    pub values: Vec<f64>,
    /// Positions into `values`, sorted by outcome (stable).
    pub order: Vec<usize>,
    pub group_values: Vec<f64>,
    /// `order[group_start[g]..group_start[g + 1]]` is group `g`.
    pub group_start: Vec<usize>,
}

impl ControlArm {
    pub fn new(values: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut group_values = Vec::new();
        let mut group_start = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            if group_values.last() != Some(&values[i]) {
                group_values.push(values[i]);
                group_start.push(pos);
            }
        }
        group_start.push(order.len());
        Self {
            values,
            order,
            group_values,
            group_start,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn groups(&self) -> usize {
        self.group_values.len()
    }

    pub fn group_size(&self, g: usize) -> usize {
        self.group_start[g + 1] - self.group_start[g]
    }

    /// Number of groups with value `≤ y`.
    pub fn prefix_len(&self, y: f64) -> usize {
        self.group_values.partition_point(|&v| v <= y)
    }

    /// Unit weights (in `values` order) that split each group's mass evenly.
    pub fn spread(&self, group_mass: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        for (g, &mass) in group_mass.iter().enumerate() {
            let size = self.group_size(g) as f64;
            for &i in &self.order[self.group_start[g]..self.group_start[g + 1]] {
                w[i] = mass / size;
            }
        }
        w
    }

    /// Row vector selecting the units in the first `r` groups.
    pub fn prefix_row(&self, r: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.len()];
        for &i in &self.order[..self.group_start[r]] {
            row[i] = 1.0;
        }
        row
    }

    pub fn mean(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.values).map(|(a, b)| a * b).sum()
    }
}

/// Interval constraints on the prefix sums `P_0..=P_G`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PrefixBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl PrefixBounds {
    pub fn unconstrained(groups: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; groups + 1],
            upper: vec![f64::INFINITY; groups + 1],
        }
    }

    pub fn restrict(&mut self, r: usize, lo: f64, hi: f64) {
        self.lower[r] = self.lower[r].max(lo);
        self.upper[r] = self.upper[r].min(hi);
    }

    pub fn groups(&self) -> usize {
        self.lower.len() - 1
    }

    /// Whether the fixed endpoints `P_0 = 0`, `P_G = 1` satisfy their bounds.
    pub fn endpoints_ok(&self, tol: f64) -> bool {
        let g = self.groups();
        self.lower[0] <= tol
            && self.upper[0] >= -tol
            && self.lower[g] <= 1.0 + tol
            && self.upper[g] >= 1.0 - tol
    }
}

/// The two extreme feasible weight vectors of a chain problem.
#[derive(Debug, Clone)]
pub(crate) struct ChainExtremes {
    /// Weights maximizing the weighted mean.
    pub w_max: Vec<f64>,
    /// Weights minimizing the weighted mean.
    pub w_min: Vec<f64>,
    pub mean_max: f64,
    pub mean_min: f64,
}

impl ChainExtremes {
    /// Feasible weights with weighted mean `target ∈ [mean_min, mean_max]`.
    pub fn weights_with_mean(&self, target: f64) -> Vec<f64> {
        let span = self.mean_max - self.mean_min;
        let t = if span > 0.0 {
            ((target - self.mean_min) / span).clamp(0.0, 1.0)
        } else {
            1.0
        };
        self.w_min
            .iter()
            .zip(&self.w_max)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect()
    }
}

/// Solves `max`/`min Σ wᵢYᵢ` over `{Σw = 1, floor ≤ wᵢ ≤ cap, prefix bounds}`.
/// Returns `None` when the constraint set is empty.
pub(crate) fn solve_chain(
    arm: &ControlArm,
    bounds: &PrefixBounds,
    floor: f64,
    cap: f64,
) -> Option<ChainExtremes> {
    solve_chain_tol(arm, bounds, floor, cap, FEASIBILITY_TOL)
}

/// [`solve_chain`] with an explicit feasibility tolerance.
pub(crate) fn solve_chain_tol(
    arm: &ControlArm,
    bounds: &PrefixBounds,
    floor: f64,
    cap: f64,
    tol: f64,
) -> Option<ChainExtremes> {
    let g = arm.groups();
    debug_assert_eq!(bounds.groups(), g);
    if !bounds.endpoints_ok(tol) {
        return None;
    }
    let step_lo: Vec<f64> = (0..g).map(|k| floor * arm.group_size(k) as f64).collect();
    let step_hi: Vec<f64> = (0..g).map(|k| cap * arm.group_size(k) as f64).collect();

    let mut lo = vec![0.0; g + 1];
    let mut hi = vec![0.0; g + 1];
    for r in 0..=g {
        let (base_lo, base_hi) = if r == 0 {
            (0.0, 0.0)
        } else if r == g {
            (1.0, 1.0)
        } else {
            (0.0, 1.0)
        };
        lo[r] = bounds.lower[r].max(base_lo);
        hi[r] = bounds.upper[r].min(base_hi);
        if r == 0 || r == g {
            // Endpoints are pinned; their bounds were checked above.
            lo[r] = base_lo;
            hi[r] = base_hi;
        }
    }
    for r in 1..=g {
        lo[r] = lo[r].max(lo[r - 1] + step_lo[r - 1]);
        hi[r] = hi[r].min(hi[r - 1] + step_hi[r - 1]);
    }
    for r in (0..g).rev() {
        lo[r] = lo[r].max(lo[r + 1] - step_hi[r]);
        hi[r] = hi[r].min(hi[r + 1] - step_lo[r]);
    }
    if (0..=g).any(|r| lo[r] > hi[r] + tol) {
        return None;
    }

    let masses = |p: &[f64]| -> Vec<f64> {
        (0..g)
            .map(|k| (p[k + 1] - p[k]).clamp(step_lo[k], step_hi[k]))
            .collect()
    };
    let w_max = arm.spread(&masses(&lo));
    let w_min = arm.spread(&masses(&hi));
    Some(ChainExtremes {
        mean_max: arm.mean(&w_max),
        mean_min: arm.mean(&w_min),
        w_max,
        w_min,
    })
}
