//! Dense bounded-variable primal simplex.
//!
//! Problems are small (hundreds of variables at most), so the solver keeps a
//! full tableau `B⁻¹A` and pivots with Bland's rule: the entering variable is
//! the eligible one with the lowest index, and ratio-test ties go to the basic
//! variable with the lowest index. Nonbasic variables sit at one of their
//! bounds (or at zero when free), which lets box constraints live in the
//! variable bounds rather than as rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost tolerance for optimality.
pub const OPTIMALITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("bounds vector has length {got}, expected {expected}")]
    BoundsLength { got: usize, expected: usize },
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { var: usize, lower: f64, upper: f64 },
    #[error("NaN coefficient in {0}")]
    NotANumber(&'static str),
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A linear program with `≤` rows, `=` rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    /// `(a, b)` meaning `a·x ≤ b`.
    pub inequalities: Vec<(Vec<f64>, f64)>,
    /// `(e, f)` meaning `e·x = f`.
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// A problem over `objective.len()` variables, all nonnegative.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends a variable with the given cost and bounds; existing rows get a
    /// zero coefficient. Returns its index.
    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        for (row, _) in self.inequalities.iter_mut().chain(self.equalities.iter_mut()) {
            row.push(0.0);
        }
        self.objective.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.inequalities.push((row, rhs));
        self
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.inequalities
            .push((row.into_iter().map(|a| -a).collect(), -rhs));
        self
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.equalities.push((row, rhs));
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n {
            return Err(LpError::BoundsLength {
                got: self.lower.len(),
                expected: n,
            });
        }
        if self.upper.len() != n {
            return Err(LpError::BoundsLength {
                got: self.upper.len(),
                expected: n,
            });
        }
        if self.objective.iter().any(|c| c.is_nan()) {
            return Err(LpError::NotANumber("objective"));
        }
        for (row, (a, b)) in self
            .inequalities
            .iter()
            .chain(self.equalities.iter())
            .enumerate()
        {
            if a.len() != n {
                return Err(LpError::DimensionMismatch {
                    row,
                    got: a.len(),
                    expected: n,
                });
            }
            if b.is_nan() || a.iter().any(|v| v.is_nan()) {
                return Err(LpError::NotANumber("constraint row"));
            }
        }
        for var in 0..n {
            let (l, u) = (self.lower[var], self.upper[var]);
            if l.is_nan() || u.is_nan() {
                return Err(LpError::NotANumber("bounds"));
            }
            if l > u {
                return Err(LpError::InvertedBounds {
                    var,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in &self.inequalities {
            worst = worst.max(dot(a, x) - b);
        }
        for (e, f) in &self.equalities {
            worst = worst.max((dot(e, x) - f).abs());
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.validate()?;
    Simplex::new(problem).run(problem)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

/// Working state: columns are structural variables, then one slack per
/// inequality, then one artificial per row.
struct Simplex {
    rows: usize,
    cols: usize,
    n_struct: usize,
    n_slack: usize,
    tableau: Vec<f64>,
    reduced: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

impl Simplex {
    fn new(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let n_slack = p.inequalities.len();
        let rows = n_slack + p.equalities.len();
        let cols = n + n_slack + rows;

        let mut lower = Vec::with_capacity(cols);
        let mut upper = Vec::with_capacity(cols);
        lower.extend_from_slice(&p.lower);
        upper.extend_from_slice(&p.upper);
        lower.extend(std::iter::repeat(0.0).take(n_slack + rows));
        upper.extend(std::iter::repeat(f64::INFINITY).take(n_slack));
        upper.extend(std::iter::repeat(0.0).take(rows));

        let mut x = vec![0.0; cols];
        for j in 0..n {
            x[j] = if lower[j].is_finite() {
                lower[j]
            } else if upper[j].is_finite() {
                upper[j]
            } else {
                0.0
            };
        }

        let mut tableau = vec![0.0; rows * cols];
        let mut basis = Vec::with_capacity(rows);
        let mut is_basic = vec![false; cols];
        let all_rows = p.inequalities.iter().chain(p.equalities.iter());
        for (i, (a, b)) in all_rows.enumerate() {
            let residual = b - dot(a, &x[..n]);
            let row = &mut tableau[i * cols..(i + 1) * cols];
            row[..n].copy_from_slice(a);
            if i < n_slack {
                row[n + i] = 1.0;
            }
            let art = n + n_slack + i;
            let basic = if i < n_slack && residual >= 0.0 {
                n + i
            } else {
                // Artificial enters with the sign that makes it nonnegative.
                let sign = if residual >= 0.0 { 1.0 } else { -1.0 };
                row[art] = sign;
                upper[art] = f64::INFINITY;
                if sign < 0.0 {
                    row.iter_mut().for_each(|v| *v = -*v);
                }
                art
            };
            x[basic] = residual.abs();
            basis.push(basic);
            is_basic[basic] = true;
        }

        Self {
            rows,
            cols,
            n_struct: n,
            n_slack,
            tableau,
            reduced: vec![0.0; cols],
            lower,
            upper,
            x,
            basis,
            is_basic,
            iterations: 0,
            max_iterations: 50_000 + 100 * cols,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n_struct + self.n_slack
    }

    fn set_costs(&mut self, costs: &[f64]) {
        self.reduced.copy_from_slice(costs);
        for i in 0..self.rows {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tableau[i * self.cols..(i + 1) * self.cols];
                for (d, t) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * t;
                }
            }
        }
    }

    fn run(mut self, p: &LpProblem) -> Result<LpSolution, LpError> {
        let n = self.n_struct;
        let first_art = n + self.n_slack;

        let mut phase1 = vec![0.0; self.cols];
        let mut needs_phase1 = false;
        for j in first_art..self.cols {
            if self.upper[j] > 0.0 {
                phase1[j] = 1.0;
                needs_phase1 = true;
            }
        }
        if needs_phase1 {
            self.set_costs(&phase1);
            self.iterate(Phase::One)?;
            let infeasibility: f64 = (first_art..self.cols).map(|j| self.x[j]).sum();
            let scale = 1.0
                + p.inequalities
                    .iter()
                    .chain(p.equalities.iter())
                    .map(|(_, b)| b.abs())
                    .fold(0.0, f64::max);
            if infeasibility > FEASIBILITY_TOL * scale {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x: self.x[..n].to_vec(),
                    objective_value: f64::NAN,
                });
            }
            for j in first_art..self.cols {
                self.upper[j] = 0.0;
                self.x[j] = 0.0;
            }
            self.drive_out_artificials();
        }

        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut costs = vec![0.0; self.cols];
        for (c, &o) in costs.iter_mut().zip(&p.objective) {
            *c = sign * o;
        }
        self.set_costs(&costs);
        let status = match self.iterate(Phase::Two)? {
            Step::Unbounded => LpStatus::Unbounded,
            _ => LpStatus::Optimal,
        };

        let mut x = self.x[..n].to_vec();
        if status == LpStatus::Optimal {
            for (j, v) in x.iter_mut().enumerate() {
                *v = v.clamp(p.lower[j], p.upper[j]);
            }
        }
        let objective_value = match status {
            LpStatus::Optimal => p.objective_at(&x),
            LpStatus::Unbounded => sign * -f64::INFINITY,
            LpStatus::Infeasible => f64::NAN,
        };
        Ok(LpSolution {
            status,
            x,
            objective_value,
        })
    }

    /// Pivots zero-valued artificials out of the basis where a non-artificial
    /// column can replace them. Rows where none can are redundant.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row = &self.tableau[r * self.cols..(r + 1) * self.cols];
            let first_art = self.n_struct + self.n_slack;
            if let Some(j) = (0..first_art).find(|&j| !self.is_basic[j] && row[j].abs() > 1e-9) {
                self.pivot(r, j);
            }
        }
    }

    fn iterate(&mut self, phase: Phase) -> Result<Step, LpError> {
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            self.iterations += 1;
            match self.step(phase) {
                Step::Continue => {}
                other => return Ok(other),
            }
        }
    }

    fn step(&mut self, phase: Phase) -> Step {
        // Bland: lowest-index improving column.
        let mut entering = None;
        for j in 0..self.cols {
            if self.is_basic[j] || self.lower[j] == self.upper[j] {
                continue;
            }
            if phase == Phase::Two && self.is_artificial(j) {
                continue;
            }
            let d = self.reduced[j];
            let can_rise = self.x[j] < self.upper[j];
            let can_fall = self.x[j] > self.lower[j];
            if d < -OPTIMALITY_TOL && can_rise {
                entering = Some((j, 1.0));
                break;
            }
            if d > OPTIMALITY_TOL && can_fall {
                entering = Some((j, -1.0));
                break;
            }
        }
        let Some((q, dir)) = entering else {
            return Step::Optimal;
        };

        let mut theta = f64::INFINITY;
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let alpha = dir * self.tableau[i * self.cols + q];
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[i];
            let (limit, bound) = if alpha > 0.0 {
                if !self.lower[b].is_finite() {
                    continue;
                }
                (((self.x[b] - self.lower[b]) / alpha).max(0.0), self.lower[b])
            } else {
                if !self.upper[b].is_finite() {
                    continue;
                }
                (((self.upper[b] - self.x[b]) / -alpha).max(0.0), self.upper[b])
            };
            let better = match leave {
                None => true,
                Some((r, _)) => {
                    let tie = (limit - theta).abs() <= 1e-12 * (1.0 + theta.abs());
                    if tie {
                        b < self.basis[r]
                    } else {
                        limit < theta
                    }
                }
            };
            if better {
                theta = limit;
                leave = Some((i, bound));
            }
        }

        let span = self.upper[q] - self.lower[q];
        if span.is_finite() && span <= theta {
            // Bound flip: the entering variable reaches its other bound first.
            self.shift(q, dir * span);
            self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            return Step::Continue;
        }
        let Some((r, bound)) = leave else {
            return Step::Unbounded;
        };
        self.shift(q, dir * theta);
        let leaving = self.basis[r];
        self.pivot(r, q);
        self.x[leaving] = bound;
        Step::Continue
    }

    /// Moves nonbasic `q` by `delta` and updates basic values.
    fn shift(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[q] += delta;
        for i in 0..self.rows {
            let t = self.tableau[i * self.cols + q];
            if t != 0.0 {
                self.x[self.basis[i]] -= delta * t;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.tableau[r * cols + q];
        {
            let row = &mut self.tableau[r * cols..(r + 1) * cols];
            row.iter_mut().for_each(|v| *v /= piv);
            row[q] = 1.0;
        }
        let (before, rest) = self.tableau.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for row in before
            .chunks_exact_mut(cols)
            .chain(after.chunks_exact_mut(cols))
        {
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (v, p) in self.reduced.iter_mut().zip(pivot_row.iter()) {
                *v -= f * p;
            }
            self.reduced[q] = 0.0;
        }
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }
}
