//! Brute-force reference solvers shared by the integration tests.
//!
//! Everything here is deliberately naive: linear programs are solved by
//! enumerating every basis and the distributional bound by enumerating every
//! shift pattern. Nothing is borrowed from the library beyond its data types.

#![allow(dead_code)]

use drci::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const VERTEX_TOL: f64 = 1e-9;

/// `{x : A x ≤ b, E x = f}` over `n` variables.
#[derive(Debug, Clone, Default)]
pub struct Polytope {
    pub n: usize,
    pub le: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

impl Polytope {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    pub fn le(&mut self, row: Vec<f64>, rhs: f64) {
        self.le.push((row, rhs));
    }

    pub fn ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.le.push((row.iter().map(|v| -v).collect(), -rhs));
    }

    pub fn eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq.push((row, rhs));
    }

    pub fn bounds(&mut self, lower: f64, upper: f64) {
        for i in 0..self.n {
            let mut e = vec![0.0; self.n];
            e[i] = 1.0;
            if upper.is_finite() {
                self.le(e.clone(), upper);
            }
            if lower.is_finite() {
                self.ge(e, lower);
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        self.le.iter().all(|(a, b)| dot(a) <= b + VERTEX_TOL)
            && self.eq.iter().all(|(a, b)| (dot(a) - b).abs() <= VERTEX_TOL)
    }

    /// Every basic feasible point. Empty iff the polytope is empty, provided
    /// it is bounded.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for (a, b) in &self.le {
            if a.iter().all(|&v| v == 0.0) {
                if *b < -VERTEX_TOL {
                    return Vec::new();
                }
                continue;
            }
            match rows.iter_mut().find(|(r, _)| r == a) {
                Some(existing) => existing.1 = existing.1.min(*b),
                None => rows.push((a.clone(), *b)),
            }
        }
        let free = self.n.saturating_sub(self.eq.len());
        let mut out = Vec::new();
        for subset in combinations(rows.len(), free) {
            let system: Vec<&(Vec<f64>, f64)> =
                self.eq.iter().chain(subset.iter().map(|&i| &rows[i])).collect();
            if system.len() != self.n {
                continue;
            }
            let a = DMatrix::from_fn(self.n, self.n, |r, c| system[r].0[c]);
            let b = DVector::from_fn(self.n, |r, _| system[r].1);
            let Some(x) = a.clone().lu().solve(&b) else {
                continue;
            };
            if (&a * &x - &b).amax() > 1e-9 || x.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let x: Vec<f64> = x.iter().copied().collect();
            if self.contains(&x) {
                out.push(x);
            }
        }
        out
    }

    /// `(min, max)` of `c·x`, or `None` when empty.
    pub fn extremes(&self, c: &[f64]) -> Option<(f64, f64)> {
        extremes_over(&self.vertices(), c)
    }
}

pub fn extremes_over(vertices: &[Vec<f64>], c: &[f64]) -> Option<(f64, f64)> {
    vertices
        .iter()
        .map(|x| x.iter().zip(c).map(|(a, b)| a * b).sum::<f64>())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((f64::min(lo, v), f64::max(hi, v))),
        })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Weights on the simplex with `floor ≤ wᵢ ≤ cap`.
pub fn weight_box(n0: usize, floor: f64, cap: f64) -> Polytope {
    let mut p = Polytope::new(n0);
    p.bounds(floor, cap);
    p.eq(vec![1.0; n0], 1.0);
    p
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Fraction of `xs` at or below `y`.
pub fn frac_le(xs: &[f64], y: f64) -> f64 {
    xs.iter().filter(|&&x| x <= y).count() as f64 / xs.len() as f64
}

pub fn indicator_row(xs: &[f64], y: f64) -> Vec<f64> {
    xs.iter().map(|&x| if x <= y { 1.0 } else { 0.0 }).collect()
}

/// Evaluation pairs `(y, level)` meaning `|Σ_{Y0ᵢ ≤ y} wᵢ − level| ≤ δ` for
/// each candidate shift.
pub fn ks_patterns(pooled: &[f64], controls: &[f64], treated: &[f64], m: usize, exact: bool) -> Vec<Vec<(f64, f64)>> {
    let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range == 0.0 {
        return vec![exact_pairs(controls, treated, 0.0)];
    }
    let eps = range / m as f64;
    (0..=2 * m)
        .map(|j| {
            let c = (j as f64 - m as f64) * eps;
            if exact {
                exact_pairs(controls, treated, c)
            } else {
                (0..=2 * m)
                    .map(|k| {
                        let y = lo + k as f64 * eps;
                        let z = lo + ((j + k) as f64 - m as f64) * eps;
                        (y, frac_le(treated, z))
                    })
                    .collect()
            }
        })
        .collect()
}

fn exact_pairs(controls: &[f64], treated: &[f64], c: f64) -> Vec<(f64, f64)> {
    controls
        .iter()
        .map(|&v| (v, frac_le(treated, v + c)))
        .chain(treated.iter().map(|&a| (a - c, frac_le(treated, a))))
        .collect()
}

/// Adds the two-sided KS rows of one shift pattern.
pub fn add_ks_rows(p: &mut Polytope, controls: &[f64], pairs: &[(f64, f64)], delta: f64) {
    for &(y, level) in pairs {
        let row = indicator_row(controls, y);
        p.le(row.clone(), level + delta);
        p.ge(row, level - delta);
    }
}

/// Enumerates every 0/1 shift-selection pattern with exactly one active
/// shift and returns `(min, max)` of the counterfactual mean over the union
/// of the per-pattern polytopes.
pub fn distributional_oracle(
    controls: &[f64],
    treated: &[f64],
    gamma: f64,
    delta: f64,
    m: usize,
    exact: bool,
    band: Option<(f64, f64)>,
) -> Option<(f64, f64)> {
    let pooled: Vec<f64> = controls.iter().chain(treated).copied().collect();
    distributional_oracle_pooled(&pooled, controls, treated, gamma, delta, m, exact, band)
}

/// [`distributional_oracle`] with the shift grid built from `pooled`.
#[allow(clippy::too_many_arguments)]
pub fn distributional_oracle_pooled(
    pooled: &[f64],
    controls: &[f64],
    treated: &[f64],
    gamma: f64,
    delta: f64,
    m: usize,
    exact: bool,
    band: Option<(f64, f64)>,
) -> Option<(f64, f64)> {
    let patterns = ks_patterns(pooled, controls, treated, m, exact);
    let n0 = controls.len();
    let width = patterns.len();
    let mut acc: Option<(f64, f64)> = None;
    for mask in 0u32..(1 << width) {
        if mask.count_ones() as usize != width - 1 {
            continue;
        }
        let j = (0..width).find(|&b| mask & (1 << b) == 0).unwrap();
        let mut p = weight_box(n0, 0.0, gamma / n0 as f64);
        add_ks_rows(&mut p, controls, &patterns[j], delta);
        if let Some((lo, hi)) = band {
            p.le(controls.to_vec(), hi);
            p.ge(controls.to_vec(), lo);
        }
        if let Some((a, b)) = p.extremes(controls) {
            acc = Some(match acc {
                None => (a, b),
                Some((x, y)) => (x.min(a), y.max(b)),
            });
        }
    }
    acc
}

/// Greedy-free marginal oracle: `(min, max)` counterfactual mean over the box.
pub fn marginal_oracle(controls: &[f64], gamma: f64, floor: f64) -> (f64, f64) {
    let n0 = controls.len();
    weight_box(n0, floor, gamma / n0 as f64)
        .extremes(controls)
        .expect("the uniform weights are always feasible")
}

/// Outcomes drawn from a small lattice so ties are common.
pub fn lattice_sample(rng: &mut impl Rng, n: usize, levels: i32) -> Vec<f64> {
    (0..n)
        .map(|_| rng.gen_range(0..levels) as f64 * 0.5 - 1.0)
        .collect()
}

pub fn arms(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    (data.treated_outcomes(), data.control_outcomes())
}
