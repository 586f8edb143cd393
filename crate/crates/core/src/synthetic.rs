//! The simulation design with a binary unobserved confounder, and a Monte
//! Carlo harness measuring the conservatism of lower bounds.
//!
//! Each unit draws `u ~ Bern(p)` and `T ~ Bern(0.6u + 0.2)`, then
//! `Y = (1−u)(T−½)ν + u(T−½)η + θ + ε` with `ν ~ N(τ₁, 1)`, `η ~ N(τ₂, 1)`,
//! `θ ~ N(0, 2)` and `ε ~ N(0, 0.1)`. The ATT is
//! `(8pτ₂ + 2(1−p)τ₁) / (6p + 2)`.

use std::fmt::Write as _;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Unit};
use crate::distributions::KsMode;
use crate::error::{invalid, Result};
use crate::sensitivity::{att_bound, Direction, MarginalFloor, Model, SensitivityConfig, DEFAULT_M};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub tau1: f64,
    pub tau2: f64,
    pub p: f64,
}

impl Scenario {
    pub fn new(tau1: f64, tau2: f64, p: f64) -> Result<Self> {
        let s = Self { tau1, tau2, p };
        s.validate()?;
        Ok(s)
    }

    /// The three reference designs, numbered from 1.
    pub fn reference(k: usize) -> Option<Self> {
        let (tau1, tau2, p) = match k {
            1 => (2.0, 3.0, 0.5),
            2 => (3.0, 2.0, 0.5),
            3 => (2.0, 3.0, 0.8),
            _ => return None,
        };
        Some(Self { tau1, tau2, p })
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if !self.tau1.is_finite() || !self.tau2.is_finite() {
            return Err(invalid("effect parameters must be finite"));
        }
        Ok(())
    }
}

/// How the second parameter of the `θ` and `ε` normals is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// `N(0, 2)` has standard deviation 2.
    #[default]
    StdDev,
    /// `N(0, 2)` has variance 2.
    Variance,
}

impl NoiseScale {
    fn sd(self, param: f64) -> f64 {
        match self {
            NoiseScale::StdDev => param,
            NoiseScale::Variance => param.sqrt(),
        }
    }
}

/// `E[Y(1) − Y(0) | T = 1]`.
pub fn true_att(s: &Scenario) -> f64 {
    (8.0 * s.p * s.tau2 + 2.0 * (1.0 - s.p) * s.tau1) / (6.0 * s.p + 2.0)
}

/// `n` units from the design, reproducible from `seed`.
pub fn generate_scenario(s: &Scenario, n: usize, seed: u64) -> Result<Dataset> {
    generate_scenario_with(s, n, seed, NoiseScale::default())
}

pub fn generate_scenario_with(s: &Scenario, n: usize, seed: u64, scale: NoiseScale) -> Result<Dataset> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample(s, n, &mut rng, scale)
}

fn sample(s: &Scenario, n: usize, rng: &mut ChaCha20Rng, scale: NoiseScale) -> Result<Dataset> {
    s.validate()?;
    if n < 2 {
        return Err(invalid(format!("need at least two units, got {n}")));
    }
    let nu = Normal::new(s.tau1, 1.0).expect("unit sd");
    let eta = Normal::new(s.tau2, 1.0).expect("unit sd");
    let theta = Normal::new(0.0, scale.sd(2.0)).expect("positive sd");
    let noise = Normal::new(0.0, scale.sd(0.1)).expect("positive sd");
    let units = (0..n)
        .map(|_| {
            let u = if rng.gen::<f64>() < s.p { 1.0 } else { 0.0 };
            let treated = rng.gen::<f64>() < 0.6 * u + 0.2;
            let t = if treated { 0.5 } else { -0.5 };
            let y = (1.0 - u) * t * nu.sample(rng)
                + u * t * eta.sample(rng)
                + theta.sample(rng)
                + noise.sample(rng);
            Unit::new(y, treated)
        })
        .collect();
    Dataset::new(units)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub replications: usize,
    pub models: Vec<Model>,
    pub gammas: Vec<f64>,
    pub delta: f64,
    pub m: usize,
    pub seed: u64,
    pub ks_mode: KsMode,
    pub marginal_floor: MarginalFloor,
    pub noise_scale: NoiseScale,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n: 100,
            replications: 1000,
            models: vec![Model::Distributional, Model::Marginal],
            gammas: vec![2.0, 3.0, 5.0],
            delta: 0.1,
            m: DEFAULT_M,
            seed: 0,
            ks_mode: KsMode::Grid,
            marginal_floor: MarginalFloor::Zero,
            noise_scale: NoiseScale::StdDev,
        }
    }
}

/// One cell of a bias table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub model: Model,
    pub gamma: f64,
    pub n: usize,
    pub delta: f64,
    /// Mean of `lower bound − true ATT` over feasible replications.
    pub bias: f64,
    pub sd: f64,
    /// Replications that produced a bound.
    pub replications: usize,
    /// Replications where the model was infeasible or failed.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BiasTable {
    pub rows: Vec<BiasRow>,
}

impl BiasTable {
    pub const HEADER: &'static str = "model,gamma,n,delta,bias,sd,replications";

    pub fn get(&self, model: Model, gamma: f64) -> Option<&BiasRow> {
        self.rows.iter().find(|r| r.model == model && r.gamma == gamma)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let model = match r.model {
                Model::Marginal => "marginal",
                Model::Distributional => "distributional",
                Model::Tv => "tv",
            };
            let _ = writeln!(
                out,
                "{model},{},{},{},{},{},{}",
                r.gamma, r.n, r.delta, r.bias, r.sd, r.replications
            );
        }
        out
    }

    pub fn write_csv(&self, mut w: impl io::Write) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// Runs every model at every `Γ` (as the lower bound) on `replications`
/// independent samples. Replication `r` draws from stream `r` of a generator
/// keyed by `seed`, so the table does not depend on scheduling.
pub fn run_monte_carlo(s: &Scenario, config: &MonteCarloConfig) -> Result<BiasTable> {
    s.validate()?;
    if config.replications == 0 {
        return Err(invalid("need at least one replication"));
    }
    let cells: Vec<(Model, f64)> = config
        .models
        .iter()
        .flat_map(|&m| config.gammas.iter().map(move |&g| (m, g)))
        .collect();
    let truth = true_att(s);
    let solver_configs: Vec<SensitivityConfig> = cells
        .iter()
        .map(|&(_, gamma)| SensitivityConfig {
            gamma,
            delta: config.delta,
            m: config.m,
            ks_mode: config.ks_mode,
            marginal_floor: config.marginal_floor,
            direction: Direction::Lower,
            ..SensitivityConfig::default()
        })
        .collect();
    for c in &solver_configs {
        c.validate()?;
    }

    let draws: Vec<Vec<Option<f64>>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let data = sample(s, config.n, &mut rng, config.noise_scale)?;
            Ok(cells
                .iter()
                .zip(&solver_configs)
                .map(|(&(model, _), c)| {
                    att_bound(&data, model, c)
                        .ok()
                        .filter(|b| b.is_optimal())
                        .map(|b| b.estimate - truth)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let rows = cells
        .iter()
        .enumerate()
        .map(|(k, &(model, gamma))| {
            let errs: Vec<f64> = draws.iter().filter_map(|d| d[k]).collect();
            let (bias, sd) = mean_sd(&errs);
            BiasRow {
                model,
                gamma,
                n: config.n,
                delta: config.delta,
                bias,
                sd,
                replications: errs.len(),
                failures: config.replications - errs.len(),
            }
        })
        .collect();
    Ok(BiasTable { rows })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
