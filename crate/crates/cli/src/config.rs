//! Run configuration: a JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use drci::extensions::DEFAULT_M_IV;
use drci::sensitivity::{Direction, MarginalFloor, Model, SensitivityConfig};
use drci::synthetic::MonteCarloConfig;
use drci::KsMode;
use serde::{Deserialize, Serialize};

use crate::input::ColumnMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Att,
    Atc,
    Did,
    Cic,
    Iv,
    Simulate,
    Sweep,
}

impl Command {
    fn needs_distributional(self) -> bool {
        matches!(self, Command::Did | Command::Cic | Command::Iv)
    }
}

/// What `sweep` evaluates in each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    #[default]
    Att,
    Atc,
    Did,
    Cic,
    Iv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: Command,
    pub model: Model,
    #[serde(flatten)]
    pub sensitivity: SensitivityConfig,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub columns: ColumnMap,
    pub seed: u64,
    pub log_outcome: bool,
    pub log_offset: f64,
    pub emit_weights: bool,
    /// Include wall-clock time in the report (makes reports run-dependent).
    pub timing: bool,
    /// Sweep grids and the per-cell target.
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub sweep_target: SweepTarget,
    /// Simulation settings: a reference design number or explicit parameters.
    pub scenario: Option<usize>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub p: Option<f64>,
    pub n: usize,
    pub replications: usize,
    pub models: Vec<Model>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Att,
            model: Model::Distributional,
            sensitivity: SensitivityConfig::default(),
            input: None,
            output: None,
            columns: ColumnMap::default(),
            seed: 0,
            log_outcome: false,
            log_offset: 1.0,
            emit_weights: false,
            timing: false,
            gammas: Vec::new(),
            deltas: Vec::new(),
            sweep_target: SweepTarget::Att,
            scenario: None,
            tau1: None,
            tau2: None,
            p: None,
            n: 100,
            replications: 1000,
            models: vec![Model::Distributional, Model::Marginal],
        }
    }
}

/// Values given on the command line; `None` leaves the file value alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<Model>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda_tv: Option<f64>,
    pub m: Option<usize>,
    pub direction: Option<Direction>,
    pub ks_mode: Option<KsMode>,
    pub balance_lambda: Option<f64>,
    pub balance_epsilon: Option<f64>,
    pub marginal_floor: Option<MarginalFloor>,
    pub seed: Option<u64>,
    pub log_outcome: bool,
    pub log_offset: Option<f64>,
    pub emit_weights: bool,
    pub timing: bool,
    pub outcome_col: Option<String>,
    pub treatment_col: Option<String>,
    pub baseline_col: Option<String>,
    pub instrument_col: Option<String>,
    pub covariate_prefix: Option<String>,
    pub gammas: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    pub sweep_target: Option<SweepTarget>,
    pub scenario: Option<usize>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub models: Option<Vec<Model>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Builds the effective configuration: defaults, then `file`, then flags.
    /// Unless set explicitly, `iv` uses a coarser grid and `simulate` the
    /// reference KS radius of the simulation design.
    pub fn resolve(command: Command, file: Option<&Path>, flags: Overrides) -> Result<Self> {
        let (mut cfg, keys) = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let raw: serde_json::Value = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                let keys: Vec<String> = raw
                    .as_object()
                    .map(|o| o.keys().cloned().collect())
                    .unwrap_or_default();
                let cfg: RunConfig = serde_json::from_value(raw)
                    .with_context(|| format!("parsing {}", path.display()))?;
                (cfg, keys)
            }
            None => (RunConfig::default(), Vec::new()),
        };
        let in_file = |k: &str| keys.iter().any(|x| x == k);
        cfg.command = command;
        if command == Command::Iv && !in_file("m") && flags.m.is_none() {
            cfg.sensitivity.m = DEFAULT_M_IV;
        }
        if command == Command::Simulate && !in_file("delta") && flags.delta.is_none() {
            cfg.sensitivity.delta = MonteCarloConfig::default().delta;
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        fn set<T>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        let s = &mut self.sensitivity;
        set(&mut self.model, o.model);
        if o.input.is_some() {
            self.input = o.input;
        }
        if o.output.is_some() {
            self.output = o.output;
        }
        set(&mut s.gamma, o.gamma);
        set(&mut s.delta, o.delta);
        if o.epsilon.is_some() {
            s.epsilon = o.epsilon;
        }
        set(&mut s.lambda_tv, o.lambda_tv);
        set(&mut s.m, o.m);
        set(&mut s.direction, o.direction);
        set(&mut s.ks_mode, o.ks_mode);
        set(&mut s.balance_lambda, o.balance_lambda);
        if o.balance_epsilon.is_some() {
            s.balance_epsilon = o.balance_epsilon;
        }
        set(&mut s.marginal_floor, o.marginal_floor);
        set(&mut self.seed, o.seed);
        self.log_outcome |= o.log_outcome;
        set(&mut self.log_offset, o.log_offset);
        self.emit_weights |= o.emit_weights;
        self.timing |= o.timing;
        set(&mut self.columns.outcome, o.outcome_col);
        set(&mut self.columns.treatment, o.treatment_col);
        if o.baseline_col.is_some() {
            self.columns.baseline = o.baseline_col;
        }
        if o.instrument_col.is_some() {
            self.columns.instrument = o.instrument_col;
        }
        if o.covariate_prefix.is_some() {
            self.columns.covariate_prefix = o.covariate_prefix;
        }
        set(&mut self.gammas, o.gammas);
        set(&mut self.deltas, o.deltas);
        set(&mut self.sweep_target, o.sweep_target);
        if o.scenario.is_some() {
            self.scenario = o.scenario;
        }
        if o.tau1.is_some() {
            self.tau1 = o.tau1;
        }
        if o.tau2.is_some() {
            self.tau2 = o.tau2;
        }
        if o.p.is_some() {
            self.p = o.p;
        }
        set(&mut self.n, o.n);
        set(&mut self.replications, o.replications);
        set(&mut self.models, o.models);
    }

    pub fn validate(&self) -> Result<()> {
        self.sensitivity.validate()?;
        let target_needs = match self.command {
            Command::Sweep => matches!(
                self.sweep_target,
                SweepTarget::Did | SweepTarget::Cic | SweepTarget::Iv
            ),
            c => c.needs_distributional(),
        };
        if target_needs && self.model != Model::Distributional {
            bail!("{:?} requires the distributional model", self.command);
        }
        if self.command != Command::Simulate && self.input.is_none() {
            bail!("--input is required for {:?}", self.command);
        }
        if self.command == Command::Sweep && (self.gammas.is_empty() || self.deltas.is_empty()) {
            bail!("sweep needs nonempty --gammas and --deltas");
        }
        if self.command == Command::Simulate && self.models.is_empty() {
            bail!("simulate needs at least one model");
        }
        Ok(())
    }
}
