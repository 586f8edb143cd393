use std::path::PathBuf;

use clap::Parser;
use drci::sensitivity::{Direction, MarginalFloor, Model};
use drci::KsMode;

use crate::config::{Command, Overrides, SweepTarget};

fn parse_model(s: &str) -> Result<Model, String> {
    match s {
        "marginal" => Ok(Model::Marginal),
        "distributional" => Ok(Model::Distributional),
        "tv" => Ok(Model::Tv),
        _ => Err(format!("unknown model `{s}` (marginal, distributional, tv)")),
    }
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "lower" => Ok(Direction::Lower),
        "upper" => Ok(Direction::Upper),
        _ => Err(format!("unknown direction `{s}` (lower, upper)")),
    }
}

fn parse_ks_mode(s: &str) -> Result<KsMode, String> {
    match s {
        "grid" => Ok(KsMode::Grid),
        "exact" | "exact_atoms" => Ok(KsMode::ExactAtoms),
        _ => Err(format!("unknown KS mode `{s}` (grid, exact_atoms)")),
    }
}

fn parse_floor(s: &str) -> Result<MarginalFloor, String> {
    match s {
        "reciprocal" => Ok(MarginalFloor::Reciprocal),
        "zero" => Ok(MarginalFloor::Zero),
        _ => Err(format!("unknown floor `{s}` (reciprocal, zero)")),
    }
}

/// Sharp bounds on average treatment effects under distributional
/// sensitivity models.
///
/// Settings come from built-in defaults, then the `--config` JSON file, then
/// flags; later sources win.
#[derive(Debug, Parser)]
#[command(name = "drci", version)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the result here (atomically) instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Mean-difference slack for did, cic and iv.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Total-variation radius for the tv model.
    #[arg(long)]
    pub lambda_tv: Option<f64>,
    /// Shift-grid resolution (2m + 1 shifts).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_parser = parse_direction)]
    pub direction: Option<Direction>,
    #[arg(long, value_parser = parse_ks_mode)]
    pub ks_mode: Option<KsMode>,
    /// Penalty on covariate imbalance.
    #[arg(long)]
    pub balance_lambda: Option<f64>,
    /// Cap on covariate imbalance (replaces the penalty).
    #[arg(long)]
    pub balance_epsilon: Option<f64>,
    #[arg(long, value_parser = parse_floor)]
    pub marginal_floor: Option<MarginalFloor>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace outcomes (and baselines) by ln(y + offset) before solving.
    #[arg(long)]
    pub log_outcome: bool,
    #[arg(long)]
    pub log_offset: Option<f64>,
    /// Include the optimal weights in the report.
    #[arg(long)]
    pub emit_weights: bool,
    /// Include wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub outcome_col: Option<String>,
    #[arg(long)]
    pub treatment_col: Option<String>,
    #[arg(long)]
    pub baseline_col: Option<String>,
    #[arg(long)]
    pub instrument_col: Option<String>,
    #[arg(long)]
    pub covariate_prefix: Option<String>,
    /// Comma-separated Γ values for sweep and simulate.
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Comma-separated δ values for sweep.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Bound evaluated in each sweep cell.
    #[arg(long, value_enum)]
    pub target: Option<SweepTarget>,
    /// Reference simulation design (1, 2 or 3).
    #[arg(long)]
    pub scenario: Option<usize>,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Sample size per simulated dataset.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Comma-separated models for simulate.
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    pub models: Option<Vec<Model>>,
}

impl Args {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model,
            input: self.input.clone(),
            output: self.output.clone(),
            gamma: self.gamma,
            delta: self.delta,
            epsilon: self.epsilon,
            lambda_tv: self.lambda_tv,
            m: self.m,
            direction: self.direction,
            ks_mode: self.ks_mode,
            balance_lambda: self.balance_lambda,
            balance_epsilon: self.balance_epsilon,
            marginal_floor: self.marginal_floor,
            seed: self.seed,
            log_outcome: self.log_outcome,
            log_offset: self.log_offset,
            emit_weights: self.emit_weights,
            timing: self.timing,
            outcome_col: self.outcome_col.clone(),
            treatment_col: self.treatment_col.clone(),
            baseline_col: self.baseline_col.clone(),
            instrument_col: self.instrument_col.clone(),
            covariate_prefix: self.covariate_prefix.clone(),
            gammas: self.gammas.clone(),
            deltas: self.deltas.clone(),
            sweep_target: self.target,
            scenario: self.scenario,
            tau1: self.tau1,
            tau2: self.tau2,
            p: self.p,
            n: self.n,
            replications: self.replications,
            models: self.models.clone(),
        }
    }
}
