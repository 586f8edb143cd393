//! Command dispatch.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Result};
use drci::extensions::{cic_att_bound, did_att_bound, iv_att_bound};
use drci::sensitivity::{atc_bound, att_bound, BoundResult, Direction};
use drci::synthetic::{run_monte_carlo, BiasTable, MonteCarloConfig, Scenario};
use drci::Dataset;

use crate::config::{Command, RunConfig, SweepTarget};
use crate::input::{load_csv, log_transform};
use crate::report::Report;

/// What a command produced, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Report(Report),
    Sweep(String),
    Simulation(BiasTable),
}

impl Output {
    pub fn render(&self) -> String {
        match self {
            Output::Report(r) => r.to_json(),
            Output::Sweep(csv) => csv.clone(),
            Output::Simulation(t) => t.to_csv(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Output::Report(r) => r.exit_code(),
            _ => 0,
        }
    }
}

pub fn load_input(config: &RunConfig) -> Result<Dataset> {
    let path = config
        .input
        .as_deref()
        .ok_or_else(|| anyhow!("no input file given"))?;
    let data = load_csv(path, &config.columns)?;
    if config.log_outcome {
        log_transform(&data, config.log_offset)
    } else {
        Ok(data)
    }
}

fn bound(data: &Dataset, target: SweepTarget, config: &RunConfig) -> Result<BoundResult> {
    let s = &config.sensitivity;
    Ok(match target {
        SweepTarget::Att => att_bound(data, config.model, s)?,
        SweepTarget::Atc => atc_bound(data, config.model, s)?,
        SweepTarget::Did => did_att_bound(data, s)?,
        SweepTarget::Cic => cic_att_bound(data, s)?,
        SweepTarget::Iv => iv_att_bound(data, s)?,
    })
}

pub fn run(config: &RunConfig) -> Result<Output> {
    let start = Instant::now();
    let target = match config.command {
        Command::Att => SweepTarget::Att,
        Command::Atc => SweepTarget::Atc,
        Command::Did => SweepTarget::Did,
        Command::Cic => SweepTarget::Cic,
        Command::Iv => SweepTarget::Iv,
        Command::Sweep => {
            let data = load_input(config)?;
            return Ok(Output::Sweep(sweep(&data, config, &config.gammas, &config.deltas)?));
        }
        Command::Simulate => return simulate(config).map(Output::Simulation),
    };
    let data = load_input(config)?;
    let result = bound(&data, target, config)?;
    let mut report = Report::new(&result, config, (data.n(), data.n1(), data.n0()));
    if config.timing {
        report.runtime_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(Output::Report(report))
}

/// Both directions at every `(Γ, δ)`, `Γ` varying slowest.
pub fn sweep(data: &Dataset, config: &RunConfig, gammas: &[f64], deltas: &[f64]) -> Result<String> {
    let mut out = String::from("gamma,delta,lower,upper,se_lower,se_upper,status\n");
    let cell = |x: f64| if x.is_finite() { x.to_string() } else { String::new() };
    for &gamma in gammas {
        for &delta in deltas {
            let mut cfg = config.clone();
            cfg.sensitivity.gamma = gamma;
            cfg.sensitivity.delta = delta;
            cfg.sensitivity.direction = Direction::Lower;
            let lo = bound(data, config.sweep_target, &cfg)?;
            cfg.sensitivity.direction = Direction::Upper;
            let hi = bound(data, config.sweep_target, &cfg)?;
            let status = if lo.is_optimal() && hi.is_optimal() {
                "optimal"
            } else {
                "infeasible"
            };
            let _ = writeln!(
                out,
                "{gamma},{delta},{},{},{},{},{status}",
                cell(lo.estimate),
                cell(hi.estimate),
                cell(lo.se),
                cell(hi.se)
            );
        }
    }
    Ok(out)
}

fn simulate(config: &RunConfig) -> Result<BiasTable> {
    let scenario = match (config.scenario, config.tau1, config.tau2, config.p) {
        (_, Some(t1), Some(t2), Some(p)) => Scenario::new(t1, t2, p)?,
        (Some(k), None, None, None) => {
            Scenario::reference(k).ok_or_else(|| anyhow!("unknown scenario {k}; use 1, 2 or 3"))?
        }
        (None, None, None, None) => Scenario::reference(1).expect("scenario 1"),
        _ => return Err(anyhow!("give either --scenario or all of --tau1, --tau2, --p")),
    };
    let s = &config.sensitivity;
    let gammas = if config.gammas.is_empty() {
        MonteCarloConfig::default().gammas
    } else {
        config.gammas.clone()
    };
    let mc = MonteCarloConfig {
        n: config.n,
        replications: config.replications,
        models: config.models.clone(),
        gammas,
        delta: s.delta,
        m: s.m,
        seed: config.seed,
        ks_mode: s.ks_mode,
        ..MonteCarloConfig::default()
    };
    Ok(run_monte_carlo(&scenario, &mc)?)
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
