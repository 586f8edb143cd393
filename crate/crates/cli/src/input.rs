//! CSV ingestion.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use drci::{Dataset, Unit};
use serde::{Deserialize, Serialize};

/// Which CSV columns hold which fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub outcome: String,
    pub treatment: String,
    pub baseline: Option<String>,
    pub instrument: Option<String>,
    /// Every column whose name starts with this prefix is a covariate, in
    /// header order.
    pub covariate_prefix: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            outcome: "y".into(),
            treatment: "t".into(),
            baseline: None,
            instrument: None,
            covariate_prefix: None,
        }
    }
}

pub fn load_csv(path: &Path, columns: &ColumnMap) -> Result<Dataset> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_csv(file, columns).with_context(|| format!("reading {}", path.display()))
}

/// Parses CSV text with a header row. Row numbers in errors count data rows
/// from 1.
pub fn read_csv(reader: impl std::io::Read, columns: &ColumnMap) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("missing column `{name}`"))
    };
    let y_col = find(&columns.outcome)?;
    let t_col = find(&columns.treatment)?;
    let b_col = columns.baseline.as_deref().map(find).transpose()?;
    let z_col = columns.instrument.as_deref().map(find).transpose()?;
    let x_cols: Vec<usize> = match &columns.covariate_prefix {
        Some(prefix) => {
            let cols: Vec<usize> = headers
                .iter()
                .enumerate()
                .filter(|(_, h)| h.starts_with(prefix.as_str()))
                .map(|(i, _)| i)
                .collect();
            if cols.is_empty() {
                bail!("no column starts with covariate prefix `{prefix}`");
            }
            cols
        }
        None => Vec::new(),
    };

    let mut units = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record.with_context(|| format!("row {row}"))?;
        let field = |col: usize| -> Result<&str> {
            match record.get(col) {
                Some(s) if !s.is_empty() => Ok(s),
                _ => Err(anyhow!("row {row}: missing value in column `{}`", &headers[col])),
            }
        };
        let number = |col: usize| -> Result<f64> {
            let s = field(col)?;
            let v: f64 = s
                .parse()
                .map_err(|_| anyhow!("row {row}: `{s}` in column `{}` is not a number", &headers[col]))?;
            if !v.is_finite() {
                bail!("row {row}: non-finite value in column `{}`", &headers[col]);
            }
            Ok(v)
        };
        let binary = |col: usize| -> Result<bool> {
            match field(col)? {
                "0" => Ok(false),
                "1" => Ok(true),
                s => bail!("row {row}: `{s}` in column `{}` must be 0 or 1", &headers[col]),
            }
        };
        let mut unit = Unit::new(number(y_col)?, binary(t_col)?);
        if let Some(c) = b_col {
            unit = unit.with_baseline(number(c)?);
        }
        if let Some(c) = z_col {
            unit = unit.with_instrument(binary(c)?);
        }
        if !x_cols.is_empty() {
            unit = unit.with_covariates(x_cols.iter().map(|&c| number(c)).collect::<Result<_>>()?);
        }
        units.push(unit);
    }
    Ok(Dataset::new(units)?)
}

/// `y ↦ ln(y + offset)` on outcomes and baselines.
pub fn log_transform(data: &Dataset, offset: f64) -> Result<Dataset> {
    let smallest = data
        .units()
        .iter()
        .flat_map(|u| std::iter::once(u.y).chain(u.baseline))
        .fold(f64::INFINITY, f64::min);
    if !(smallest + offset > 0.0) {
        bail!("log transform needs outcome + offset > 0; smallest outcome is {smallest}, offset {offset}");
    }
    Ok(data.map_outcomes(|y| (y + offset).ln())?)
}
