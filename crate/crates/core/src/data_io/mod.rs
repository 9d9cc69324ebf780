//! Dataset ingestion, normalization bookkeeping and run-artifact persistence.

mod artifact;
mod fs;
mod table;

pub use artifact::{
    artifact_fingerprint, load_run, save_run, ForecastTrajectories, RunArtifact, SCHEMA_VERSION,
};
pub use fs::{write_atomic, PathLock};
pub use table::{read_series_csv, CsvSeries, Gap};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mechanistic::{EpiState, RateTriple, SyntheticConfig, SyntheticKind};
use crate::{Error, Result};

/// Headroom factor applied to the series maximum when no population scale is given.
pub const AUTO_SCALE_HEADROOM: f64 = 1.25;

/// Observed infected fractions on an increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Input(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("time grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("series contains non-finite values".into()));
        }
        Ok(Self { times, values })
    }

    /// Unit-spaced grid starting at zero.
    pub fn uniform(values: Vec<f64>) -> Self {
        let times = (0..values.len()).map(|i| i as f64).collect();
        Self { times, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSpec {
    pub path: PathBuf,
    pub value_column: String,
    #[serde(default)]
    pub time_column: Option<String>,
    /// Divide raw counts by this; defaults to 1.25 times the series maximum.
    #[serde(default)]
    pub population_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic(SyntheticConfig),
    Csv(CsvSpec),
}

impl DatasetSpec {
    pub fn synthetic(kind: SyntheticKind) -> Self {
        DatasetSpec::Synthetic(SyntheticConfig::for_kind(kind))
    }

    pub fn csv(path: impl Into<PathBuf>, value_column: impl Into<String>) -> Self {
        DatasetSpec::Csv(CsvSpec {
            path: path.into(),
            value_column: value_column.into(),
            time_column: None,
            population_scale: None,
        })
    }

    /// Short name for reports.
    pub fn label(&self) -> String {
        match self {
            DatasetSpec::Synthetic(cfg) => cfg.kind.name().to_string(),
            DatasetSpec::Csv(spec) => spec.path.display().to_string(),
        }
    }
}

/// Generator ground truth attached to synthetic datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub infected: Vec<f64>,
    pub states: Vec<EpiState>,
    /// `rates[i]` drives the step from `i` to `i + 1`.
    pub rates: Vec<RateTriple>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub series: TimeSeries,
    /// Raw value = normalized value * scale.
    pub scale: f64,
    /// Row labels from the time column, when one was read.
    pub labels: Option<Vec<String>>,
    pub gaps: Vec<Gap>,
    pub truth: Option<GroundTruth>,
    /// SHA-256 of the source bytes (CSV) or of the generated values (synthetic).
    pub fingerprint: String,
}

impl Dataset {
    pub fn denormalize(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v * self.scale).collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn values_fingerprint(label: &str, values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(label.as_bytes());
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Divide by `scale`, or by 1.25 times the maximum when `scale` is `None`.
pub fn normalize(raw: &[f64], scale: Option<f64>) -> Result<(Vec<f64>, f64)> {
    if let Some(pos) = raw.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Input(format!("value {} at row {pos} is not a nonnegative number", raw[pos])));
    }
    let scale = match scale {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::Input(format!("population scale must be positive, got {s}"))),
        None => {
            let max = raw.iter().copied().fold(0.0, f64::max);
            if max == 0.0 {
                return Err(Error::Input("series is identically zero; cannot choose a scale".into()));
            }
            AUTO_SCALE_HEADROOM * max
        }
    };
    let values: Vec<f64> = raw.iter().map(|v| v / scale).collect();
    if let Some(pos) = values.iter().position(|v| *v >= 1.0) {
        return Err(Error::Input(format!(
            "value {} at row {pos} is not below the population scale {scale}",
            raw[pos]
        )));
    }
    Ok((values, scale))
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    match spec {
        DatasetSpec::Synthetic(cfg) => {
            let generated = cfg.generate()?;
            let traj = generated.trajectory;
            let series = TimeSeries::new(traj.times.clone(), generated.observed)?;
            let fingerprint = values_fingerprint(&serde_json::to_string(cfg)?, &series.values);
            Ok(Dataset {
                spec: spec.clone(),
                truth: Some(GroundTruth {
                    infected: traj.infected(),
                    states: traj.states,
                    rates: traj.rates,
                }),
                series,
                scale: 1.0,
                labels: None,
                gaps: Vec::new(),
                fingerprint,
            })
        }
        DatasetSpec::Csv(csv_spec) => {
            let bytes = std::fs::read(&csv_spec.path).map_err(|e| Error::io(&csv_spec.path, e))?;
            let table = read_series_csv(&bytes, &csv_spec.value_column, csv_spec.time_column.as_deref())?;
            let (values, scale) = normalize(&table.values, csv_spec.population_scale)?;
            for gap in &table.gaps {
                log::info!("filled {} missing value(s) starting at row {}", gap.len, gap.start);
            }
            Ok(Dataset {
                spec: spec.clone(),
                series: TimeSeries::uniform(values),
                scale,
                labels: table.labels,
                gaps: table.gaps,
                truth: None,
                fingerprint: sha256_hex(&bytes),
            })
        }
    }
}
