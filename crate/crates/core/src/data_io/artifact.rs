use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::fs::write_atomic;
use super::{sha256_hex, Dataset, DatasetSpec};
use crate::diffcore::WeightSet;
use crate::latent_model::{EpiNodeModel, Rollout};
use crate::training::{TrainConfig, TrainHistory};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Trajectories over the full grid, in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastTrajectories {
    pub times: Vec<f64>,
    pub observed: Vec<f64>,
    /// Compartment fractions per grid point.
    pub states: Vec<Vec<f64>>,
    pub infected: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
}

impl ForecastTrajectories {
    pub fn from_rollout(rollout: &Rollout, observed: &[f64]) -> Self {
        let [beta, gamma, delta] = rollout.rate_series();
        Self {
            times: rollout.times.clone(),
            observed: observed.to_vec(),
            states: rollout.states.iter().map(|s| s.values().to_vec()).collect(),
            infected: rollout.infected(),
            beta,
            gamma,
            delta,
        }
    }
}

/// Everything needed to reproduce, inspect or continue a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub schema_version: u32,
    pub created_unix: u64,
    pub dataset: DatasetSpec,
    pub data_fingerprint: String,
    /// Raw value = normalized value * scale.
    pub scale: f64,
    pub split_fraction: f64,
    pub t_split: usize,
    pub train: TrainConfig,
    pub weights: WeightSet,
    pub history: TrainHistory,
    pub forecast: ForecastTrajectories,
    pub metrics: BTreeMap<String, f64>,
    /// Controls were built from observations past the split.
    pub leaked: bool,
}

impl RunArtifact {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dataset: &Dataset,
        split_fraction: f64,
        t_split: usize,
        train: TrainConfig,
        model: &EpiNodeModel,
        history: TrainHistory,
        forecast: ForecastTrajectories,
        leaked: bool,
    ) -> Self {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            schema_version: SCHEMA_VERSION,
            created_unix,
            dataset: dataset.spec.clone(),
            data_fingerprint: dataset.fingerprint.clone(),
            scale: dataset.scale,
            split_fraction,
            t_split,
            train,
            weights: model.weights().clone(),
            history,
            forecast,
            metrics: BTreeMap::new(),
            leaked,
        }
    }

    pub fn model(&self) -> Result<EpiNodeModel> {
        EpiNodeModel::from_weights(self.train.model.clone(), self.weights.clone())
    }

    /// Fail unless `dataset` is the data this run was trained on.
    pub fn verify_fingerprint(&self, dataset: &Dataset) -> Result<()> {
        if self.data_fingerprint != dataset.fingerprint {
            return Err(Error::Fingerprint {
                expected: self.data_fingerprint.clone(),
                actual: dataset.fingerprint.clone(),
            });
        }
        Ok(())
    }
}

/// Hash of the artifact with timestamps and wall-clock time zeroed.
pub fn artifact_fingerprint(artifact: &RunArtifact) -> Result<String> {
    let mut stable = artifact.clone();
    stable.created_unix = 0;
    stable.history.wall_clock_secs = 0.0;
    Ok(sha256_hex(serde_json::to_string(&stable)?.as_bytes()))
}

pub fn save_run(artifact: &RunArtifact, path: &Path, overwrite: bool) -> Result<()> {
    let text = serde_json::to_string_pretty(artifact)?;
    write_atomic(path, text.as_bytes(), overwrite)
}

pub fn load_run(path: &Path) -> Result<RunArtifact> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |e: serde_json::Error| Error::Parse(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    let found = value.get("schema_version").and_then(|v| v.as_u64()).ok_or_else(|| {
        Error::Parse(format!("{}: missing schema_version", path.display()))
    })?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::Schema {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    let artifact: RunArtifact = serde_json::from_value(value).map_err(parse_err)?;
    artifact.weights.validate()?;
    Ok(artifact)
}
