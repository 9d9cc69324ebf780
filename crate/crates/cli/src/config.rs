use std::path::Path;

use epinode::data_io::{CsvSpec, DatasetSpec};
use epinode::decomposition::{ControlPolicy, Method};
use epinode::evaluation::AblationPlan;
use epinode::latent_model::LatentVariant;
use epinode::mechanistic::{SyntheticConfig, SyntheticKind};
use epinode::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::args::{DatasetArgs, ModelArgs};
use crate::error::Failure;

/// File-level configuration; every field is optional in the JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub dataset: Option<DatasetSpec>,
    pub split: f64,
    pub train: TrainConfig,
    pub splits: Vec<f64>,
    pub seeds: Vec<u64>,
    pub ablation: AblationPlan,
    pub jobs: usize,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            split: 0.6,
            train: TrainConfig::default(),
            splits: vec![0.3, 0.6],
            seeds: vec![0, 1, 2],
            ablation: AblationPlan::default(),
            jobs: 1,
        }
    }
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }
}

pub fn parse_kind(name: &str) -> Result<SyntheticKind, Failure> {
    SyntheticKind::parse(name).ok_or_else(|| {
        Failure::Usage(format!("unknown synthetic kind {name:?}; expected sirs_fixed, sirs_varying, sir or seirs"))
    })
}

pub fn parse_method(name: &str) -> Result<Method, Failure> {
    Method::parse(name).ok_or_else(|| Failure::Usage(format!("unknown method {name:?}; expected vmd, ma or stl")))
}

pub fn parse_variant(name: &str) -> Result<LatentVariant, Failure> {
    match name.to_ascii_lowercase().as_str() {
        "3ode" | "per_component" => Ok(LatentVariant::PerComponent),
        "1ode" | "single" => Ok(LatentVariant::Single),
        _ => Err(Failure::Usage(format!("unknown variant {name:?}; expected 3ode or 1ode"))),
    }
}

pub fn parse_delay(name: &str) -> Result<bool, Failure> {
    match name {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(Failure::Usage(format!("delay must be on or off, got {name:?}"))),
    }
}

fn parse_policy(name: &str) -> Result<ControlPolicy, Failure> {
    match name {
        "causal" => Ok(ControlPolicy::Causal),
        "paper-faithful" | "full-series" => Ok(ControlPolicy::PaperFaithful),
        _ => Err(Failure::Usage(format!("unknown policy {name:?}; expected causal or paper-faithful"))),
    }
}

/// Dataset from flags over the config file; synthetic `sirs_fixed` when neither names one.
pub fn resolve_dataset(cfg: Option<DatasetSpec>, args: &DatasetArgs) -> Result<DatasetSpec, Failure> {
    let mut spec = match (&args.dataset, cfg) {
        (None, Some(spec)) => spec,
        (None, None) => DatasetSpec::Synthetic(SyntheticConfig::for_kind(SyntheticKind::SirsFixed)),
        (Some(name), cfg) => match SyntheticKind::parse(name) {
            Some(kind) => match cfg {
                Some(DatasetSpec::Synthetic(c)) if c.kind == kind => DatasetSpec::Synthetic(c),
                _ => DatasetSpec::Synthetic(SyntheticConfig::for_kind(kind)),
            },
            None => DatasetSpec::Csv(CsvSpec {
                path: name.into(),
                value_column: "value".into(),
                time_column: None,
                population_scale: None,
            }),
        },
    };
    match &mut spec {
        DatasetSpec::Csv(csv) => {
            if let Some(c) = &args.column {
                csv.value_column = c.clone();
            }
            if let Some(t) = &args.time_column {
                csv.time_column = Some(t.clone());
            }
            if let Some(s) = args.scale {
                csv.population_scale = Some(s);
            }
        }
        DatasetSpec::Synthetic(_) => {
            if args.column.is_some() || args.time_column.is_some() || args.scale.is_some() {
                return Err(Failure::Usage("--column, --time-column and --scale apply to CSV datasets only".into()));
            }
        }
    }
    Ok(spec)
}

pub fn apply_model_args(cfg: &mut TrainConfig, args: &ModelArgs) -> Result<(), Failure> {
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.learning_rate = lr;
    }
    if let Some(c) = args.components {
        *cfg = cfg.clone().with_components(c);
    }
    if let Some(v) = &args.variant {
        cfg.model.variant = parse_variant(v)?;
    }
    if args.no_delay {
        cfg.model.delay.enabled = false;
    }
    if let Some(m) = &args.method {
        cfg.decomposition.method = parse_method(m)?;
    }
    if let Some(p) = &args.policy {
        cfg.policy = parse_policy(p)?;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))
}
