use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::BenchmarkReport;
use super::{align_applied_rates, mae, parameter_recovery, peak_errors, rmse, PeakErrors, RecoveryReport};
use crate::data_io::Dataset;
use crate::decomposition::Method;
use crate::latent_model::{rollout, LatentVariant};
use crate::training::{fit, split_index, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariantKind {
    /// Replays the scoring target; any nonzero error is a harness bug.
    Oracle,
    Model(TrainConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub kind: VariantKind,
}

impl Variant {
    pub fn oracle() -> Self {
        Self {
            name: "oracle".into(),
            kind: VariantKind::Oracle,
        }
    }

    pub fn model(name: impl Into<String>, cfg: TrainConfig) -> Self {
        Self {
            name: name.into(),
            kind: VariantKind::Model(cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    /// Training fractions of the series, each in (0, 1).
    pub splits: Vec<f64>,
    /// Each model variant is trained once per seed, overriding its own seed.
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    /// Worker threads.
    pub jobs: usize,
}

impl BenchmarkPlan {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.splits.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(Error::Input(format!("split fraction {s} is outside (0, 1)")));
        }
        if self.splits.is_empty() || self.seeds.is_empty() || self.variants.is_empty() {
            return Err(Error::Input("a benchmark needs at least one split, seed and variant".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Input("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScores {
    /// Forecast-window errors on I.
    pub rmse: f64,
    pub mae: f64,
    pub peak: PeakErrors,
    /// Applied rates over the whole grid, when ground truth exists.
    pub recovery: Option<RecoveryReport>,
    pub initial_loss: Option<f64>,
    pub best_loss: Option<f64>,
    pub leaked: bool,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok(CellScores),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub variant: String,
    pub split: f64,
    pub seed: u64,
    pub t_split: usize,
    pub outcome: CellOutcome,
}

impl CellReport {
    pub fn scores(&self) -> Option<&CellScores> {
        match &self.outcome {
            CellOutcome::Ok(s) => Some(s),
            CellOutcome::Failed { .. } => None,
        }
    }
}

/// RMSE, MAE and peak errors over `t_split..`.
pub fn score_forecast(predicted: &[f64], target: &[f64], t_split: usize) -> Result<(f64, f64, PeakErrors)> {
    if predicted.len() != target.len() || t_split >= target.len() {
        return Err(Error::Input(format!(
            "forecast of length {} cannot be scored against {} points split at {t_split}",
            predicted.len(),
            target.len()
        )));
    }
    let (p, t) = (&predicted[t_split..], &target[t_split..]);
    Ok((rmse(p, t)?, mae(p, t)?, peak_errors(predicted, target, t_split..target.len())?))
}

fn scoring_target(dataset: &Dataset) -> &[f64] {
    dataset
        .truth
        .as_ref()
        .map_or(&dataset.series.values, |t| &t.infected)
}

fn run_cell_inner(dataset: &Dataset, variant: &Variant, t_split: usize, seed: u64) -> Result<CellScores> {
    let target = scoring_target(dataset);
    match &variant.kind {
        VariantKind::Oracle => {
            let (rmse, mae, peak) = score_forecast(target, target, t_split)?;
            let recovery = match &dataset.truth {
                Some(truth) => Some(parameter_recovery(&truth.rates, &truth.rates)?),
                None => None,
            };
            Ok(CellScores {
                rmse,
                mae,
                peak,
                recovery,
                initial_loss: None,
                best_loss: None,
                leaked: false,
                wall_clock_secs: 0.0,
            })
        }
        VariantKind::Model(base) => {
            let cfg = TrainConfig { seed, ..base.clone() };
            let series = &dataset.series;
            let out = fit(series, t_split, &cfg)?;
            let roll = rollout(&out.model, &out.controls, series.values[0], &series.times, t_split)?;
            let (rmse, mae, peak) = score_forecast(&roll.infected(), target, t_split)?;
            let recovery = match &dataset.truth {
                Some(truth) => {
                    let (inferred, applied) = align_applied_rates(&roll.rates, &truth.rates);
                    Some(parameter_recovery(inferred, applied)?)
                }
                None => None,
            };
            Ok(CellScores {
                rmse,
                mae,
                peak,
                recovery,
                initial_loss: out.history.losses.first().copied(),
                best_loss: Some(out.history.best_loss),
                leaked: out.leaked,
                wall_clock_secs: out.history.wall_clock_secs,
            })
        }
    }
}

fn run_cell(dataset: &Dataset, variant: &Variant, split: f64, seed: u64) -> CellReport {
    let t_split = split_index(split, dataset.series.len());
    let outcome = match &t_split {
        Err(e) => CellOutcome::Failed { error: e.to_string() },
        Ok(t) => match catch_unwind(AssertUnwindSafe(|| run_cell_inner(dataset, variant, *t, seed))) {
            Ok(Ok(scores)) => CellOutcome::Ok(scores),
            Ok(Err(e)) => CellOutcome::Failed { error: e.to_string() },
            Err(panic) => CellOutcome::Failed {
                error: panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into()),
            },
        },
    };
    match &outcome {
        CellOutcome::Ok(s) => log::info!(
            "{} split={split} seed={seed}: rmse={:.4e} peak timing={}",
            variant.name,
            s.rmse,
            s.peak.timing
        ),
        CellOutcome::Failed { error } => log::warn!("{} split={split} seed={seed} failed: {error}", variant.name),
    }
    CellReport {
        variant: variant.name.clone(),
        split,
        seed,
        t_split: t_split.as_ref().copied().unwrap_or(0),
        outcome,
    }
}

/// Train and score every (split, seed, variant) cell.
pub fn run_benchmark(dataset: &Dataset, plan: &BenchmarkPlan) -> Result<BenchmarkReport> {
    plan.validate()?;
    let mut cells = Vec::new();
    for &split in &plan.splits {
        for &seed in &plan.seeds {
            for variant in &plan.variants {
                cells.push((variant, split, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::Input(format!("cannot start {} workers: {e}", plan.jobs)))?;
    let reports: Vec<CellReport> = pool.install(|| {
        cells
            .par_iter()
            .map(|(variant, split, seed)| run_cell(dataset, variant, *split, *seed))
            .collect()
    });
    Ok(BenchmarkReport::new(dataset.spec.label(), reports))
}

/// Axes of the ablation cross.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationPlan {
    pub variants: Vec<LatentVariant>,
    pub delays: Vec<bool>,
    pub components: Vec<usize>,
    pub methods: Vec<Method>,
    pub split: f64,
    pub seeds: Vec<u64>,
    /// Settings shared by every cell.
    pub base: TrainConfig,
    pub jobs: usize,
}

impl Default for AblationPlan {
    fn default() -> Self {
        Self {
            variants: vec![LatentVariant::Single, LatentVariant::PerComponent],
            delays: vec![false, true],
            components: vec![1, 2, 3],
            methods: vec![Method::Vmd, Method::MovingAverage, Method::Stl],
            split: 0.6,
            seeds: vec![0, 1, 2],
            base: TrainConfig::default(),
            jobs: 1,
        }
    }
}

/// Expand the cross into named variants, dropping duplicates.
///
/// One component feeds the raw series as the only control, so the method is
/// irrelevant and both latent variants build the same network; those cells
/// collapse to a single `raw` cell per delay setting.
pub fn ablation_variants(plan: &AblationPlan) -> Vec<Variant> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &components in &plan.components {
        for &variant in &plan.variants {
            for &delay in &plan.delays {
                for &method in &plan.methods {
                    let (variant, method) = if components == 1 {
                        (LatentVariant::PerComponent, None)
                    } else {
                        (variant, Some(method))
                    };
                    let name = format!(
                        "{}/{}/{components}c/{}",
                        variant.name(),
                        if delay { "delay" } else { "nodelay" },
                        method.map_or("raw", Method::name)
                    );
                    if !seen.insert(name.clone()) {
                        continue;
                    }
                    let mut cfg = plan.base.clone().with_components(components);
                    cfg.model.variant = variant;
                    cfg.model.delay.enabled = delay;
                    if let Some(m) = method {
                        cfg.decomposition.method = m;
                    }
                    out.push(Variant::model(name, cfg));
                }
            }
        }
    }
    out
}

pub fn run_ablations(dataset: &Dataset, plan: &AblationPlan) -> Result<BenchmarkReport> {
    let variants = ablation_variants(plan);
    if variants.is_empty() {
        return Err(Error::Input("ablation plan has an empty axis".into()));
    }
    run_benchmark(
        dataset,
        &BenchmarkPlan {
            splits: vec![plan.split],
            seeds: plan.seeds.clone(),
            variants,
            jobs: plan.jobs,
        },
    )
}
