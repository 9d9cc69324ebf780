//! Fitting the hybrid model to an observed series.

mod optim;

pub use optim::{clip_gradient, Adam};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data_io::TimeSeries;
use crate::decomposition::{extend_controls, ControlPath, ControlPolicy, DecompositionConfig, ExtensionPolicy};
use crate::diffcore::{Tape, Var};
use crate::latent_model::{record_rollout, EpiNodeConfig, EpiNodeModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
    /// Fraction of the training window after which the loss weights ramp up.
    pub ramp_start: f64,
    pub w_max: f64,
    pub seed: u64,
    pub decomposition: DecompositionConfig,
    pub model: EpiNodeConfig,
    pub policy: ControlPolicy,
    /// Divide controls by the largest observed magnitude in the training window.
    pub normalize_controls: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
            ramp_start: 0.8,
            w_max: 5.0,
            seed: 0,
            decomposition: DecompositionConfig::default(),
            model: EpiNodeConfig::default(),
            policy: ControlPolicy::Causal,
            normalize_controls: true,
        }
    }
}

impl TrainConfig {
    /// Set the component count on both the decomposition and the model.
    pub fn with_components(mut self, components: usize) -> Self {
        self.decomposition.components = components;
        self.model.components = components;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Input(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.ramp_start) {
            return Err(Error::Input(format!("ramp start must lie in [0, 1), got {}", self.ramp_start)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::Input("moment decays must lie in [0, 1) and epsilon be positive".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Input(format!("clip norm must be positive, got {}", self.clip_norm)));
        }
        if self.w_max < 1.0 {
            return Err(Error::Input(format!("w_max must be at least 1, got {}", self.w_max)));
        }
        if self.decomposition.components != self.model.components {
            return Err(Error::Input(format!(
                "decomposition keeps {} components but the model expects {}",
                self.decomposition.components, self.model.components
            )));
        }
        self.decomposition.validate()?;
        self.model.validate()
    }
}

/// Number of leading points used for training when a fraction of the series is observed.
pub fn split_index(fraction: f64, len: usize) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Input(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let t = (fraction * len as f64).round() as usize;
    if t < 2 || t >= len {
        return Err(Error::Input(format!(
            "split {fraction} of {len} points leaves no usable training or forecast window"
        )));
    }
    Ok(t)
}

/// Loss weights over the training window: 1 up to the ramp, then rising
/// linearly to `w_max` at the last training index.
pub fn make_weights(t_split: usize, ramp_start: f64, w_max: f64) -> Result<Vec<f64>> {
    if t_split < 2 {
        return Err(Error::Input(format!("training window needs at least 2 points, got {t_split}")));
    }
    if w_max < 1.0 {
        return Err(Error::Input(format!("w_max must be at least 1, got {w_max}")));
    }
    if !(0.0..1.0).contains(&ramp_start) {
        return Err(Error::Input(format!("ramp start must lie in [0, 1), got {ramp_start}")));
    }
    let last = t_split - 1;
    // last index still at weight 1
    let anchor = ((ramp_start * t_split as f64 - 1e-9).ceil() as usize)
        .saturating_sub(1)
        .min(last - 1);
    Ok((0..t_split)
        .map(|i| {
            if i <= anchor {
                1.0
            } else {
                1.0 + (w_max - 1.0) * (i - anchor) as f64 / (last - anchor) as f64
            }
        })
        .collect())
}

fn check_lengths(predicted: usize, observed: usize, weights: usize, t_split: usize) -> Result<()> {
    if predicted < t_split || observed < t_split || weights < t_split || t_split == 0 {
        return Err(Error::Input(format!(
            "loss over {t_split} points needs predictions ({predicted}), observations ({observed}) and weights ({weights}) that long"
        )));
    }
    Ok(())
}

/// `(1 / t_split) * sum_{i < t_split} w_i (p_i - o_i)^2`.
pub fn weighted_mse(predicted: &[f64], observed: &[f64], weights: &[f64], t_split: usize) -> Result<f64> {
    check_lengths(predicted.len(), observed.len(), weights.len(), t_split)?;
    let total: f64 = (0..t_split)
        .map(|i| weights[i] * (predicted[i] - observed[i]).powi(2))
        .sum();
    Ok(total / t_split as f64)
}

/// [`weighted_mse`] recorded on the predictions' tape.
pub fn weighted_mse_var<'t>(predicted: &[Var<'t>], observed: &[f64], weights: &[f64], t_split: usize) -> Result<Var<'t>> {
    check_lengths(predicted.len(), observed.len(), weights.len(), t_split)?;
    let terms: Vec<Var<'t>> = (0..t_split)
        .map(|i| {
            let e = predicted[i].offset(-observed[i]);
            (e * e).scale(weights[i])
        })
        .collect();
    Ok(Var::concat(&terms).sum().scale(1.0 / t_split as f64))
}

/// Decompose, extend and delay-embed the controls for a rollout over the whole series.
///
/// Returns the controls and whether they were built from forecast-window data.
pub fn build_controls(values: &[f64], t_split: usize, cfg: &TrainConfig) -> Result<(ControlPath, bool)> {
    let (decomposition, model, policy) = (&cfg.decomposition, &cfg.model, cfg.policy);
    if t_split == 0 || t_split > values.len() {
        return Err(Error::Input(format!("split {t_split} outside series of length {}", values.len())));
    }
    let horizon = values.len() - t_split;
    let (tsr, leaked) = match policy {
        ControlPolicy::Causal => {
            let observed = decomposition.decompose(&values[..t_split])?;
            (extend_controls(&observed, horizon, &ExtensionPolicy::Causal)?, false)
        }
        ControlPolicy::PaperFaithful => {
            let observed = decomposition.decompose(&values[..t_split])?;
            let full = extend_controls(
                &observed,
                horizon,
                &ExtensionPolicy::PaperFaithful {
                    full_series: Some(values),
                    decomposition,
                },
            )?;
            (full, horizon > 0)
        }
    };
    let path = ControlPath::build(&tsr, t_split, &model.delay)?;
    let peak = values[..t_split].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if cfg.normalize_controls && peak > 0.0 {
        return Ok((path.scaled(1.0 / peak), leaked));
    }
    Ok((path, leaked))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Loss of the weights entering each epoch.
    pub losses: Vec<f64>,
    /// Global gradient norm before clipping.
    pub grad_norms: Vec<f64>,
    /// Index into `losses` of the kept weights; `losses.len()` means the weights after the last update.
    pub best_epoch: usize,
    pub best_loss: f64,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EpiNodeModel,
    pub history: TrainHistory,
    pub controls: ControlPath,
    pub t_split: usize,
    pub leaked: bool,
}

struct Objective<'a> {
    controls: &'a ControlPath,
    observed: &'a [f64],
    times: &'a [f64],
    weights: Vec<f64>,
    t_split: usize,
}

impl Objective<'_> {
    /// Loss and flat gradient at the model's current weights.
    fn evaluate(&self, model: &EpiNodeModel, epoch: usize) -> Result<(f64, Vec<f64>)> {
        let tape = Tape::new();
        let params = model.leaves(&tape);
        let at_epoch = |e: Error| Error::numerical(format!("training epoch {epoch}"), e.to_string());
        let rec = record_rollout(model, &params, self.controls, self.observed[0], self.times, self.t_split)
            .map_err(at_epoch)?;
        let loss = weighted_mse_var(&rec.infected(), self.observed, &self.weights, self.t_split)?;
        tape.check_finite().map_err(at_epoch)?;
        let grads = tape.backward(loss.id(), &[1.0])?;
        let flat: Vec<f64> = params.iter().flat_map(|p| grads.wrt(*p)).collect();
        if let Some(pos) = flat.iter().position(|g| !g.is_finite()) {
            return Err(Error::numerical(
                format!("training epoch {epoch}"),
                format!("gradient entry {pos} is {}", flat[pos]),
            ));
        }
        Ok((loss.item(), flat))
    }
}

/// Fit `model` to the first `t_split` points of `series`.
pub fn train(model: EpiNodeModel, series: &TimeSeries, t_split: usize, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if model.config() != &cfg.model {
        return Err(Error::Input("model was built with a different configuration".into()));
    }
    if t_split < 2 || t_split >= series.len() {
        return Err(Error::Input(format!(
            "split {t_split} must leave at least 2 training points and 1 forecast point of {}",
            series.len()
        )));
    }
    if series.values[..t_split].iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Input("training observations must lie in [0, 1]".into()));
    }
    let (controls, leaked) = build_controls(&series.values, t_split, cfg)?;
    let objective = Objective {
        controls: &controls,
        observed: &series.values[..t_split],
        times: &series.times,
        weights: make_weights(t_split, cfg.ramp_start, cfg.w_max)?,
        t_split,
    };

    let start = Instant::now();
    let mut model = model;
    let mut history = TrainHistory {
        best_loss: f64::INFINITY,
        ..Default::default()
    };
    let mut flat = model.weights().flatten();
    let mut best = flat.clone();
    let mut adam = Adam::new(flat.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);

    for epoch in 0..cfg.epochs {
        let (loss, mut grad) = objective.evaluate(&model, epoch)?;
        if loss < history.best_loss {
            history.best_loss = loss;
            history.best_epoch = epoch;
            best.copy_from_slice(&flat);
        }
        history.losses.push(loss);
        history.grad_norms.push(clip_gradient(&mut grad, cfg.clip_norm));
        adam.step(&mut flat, &grad);
        model.set_flat_weights(&flat)?;
        if (epoch + 1) % 100 == 0 {
            log::debug!("epoch {}: loss {loss:.3e}", epoch + 1);
        }
    }
    if cfg.epochs > 0 {
        let (loss, _) = objective.evaluate(&model, cfg.epochs)?;
        if loss < history.best_loss {
            history.best_loss = loss;
            history.best_epoch = cfg.epochs;
            best.copy_from_slice(&flat);
        }
        model.set_flat_weights(&best)?;
    }
    history.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(TrainOutcome {
        model,
        history,
        controls,
        t_split,
        leaked,
    })
}

/// Build a fresh model from `cfg.model` seeded with `cfg.seed` and train it.
pub fn fit(series: &TimeSeries, t_split: usize, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let model = EpiNodeModel::new(cfg.model.clone(), cfg.seed)?;
    train(model, series, t_split, cfg)
}

#[cfg(test)]
mod tests;
