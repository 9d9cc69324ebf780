//! The hybrid forward model: controlled latent ODEs, fusion, bounded rate
//! decoding and the coupled latent/compartmental rollout.

mod rollout;

pub use rollout::{latent_step, record_rollout, rollout, LatentState, Rollout, TapeRollout};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::DelayConfig;
use crate::diffcore::{mlp_apply, softplus_inverse, Activation, MlpSpec, Tape, Tensor, Var, WeightSet};
use crate::mechanistic::{RateTriple, Rates};
use crate::{Error, Result};

/// Decoded rates are kept this fraction of the range away from either bound,
/// so they stay strictly inside even when the sigmoid saturates in `f64`.
const BOUND_MARGIN: f64 = 1e-9;

/// Admissible `(min, max)` range of each rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
    pub delta: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            beta: (0.05, 1.0),
            gamma: (0.05, 0.2),
            delta: (0.005, 0.05),
        }
    }
}

impl ParamBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in self.named() {
            if !(lo >= 0.0) || !(lo < hi) || !hi.is_finite() {
                return Err(Error::Input(format!("{name} bounds ({lo}, {hi}) need 0 <= min < max")));
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, (f64, f64)); 3] {
        [("beta", self.beta), ("gamma", self.gamma), ("delta", self.delta)]
    }

    fn inner(range: (f64, f64)) -> (f64, f64) {
        let pad = BOUND_MARGIN * (range.1 - range.0);
        (range.0 + pad, range.1 - range.0 - 2.0 * pad)
    }

    /// Map unit-interval outputs onto the bounds.
    pub fn scale(&self, unit: [f64; 3]) -> RateTriple {
        let map = |u: f64, r| {
            let (lo, width) = Self::inner(r);
            lo + width * u
        };
        RateTriple::new(map(unit[0], self.beta), map(unit[1], self.gamma), map(unit[2], self.delta))
    }

    pub fn contains_strictly(&self, rates: &RateTriple) -> bool {
        [rates.beta, rates.gamma, rates.delta]
            .iter()
            .zip(self.named())
            .all(|(v, (_, (lo, hi)))| *v > lo && *v < hi)
    }

    fn scale_var<'t>(&self, unit: Var<'t>) -> Rates<Var<'t>> {
        let map = |i: usize, r| {
            let (lo, width) = Self::inner(r);
            unit.at(i).scale(width).offset(lo)
        };
        Rates {
            beta: map(0, self.beta),
            gamma: map(1, self.gamma),
            delta: map(2, self.delta),
            sigma: None,
        }
    }
}

/// One shared latent flow or one flow per decomposition component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentVariant {
    #[default]
    PerComponent,
    Single,
}

impl LatentVariant {
    pub fn name(self) -> &'static str {
        match self {
            LatentVariant::PerComponent => "3ode",
            LatentVariant::Single => "1ode",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpiNodeConfig {
    pub variant: LatentVariant,
    /// Decomposition components feeding the model (1 to 3).
    pub components: usize,
    /// Latent width per component.
    pub latent_dim: usize,
    pub field_hidden: usize,
    pub fusion_hidden: usize,
    pub fused_dim: usize,
    pub decoder_hidden: usize,
    pub delay: DelayConfig,
    pub bounds: ParamBounds,
    pub initial_damping: f64,
    /// Multiplier on the initial output layer of each vector field.
    pub field_output_gain: f64,
    /// RK4 steps per observation interval.
    pub substeps: usize,
}

impl Default for EpiNodeConfig {
    fn default() -> Self {
        Self {
            variant: LatentVariant::PerComponent,
            components: 3,
            latent_dim: 8,
            field_hidden: 32,
            fusion_hidden: 32,
            fused_dim: 16,
            decoder_hidden: 32,
            delay: DelayConfig::default(),
            bounds: ParamBounds::default(),
            initial_damping: 0.1,
            field_output_gain: 0.1,
            substeps: 1,
        }
    }
}

/// A latent flow: which components drive it and the shape of its vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub components: Vec<usize>,
    pub latent_dim: usize,
    pub control_dim: usize,
    pub field: MlpSpec,
}

impl EpiNodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.components) {
            return Err(Error::Input(format!("components must be 1..=3, got {}", self.components)));
        }
        let widths = [
            self.latent_dim,
            self.field_hidden,
            self.fusion_hidden,
            self.fused_dim,
            self.decoder_hidden,
            self.substeps,
        ];
        if widths.contains(&0) {
            return Err(Error::Input("network widths and substeps must be positive".into()));
        }
        if !(self.field_output_gain >= 0.0) || !self.field_output_gain.is_finite() {
            return Err(Error::Input(format!(
                "field output gain must be finite and nonnegative, got {}",
                self.field_output_gain
            )));
        }
        if !(self.initial_damping > 0.0) {
            return Err(Error::Input(format!(
                "initial damping must be positive, got {}",
                self.initial_damping
            )));
        }
        if self.delay.enabled && (self.delay.m == 0 || self.delay.tau == 0) {
            return Err(Error::Input("delay embedding needs m >= 1 and tau >= 1".into()));
        }
        self.bounds.validate()
    }

    pub fn flows(&self) -> Vec<Flow> {
        let m = self.delay.control_dim();
        let groups: Vec<Vec<usize>> = match self.variant {
            LatentVariant::PerComponent => (0..self.components).map(|c| vec![c]).collect(),
            LatentVariant::Single => vec![(0..self.components).collect()],
        };
        groups
            .into_iter()
            .map(|components| {
                let latent_dim = self.latent_dim * components.len();
                let control_dim = m * components.len();
                let field = MlpSpec::new(
                    vec![latent_dim + control_dim, self.field_hidden * components.len(), latent_dim],
                    Activation::Tanh,
                    Activation::Identity,
                )
                .expect("positive widths");
                Flow {
                    components,
                    latent_dim,
                    control_dim,
                    field,
                }
            })
            .collect()
    }

    pub fn total_latent_dim(&self) -> usize {
        self.latent_dim * self.components
    }

    pub fn fusion_spec(&self) -> MlpSpec {
        MlpSpec::new(
            vec![self.total_latent_dim(), self.fusion_hidden, self.fused_dim],
            Activation::Tanh,
            Activation::Tanh,
        )
        .expect("positive widths")
    }

    pub fn decoder_spec(&self) -> MlpSpec {
        MlpSpec::new(
            vec![self.fused_dim, self.decoder_hidden, 3],
            Activation::Tanh,
            Activation::Sigmoid,
        )
        .expect("positive widths")
    }
}

/// Positions of each network's tensors inside the weight set.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub fields: Vec<Vec<usize>>,
    pub dampings: Vec<usize>,
    pub fusion: Vec<usize>,
    pub decoder: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpiNodeModel {
    config: EpiNodeConfig,
    flows: Vec<Flow>,
    fusion: MlpSpec,
    decoder: MlpSpec,
    weights: WeightSet,
    layout: Layout,
    pinned: Option<RateTriple>,
}

fn push_net(set: &mut WeightSet, prefix: &str, tensors: Vec<Tensor>) -> Vec<usize> {
    tensors
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let kind = if i % 2 == 0 { "w" } else { "b" };
            set.push(format!("{prefix}.{kind}{}", i / 2), t)
        })
        .collect()
}

fn layout_of(config: &EpiNodeConfig, weights: &WeightSet) -> Result<Layout> {
    let find = |name: String| {
        weights
            .index_of(&name)
            .ok_or_else(|| Error::Input(format!("weight set lacks tensor {name}")))
    };
    let net = |prefix: String, spec: &MlpSpec| -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (layer, pair) in spec.widths.windows(2).enumerate() {
            let w = find(format!("{prefix}.w{layer}"))?;
            let b = find(format!("{prefix}.b{layer}"))?;
            if weights.tensors[w].shape != [pair[1], pair[0]] || weights.tensors[b].shape != [pair[1]] {
                return Err(Error::Dimension(format!(
                    "{prefix} layer {layer}: expected [{}, {}] weight and [{}] bias",
                    pair[1], pair[0], pair[1]
                )));
            }
            out.extend([w, b]);
        }
        Ok(out)
    };
    let flows = config.flows();
    let mut fields = Vec::new();
    let mut dampings = Vec::new();
    for (k, flow) in flows.iter().enumerate() {
        fields.push(net(format!("field{k}"), &flow.field)?);
        let d = find(format!("damping{k}"))?;
        if weights.tensors[d].data.len() != 1 {
            return Err(Error::Dimension(format!("damping{k} must be a scalar")));
        }
        dampings.push(d);
    }
    Ok(Layout {
        fields,
        dampings,
        fusion: net("fusion".into(), &config.fusion_spec())?,
        decoder: net("decoder".into(), &config.decoder_spec())?,
    })
}

impl EpiNodeModel {
    /// Fresh model with seeded uniform weights.
    pub fn new(config: EpiNodeConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = WeightSet::default();
        for (k, flow) in config.flows().iter().enumerate() {
            let mut field = flow.field.init_weights(&mut rng);
            let last = field.len();
            for t in &mut field[last - 2..] {
                t.data_mut().iter_mut().for_each(|v| *v *= config.field_output_gain);
            }
            push_net(&mut weights, &format!("field{k}"), field);
            weights.push(
                format!("damping{k}"),
                Tensor::scalar(softplus_inverse(config.initial_damping)),
            );
        }
        push_net(&mut weights, "fusion", config.fusion_spec().init_weights(&mut rng));
        push_net(&mut weights, "decoder", config.decoder_spec().init_weights(&mut rng));
        Self::from_weights(config, weights)
    }

    pub fn from_weights(config: EpiNodeConfig, weights: WeightSet) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        let layout = layout_of(&config, &weights)?;
        if weights.len() != layout.fields.iter().map(Vec::len).sum::<usize>() + layout.dampings.len() + layout.fusion.len() + layout.decoder.len() {
            return Err(Error::Input("weight set has tensors the model does not use".into()));
        }
        Ok(Self {
            flows: config.flows(),
            fusion: config.fusion_spec(),
            decoder: config.decoder_spec(),
            config,
            weights,
            layout,
            pinned: None,
        })
    }

    pub fn config(&self) -> &EpiNodeConfig {
        &self.config
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    pub fn set_flat_weights(&mut self, flat: &[f64]) -> Result<()> {
        self.weights.assign_flat(flat)
    }

    /// Debug hook: bypass the decoder and emit fixed rates at every step.
    pub fn pin_rates(&mut self, rates: Option<RateTriple>) {
        self.pinned = rates;
    }

    pub fn pinned_rates(&self) -> Option<RateTriple> {
        self.pinned
    }

    /// Damping coefficients after the softplus map.
    pub fn damping(&self) -> Vec<f64> {
        self.layout
            .dampings
            .iter()
            .map(|&i| crate::diffcore::softplus(self.weights.tensors[i].data[0]))
            .collect()
    }

    /// Every weight tensor as a leaf on `tape`, in weight-set order.
    pub fn leaves<'t>(&self, tape: &'t Tape) -> Vec<Var<'t>> {
        self.weights
            .tensors
            .iter()
            .map(|t| tape.leaf(&Tensor::new(t.shape.clone(), t.data.clone()).expect("validated weights")))
            .collect()
    }

    pub(crate) fn pick<'t>(&self, params: &[Var<'t>], idx: &[usize]) -> Vec<Var<'t>> {
        idx.iter().map(|&i| params[i]).collect()
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn fuse<'t>(&self, params: &[Var<'t>], latents: &[Var<'t>]) -> Result<Var<'t>> {
        let joined = Var::concat(latents);
        if joined.len() != self.fusion.input_dim() {
            return Err(Error::Input(format!(
                "fusion expects {} latent values, got {}",
                self.fusion.input_dim(),
                joined.len()
            )));
        }
        mlp_apply(&self.fusion, &self.pick(params, &self.layout.fusion), joined)
    }

    /// Rates decoded from the fused latent, or the pinned rates when set.
    pub fn decode_params<'t>(&self, params: &[Var<'t>], fused: Var<'t>) -> Result<Rates<Var<'t>>> {
        let tape = fused.tape();
        if let Some(r) = self.pinned {
            return Ok(Rates {
                beta: tape.scalar(r.beta),
                gamma: tape.scalar(r.gamma),
                delta: tape.scalar(r.delta),
                sigma: None,
            });
        }
        let unit = mlp_apply(&self.decoder, &self.pick(params, &self.layout.decoder), fused)?;
        Ok(self.config.bounds.scale_var(unit))
    }
}
