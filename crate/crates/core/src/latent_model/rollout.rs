use serde::{Deserialize, Serialize};

use super::EpiNodeModel;
use crate::decomposition::ControlPath;
use crate::diffcore::{mlp_apply, MlpSpec, Tape, Var};
use crate::mechanistic::{rk4_step, stabilize, EpiState, ModelKind, RateTriple, Rates, MASS_BLEND};
use crate::{Error, Result};

/// Latent vectors of every flow at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub flows: Vec<Vec<f64>>,
}

/// One RK4 step of `dh/dt = field([h; u]) - softplus(raw_damping) * h` with
/// `u` held fixed over the step.
pub fn latent_step<'t>(
    field: &MlpSpec,
    field_weights: &[Var<'t>],
    raw_damping: Var<'t>,
    h: Var<'t>,
    u: Var<'t>,
    dt: f64,
) -> Result<Var<'t>> {
    if h.len() + u.len() != field.input_dim() {
        return Err(Error::Input(format!(
            "field takes {} inputs but latent has {} and control {}",
            field.input_dim(),
            h.len(),
            u.len()
        )));
    }
    if dt == 0.0 {
        return Ok(h);
    }
    let damping = raw_damping.softplus();
    let rhs = |x: Var<'t>| -> Result<Var<'t>> {
        Ok(mlp_apply(field, field_weights, Var::concat(&[x, u]))? - x.scale_by(damping))
    };
    let k1 = rhs(h)?;
    let k2 = rhs(h + k1.scale(0.5 * dt))?;
    let k3 = rhs(h + k2.scale(0.5 * dt))?;
    let k4 = rhs(h + k3.scale(dt))?;
    let next = h + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
    if let Some(v) = next.value().iter().find(|v| !v.is_finite()) {
        return Err(Error::numerical("latent step", format!("latent entry became {v}")));
    }
    Ok(next)
}

/// Rollout values still attached to the tape.
#[derive(Debug)]
pub struct TapeRollout<'t> {
    /// Compartments per grid point.
    pub states: Vec<Vec<Var<'t>>>,
    /// Rates decoded at each grid point; those at `i > 0` drove the step into `i`.
    pub rates: Vec<Rates<Var<'t>>>,
    pub latents: Vec<Vec<Var<'t>>>,
}

impl<'t> TapeRollout<'t> {
    pub fn infected(&self) -> Vec<Var<'t>> {
        self.states.iter().map(|s| s[1]).collect()
    }
}

/// Record the coupled rollout over the first `steps` grid points on
/// `params`' tape. `params` are the model's leaves in weight-set order.
pub fn record_rollout<'t>(
    model: &EpiNodeModel,
    params: &[Var<'t>],
    controls: &ControlPath,
    i0: f64,
    times: &[f64],
    steps: usize,
) -> Result<TapeRollout<'t>> {
    let tape = params
        .first()
        .ok_or_else(|| Error::Input("model has no parameters".into()))?
        .tape();
    if !(i0 > 0.0 && i0 < 1.0) {
        return Err(Error::Input(format!("initial infected fraction must lie in (0, 1), got {i0}")));
    }
    if steps == 0 || steps > times.len() {
        return Err(Error::Input(format!("cannot roll out {steps} steps over a grid of {}", times.len())));
    }
    if controls.len() < steps {
        return Err(Error::Input(format!(
            "controls cover {} steps, rollout needs {steps}",
            controls.len()
        )));
    }
    let cfg = model.config();
    if controls.num_components() < cfg.components || controls.m != cfg.delay.control_dim() {
        return Err(Error::Input(format!(
            "controls have {} components of width {}, model needs {} of width {}",
            controls.num_components(),
            controls.m,
            cfg.components,
            cfg.delay.control_dim()
        )));
    }

    let layout = model.layout();
    let fields: Vec<Vec<Var<'t>>> = layout.fields.iter().map(|idx| model.pick(params, idx)).collect();
    let substeps = cfg.substeps;
    let kind = ModelKind::Sirs;

    let mut h: Vec<Var<'t>> = model.flows().iter().map(|f| tape.vector(&vec![0.0; f.latent_dim])).collect();
    let mut y: Vec<Var<'t>> = [1.0 - i0, i0, 0.0].iter().map(|&v| tape.scalar(v)).collect();
    let rates0 = model.decode_params(params, model.fuse(params, &h)?)?;

    let mut out = TapeRollout {
        states: Vec::with_capacity(steps),
        rates: Vec::with_capacity(steps),
        latents: Vec::with_capacity(steps),
    };
    out.states.push(y.clone());
    out.rates.push(rates0);
    out.latents.push(h.clone());

    for i in 1..steps {
        let dt = times[i] - times[i - 1];
        if !(dt > 0.0) {
            return Err(Error::Input(format!("time grid not increasing at step {i}")));
        }
        let sub = dt / substeps as f64;
        let at_step = |e: Error| Error::numerical(format!("rollout step {i}"), e.to_string());
        for (k, flow) in model.flows().iter().enumerate() {
            let row: Vec<f64> = flow
                .components
                .iter()
                .flat_map(|&c| controls.row(c, i - 1).iter().copied())
                .collect();
            let u = tape.vector(&row);
            for _ in 0..substeps {
                h[k] = latent_step(&flow.field, &fields[k], params[layout.dampings[k]], h[k], u, sub).map_err(at_step)?;
            }
        }
        let rates = model.decode_params(params, model.fuse(params, &h).map_err(at_step)?)?;
        for _ in 0..substeps {
            let candidate = rk4_step(|s: &[Var<'t>]| kind.derivative(s, &rates), &y, sub).map_err(at_step)?;
            y = stabilize(&candidate, &y, MASS_BLEND).state;
        }
        out.states.push(y.clone());
        out.rates.push(rates);
        out.latents.push(h.clone());
    }
    Ok(out)
}

/// Plain-valued rollout over a full grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub times: Vec<f64>,
    pub states: Vec<EpiState>,
    pub rates: Vec<RateTriple>,
    pub latents: Vec<LatentState>,
    /// Grid points at or past this index lie beyond the training window.
    pub split: usize,
}

impl Rollout {
    pub fn infected(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.values()[1]).collect()
    }

    pub fn rate_series(&self) -> [Vec<f64>; 3] {
        [
            self.rates.iter().map(|r| r.beta).collect(),
            self.rates.iter().map(|r| r.gamma).collect(),
            self.rates.iter().map(|r| r.delta).collect(),
        ]
    }
}

/// Run the model over every point of `times`.
pub fn rollout(model: &EpiNodeModel, controls: &ControlPath, i0: f64, times: &[f64], split: usize) -> Result<Rollout> {
    let tape = Tape::new();
    let params = model.leaves(&tape);
    let rec = record_rollout(model, &params, controls, i0, times, times.len())?;
    tape.check_finite()?;
    let value = |v: &Var<'_>| v.item();
    Ok(Rollout {
        times: times.to_vec(),
        states: rec
            .states
            .iter()
            .map(|s| EpiState::from_raw(s.iter().map(value).collect()))
            .collect(),
        rates: rec
            .rates
            .iter()
            .map(|r| RateTriple::new(r.beta.item(), r.gamma.item(), r.delta.item()))
            .collect(),
        latents: rec
            .latents
            .iter()
            .map(|h| LatentState {
                flows: h.iter().map(|v| v.to_vec()).collect(),
            })
            .collect(),
        split: split.min(times.len()),
    })
}
