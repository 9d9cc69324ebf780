use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{rk4_step, stabilize, EpiState, ModelKind, RateTriple, MASS_BLEND};
use crate::{Error, Result};

/// Rates as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSchedule {
    Fixed {
        rates: RateTriple,
    },
    /// `beta(t) = beta0 * (1 + amplitude * sin(2 pi t / period))`; other rates fixed.
    Periodic {
        base: RateTriple,
        amplitude: f64,
        period: f64,
    },
}

impl ParamSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            ParamSchedule::Fixed { rates } => rates.validate(),
            ParamSchedule::Periodic {
                base,
                amplitude,
                period,
            } => {
                base.validate()?;
                if !(amplitude.abs() < 1.0) {
                    return Err(Error::Input(format!(
                        "modulation amplitude {amplitude} would drive beta negative"
                    )));
                }
                if !(*period > 0.0) || !period.is_finite() {
                    return Err(Error::Input(format!("period must be positive, got {period}")));
                }
                Ok(())
            }
        }
    }

    pub fn rates_at(&self, t: f64) -> RateTriple {
        match self {
            ParamSchedule::Fixed { rates } => *rates,
            ParamSchedule::Periodic {
                base,
                amplitude,
                period,
            } => {
                // Reduce the phase first so integer grids repeat bit-exactly.
                let phase = t.rem_euclid(*period) / period * TAU;
                RateTriple {
                    beta: base.beta * (1.0 + amplitude * phase.sin()),
                    ..*base
                }
            }
        }
    }
}

/// States and applied rates on a uniform grid of `steps` points.
///
/// `rates[i]` is the rate set used to advance from `states[i]` to `states[i + 1]`
/// (the last entry is evaluated but no step is taken with it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: ModelKind,
    pub times: Vec<f64>,
    pub states: Vec<EpiState>,
    pub rates: Vec<RateTriple>,
    pub degenerate_steps: usize,
}

impl Trajectory {
    pub fn compartment(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.values()[index]).collect()
    }

    pub fn infected(&self) -> Vec<f64> {
        self.compartment(self.kind.infected_index())
    }
}

/// Roll RK4 plus stabilization over `steps` grid points starting at `y0`.
pub fn simulate(
    kind: ModelKind,
    schedule: &ParamSchedule,
    y0: &EpiState,
    steps: usize,
    dt: f64,
) -> Result<Trajectory> {
    schedule.validate()?;
    if steps == 0 {
        return Err(Error::Input("simulation needs at least one grid point".into()));
    }
    if y0.dim() != kind.dim() {
        return Err(Error::Input(format!(
            "{kind:?} needs {} compartments, initial state has {}",
            kind.dim(),
            y0.dim()
        )));
    }
    EpiState::on_simplex(y0.values().to_vec())?;

    let mut states = Vec::with_capacity(steps);
    let mut rates = Vec::with_capacity(steps);
    let mut times = Vec::with_capacity(steps);
    let mut degenerate_steps = 0;
    let mut y = y0.values().to_vec();
    for i in 0..steps {
        let t = i as f64 * dt;
        let mut r = schedule.rates_at(t);
        if kind == ModelKind::Sir {
            r.delta = 0.0;
        }
        if kind == ModelKind::Seirs && r.sigma.is_none() {
            return Err(Error::Input("SEIRS schedule lacks an incubation rate".into()));
        }
        times.push(t);
        states.push(EpiState::from_raw(y.clone()));
        rates.push(r);
        if i + 1 < steps {
            let candidate = rk4_step(|s: &[f64]| kind.derivative(s, &r), &y, dt)
                .map_err(|e| Error::numerical(format!("simulate step {i}"), e.to_string()))?;
            let out = stabilize(&candidate, &y, MASS_BLEND);
            degenerate_steps += usize::from(out.degenerate);
            y = out.state;
        }
    }
    Ok(Trajectory {
        kind,
        times,
        states,
        rates,
        degenerate_steps,
    })
}

/// Registered synthetic regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    SirsFixed,
    SirsVarying,
    Sir,
    Seirs,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [
        SyntheticKind::SirsFixed,
        SyntheticKind::SirsVarying,
        SyntheticKind::Sir,
        SyntheticKind::Seirs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::SirsFixed => "sirs_fixed",
            SyntheticKind::SirsVarying => "sirs_varying",
            SyntheticKind::Sir => "sir",
            SyntheticKind::Seirs => "seirs",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn model(self) -> ModelKind {
        match self {
            SyntheticKind::SirsFixed | SyntheticKind::SirsVarying => ModelKind::Sirs,
            SyntheticKind::Sir => ModelKind::Sir,
            SyntheticKind::Seirs => ModelKind::Seirs,
        }
    }
}

/// Generator settings for one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub kind: SyntheticKind,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub sigma: f64,
    /// Modulation amplitude on beta; zero means fixed rates.
    pub amplitude: f64,
    pub period: f64,
    pub y0: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
    /// Log-normal observation noise on I; zero disables it.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::for_kind(SyntheticKind::SirsFixed)
    }
}

impl SyntheticConfig {
    pub fn for_kind(kind: SyntheticKind) -> Self {
        let mut cfg = Self {
            kind,
            beta: 0.3,
            gamma: 0.1,
            delta: 0.02,
            sigma: 0.2,
            amplitude: 0.0,
            period: 52.0,
            y0: vec![0.99, 0.01, 0.0],
            steps: 200,
            dt: 1.0,
            noise_sigma: 0.0,
            seed: 0,
        };
        match kind {
            SyntheticKind::SirsFixed => {}
            SyntheticKind::SirsVarying => cfg.amplitude = 0.3,
            SyntheticKind::Sir => cfg.delta = 0.0,
            SyntheticKind::Seirs => cfg.y0 = vec![0.99, 0.0, 0.01, 0.0],
        }
        cfg
    }

    pub fn schedule(&self) -> ParamSchedule {
        let mut base = RateTriple::new(self.beta, self.gamma, self.delta);
        if self.kind == SyntheticKind::Seirs {
            base = base.with_sigma(self.sigma);
        }
        if self.amplitude == 0.0 {
            ParamSchedule::Fixed { rates: base }
        } else {
            ParamSchedule::Periodic {
                base,
                amplitude: self.amplitude,
                period: self.period,
            }
        }
    }

    pub fn generate(&self) -> Result<SyntheticSeries> {
        let y0 = EpiState::on_simplex(self.y0.clone())?;
        let trajectory = simulate(self.kind.model(), &self.schedule(), &y0, self.steps, self.dt)?;
        let mut observed = trajectory.infected();
        if self.noise_sigma < 0.0 {
            return Err(Error::Input(format!("noise sigma must be nonnegative, got {}", self.noise_sigma)));
        }
        if self.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let normal = Normal::new(0.0, self.noise_sigma)
                .map_err(|e| Error::Input(format!("noise distribution: {e}")))?;
            for v in observed.iter_mut() {
                *v = (*v * normal.sample(&mut rng).exp()).min(1.0 - 1e-9);
            }
        }
        Ok(SyntheticSeries {
            config: self.clone(),
            trajectory,
            observed,
        })
    }
}

/// A generated trajectory plus the (possibly noisy) observed infected fraction.
#[derive(Debug, Clone)]
pub struct SyntheticSeries {
    pub config: SyntheticConfig,
    pub trajectory: Trajectory,
    pub observed: Vec<f64>,
}
