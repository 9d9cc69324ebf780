//! Compartmental dynamics, RK4 integration with simplex stabilization, and
//! synthetic epidemic generation.

mod integrate;
mod simulate;

pub use integrate::{rk4_step, stabilize, stabilize_state, Stabilized, MASS_BLEND};
pub use simulate::{simulate, ParamSchedule, SyntheticConfig, SyntheticKind, SyntheticSeries, Trajectory};

use serde::{Deserialize, Serialize};

use crate::diffcore::Real;
use crate::{Error, Result};

/// Which compartmental structure to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Sirs,
    /// SIRS with the waning rate forced to zero.
    Sir,
    Seirs,
}

impl ModelKind {
    pub fn dim(self) -> usize {
        match self {
            ModelKind::Sirs | ModelKind::Sir => 3,
            ModelKind::Seirs => 4,
        }
    }

    /// Position of the infected compartment in the state vector.
    pub fn infected_index(self) -> usize {
        match self {
            ModelKind::Sirs | ModelKind::Sir => 1,
            ModelKind::Seirs => 2,
        }
    }

    pub fn compartment_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Sirs | ModelKind::Sir => &["S", "I", "R"],
            ModelKind::Seirs => &["S", "E", "I", "R"],
        }
    }

    /// Right-hand side for any scalar implementation.
    pub fn derivative<T: Real>(self, y: &[T], rates: &Rates<T>) -> Result<Vec<T>> {
        if y.len() != self.dim() {
            return Err(Error::Input(format!(
                "{self:?} needs a {}-compartment state, got {}",
                self.dim(),
                y.len()
            )));
        }
        Ok(match self {
            ModelKind::Sirs => sirs_rhs(y, rates.beta, rates.gamma, rates.delta),
            ModelKind::Sir => sirs_rhs(y, rates.beta, rates.gamma, rates.delta.scale(0.0)),
            ModelKind::Seirs => {
                let sigma = rates
                    .sigma
                    .ok_or_else(|| Error::Input("SEIRS requires an incubation rate".into()))?;
                let (s, e, i, r) = (y[0], y[1], y[2], y[3]);
                let infection = rates.beta * s * i;
                let waning = rates.delta * r;
                let onset = sigma * e;
                let recovery = rates.gamma * i;
                vec![
                    waning - infection,
                    infection - onset,
                    onset - recovery,
                    recovery - waning,
                ]
            }
        })
    }
}

fn sirs_rhs<T: Real>(y: &[T], beta: T, gamma: T, delta: T) -> Vec<T> {
    let (s, i, r) = (y[0], y[1], y[2]);
    let infection = beta * s * i;
    let waning = delta * r;
    let recovery = gamma * i;
    vec![waning - infection, infection - recovery, recovery - waning]
}

/// Transmission, recovery and waning rates (plus incubation for SEIRS), per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates<T> {
    pub beta: T,
    pub gamma: T,
    pub delta: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<T>,
}

pub type RateTriple = Rates<f64>;

impl RateTriple {
    pub fn new(beta: f64, gamma: f64, delta: f64) -> Self {
        Self {
            beta,
            gamma,
            delta,
            sigma: None,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    fn validate(&self) -> Result<()> {
        let all = [Some(self.beta), Some(self.gamma), Some(self.delta), self.sigma];
        if all.iter().flatten().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Input(format!("rates must be finite and nonnegative: {self:?}")));
        }
        Ok(())
    }
}

/// Compartment fractions, `(S, I, R)` or `(S, E, I, R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpiState {
    values: Vec<f64>,
}

impl EpiState {
    /// Nonnegative, finite, three or four compartments.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !(3..=4).contains(&values.len()) {
            return Err(Error::Input(format!(
                "a state has 3 or 4 compartments, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input(format!("compartments must be finite and nonnegative: {values:?}")));
        }
        Ok(Self { values })
    }

    /// Like [`EpiState::new`] but also requires the 1-norm to be within 1e-6 of one.
    pub fn on_simplex(values: Vec<f64>) -> Result<Self> {
        let state = Self::new(values)?;
        if (state.mass() - 1.0).abs() > 1e-6 {
            return Err(Error::Input(format!(
                "compartments sum to {}, expected 1",
                state.mass()
            )));
        }
        Ok(state)
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn sirs_derivative(state: &EpiState, rates: &RateTriple) -> Result<Vec<f64>> {
    ModelKind::Sirs.derivative(state.values(), rates)
}

pub fn sir_derivative(state: &EpiState, rates: &RateTriple) -> Result<Vec<f64>> {
    ModelKind::Sir.derivative(state.values(), rates)
}

pub fn seirs_derivative(state: &EpiState, rates: &RateTriple) -> Result<Vec<f64>> {
    ModelKind::Seirs.derivative(state.values(), rates)
}
