//! Epidemic forecasting with decomposition-driven latent ODEs.
//!
//! An observed infection series is split into trend, seasonal and residual
//! control signals. Each signal drives its own controlled latent ODE; the
//! fused latent state is decoded into bounded, time-varying SIRS rates, and the
//! SIRS model is integrated with those rates to produce forecasts. Training
//! differentiates the whole unrolled rollout.

pub mod data_io;
pub mod decomposition;
pub mod diffcore;
mod error;
pub mod evaluation;
pub mod latent_model;
pub mod mechanistic;
pub mod training;

pub use error::{Error, Result};
