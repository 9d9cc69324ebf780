//! Trend/seasonal/residual decomposition of the observed series and the
//! control signals built from it.

mod delay;
mod extend;
mod smoothing;
mod spectrum;
mod tsr;
mod vmd;

pub use delay::{delay_embed, ControlPath, DelayConfig};
pub use extend::{extend_controls, ControlPolicy, ExtensionPolicy};
pub use smoothing::{centered_moving_average, default_loess_width, loess, ma_decompose, stl_decompose};
pub use spectrum::{dft, idft, Spectrum};
pub use tsr::{group_tsr, TsrComponents};
pub use vmd::{vmd_decompose, ModeSet, VmdConfig};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Vmd,
    #[serde(alias = "ma")]
    MovingAverage,
    Stl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vmd => "vmd",
            Method::MovingAverage => "ma",
            Method::Stl => "stl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vmd" => Some(Method::Vmd),
            "ma" | "moving_average" => Some(Method::MovingAverage),
            "stl" => Some(Method::Stl),
            _ => None,
        }
    }
}

/// Which decomposition to run and how many components to keep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecompositionConfig {
    pub method: Method,
    /// 1 uses the raw signal as the only control, 2 keeps trend + seasonal, 3 keeps all.
    pub components: usize,
    pub vmd: VmdConfig,
    pub ma_window: usize,
    /// Seasonal period in samples for MA and STL.
    pub period: Option<usize>,
    /// STL trend span; defaults to the smallest odd integer >= 1.5 periods.
    pub loess_width: Option<usize>,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            method: Method::Vmd,
            components: 3,
            vmd: VmdConfig::default(),
            ma_window: 7,
            period: Some(52),
            loess_width: None,
        }
    }
}

impl DecompositionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.components) {
            return Err(Error::Input(format!(
                "component count must be 1, 2 or 3, got {}",
                self.components
            )));
        }
        Ok(())
    }

    /// Modes before grouping; only meaningful for VMD.
    pub fn vmd_modes(&self) -> usize {
        if self.components < 3 {
            self.components
        } else {
            self.vmd.k.max(3)
        }
    }

    pub fn decompose(&self, signal: &[f64]) -> Result<TsrComponents> {
        self.validate()?;
        if self.components == 1 {
            return Ok(TsrComponents::undecomposed(signal));
        }
        let tsr = match self.method {
            Method::Vmd => {
                let cfg = VmdConfig {
                    k: self.vmd_modes(),
                    ..self.vmd.clone()
                };
                group_tsr(&vmd_decompose(signal, &cfg)?)
            }
            Method::MovingAverage => ma_decompose(signal, self.ma_window, self.period)?,
            Method::Stl => {
                let period = self
                    .period
                    .ok_or_else(|| Error::Input("STL needs a seasonal period".into()))?;
                let width = self.loess_width.unwrap_or_else(|| default_loess_width(period));
                stl_decompose(signal, period, width)?
            }
        };
        Ok(tsr.collapse(self.components))
    }
}
