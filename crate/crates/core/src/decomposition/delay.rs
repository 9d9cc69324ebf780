use serde::{Deserialize, Serialize};

use super::tsr::TsrComponents;
use crate::{Error, Result};

/// Time-delay embedding settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayConfig {
    pub enabled: bool,
    /// Embedding dimension.
    pub m: usize,
    /// Lag in samples.
    pub tau: usize,
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            m: 3,
            tau: 1,
        }
    }
}

impl DelayConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    /// Width of each control vector.
    pub fn control_dim(&self) -> usize {
        if self.enabled {
            self.m
        } else {
            1
        }
    }
}

/// Row `i` is `[x(i), x(i - tau), ..., x(i - (m - 1) tau)]`; lags before the
/// first sample repeat `x(0)`.
pub fn delay_embed(component: &[f64], m: usize, tau: usize) -> Result<Vec<Vec<f64>>> {
    if m == 0 || tau == 0 {
        return Err(Error::Input(format!(
            "delay embedding needs m >= 1 and tau >= 1, got m={m}, tau={tau}"
        )));
    }
    Ok((0..component.len())
        .map(|i| {
            (0..m)
                .map(|j| component[i.saturating_sub(j * tau)])
                .collect()
        })
        .collect())
}

/// Delay-embedded controls for every component over the full time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPath {
    /// `components[c][i]` is the control vector of component `c` at step `i`.
    pub components: Vec<Vec<Vec<f64>>>,
    pub m: usize,
    pub tau: usize,
    /// Rows at or beyond this index were extrapolated, not observed.
    pub observed_len: usize,
}

impl ControlPath {
    /// Embed trend, seasonal and residual of `tsr` (already spanning the full grid).
    pub fn build(tsr: &TsrComponents, observed_len: usize, delay: &DelayConfig) -> Result<Self> {
        let (m, tau) = if delay.enabled { (delay.m, delay.tau) } else { (1, 1) };
        let components = tsr
            .parts()
            .iter()
            .map(|part| delay_embed(part, m, tau))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            m,
            tau,
            observed_len: observed_len.min(tsr.len()),
        })
    }

    /// Multiply every control value by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in self.components.iter_mut().flatten().flatten() {
            *v *= factor;
        }
        self
    }

    pub fn len(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn row(&self, component: usize, step: usize) -> &[f64] {
        &self.components[component][step]
    }

    pub fn is_extrapolated(&self, step: usize) -> bool {
        step >= self.observed_len
    }

    /// All components' control vectors at `step`, concatenated.
    pub fn concat_row(&self, step: usize) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|c| c[step].iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m1_is_identity() {
        let x = [0.1, 0.5, 0.2];
        let rows = delay_embed(&x, 1, 3).unwrap();
        assert_eq!(rows, vec![vec![0.1], vec![0.5], vec![0.2]]);
    }

    #[test]
    fn clamped_first_rows() {
        let rows = delay_embed(&[1.0, 2.0, 3.0, 4.0], 2, 1).unwrap();
        assert_eq!(rows, vec![vec![1., 1.], vec![2., 1.], vec![3., 2.], vec![4., 3.]]);
    }

    #[test]
    fn ramp_rows_nonincreasing_and_column_zero_preserved() {
        let ramp: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rows = delay_embed(&ramp, 3, 2).unwrap();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[0], ramp[i]);
            assert!(row.windows(2).all(|w| w[1] <= w[0]), "row {i}: {row:?}");
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, ramp[i.saturating_sub(2 * j)]);
            }
        }
    }

    #[test]
    fn zero_parameters_rejected() {
        assert!(delay_embed(&[1.0], 0, 1).is_err());
        assert!(delay_embed(&[1.0], 1, 0).is_err());
    }

    #[test]
    fn control_path_layout() {
        let tsr = TsrComponents {
            trend: vec![1.0, 2.0, 3.0],
            seasonal: vec![0.1, 0.2, 0.3],
            residual: vec![0.0, 0.0, 0.5],
            dominant_period: 0,
        };
        let path = ControlPath::build(&tsr, 2, &DelayConfig::default()).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(path.row(1, 2), &[0.3, 0.2, 0.1]);
        assert_eq!(path.concat_row(0).len(), 9);
        assert!(path.is_extrapolated(2) && !path.is_extrapolated(1));
        let flat = ControlPath::build(&tsr, 3, &DelayConfig::disabled()).unwrap();
        assert_eq!(flat.row(0, 2), &[3.0]);
    }
}
