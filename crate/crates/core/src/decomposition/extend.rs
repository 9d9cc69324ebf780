use serde::{Deserialize, Serialize};

use super::tsr::TsrComponents;
use super::DecompositionConfig;
use crate::{Error, Result};

/// How controls are produced beyond the observation window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlPolicy {
    /// Decompose the observed window only and extrapolate each component.
    #[default]
    Causal,
    /// Decompose the whole series, forecast window included. Uses future
    /// observations; outputs are flagged as leaked.
    PaperFaithful,
}

/// Policy together with what it needs at extension time.
#[derive(Debug, Clone, Copy)]
pub enum ExtensionPolicy<'a> {
    Causal,
    PaperFaithful {
        full_series: Option<&'a [f64]>,
        decomposition: &'a DecompositionConfig,
    },
}

/// Least-squares line through `(i, y[i])`, returned as `(intercept, slope)`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return (ym, 0.0);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    (ym - slope * xm, slope)
}

fn extend_causal(tsr: &TsrComponents, horizon: usize) -> Result<TsrComponents> {
    let n = tsr.len();
    if n == 0 {
        return Err(Error::Input("cannot extend empty components".into()));
    }
    let mut out = tsr.clone();
    if horizon == 0 {
        return Ok(out);
    }

    let fit_len = (n / 10).max(8).min(n);
    let xs: Vec<f64> = (n - fit_len..n).map(|i| i as f64).collect();
    let (intercept, slope) = fit_line(&xs, &tsr.trend[n - fit_len..]);
    out.trend
        .extend((n..n + horizon).map(|i| intercept + slope * i as f64));

    let p = tsr.dominant_period;
    if p == 0 || p > n {
        out.seasonal.extend(std::iter::repeat_n(0.0, horizon));
    } else {
        let last_cycle = &tsr.seasonal[n - p..];
        out.seasonal
            .extend((0..horizon).map(|j| last_cycle[j % p]));
    }
    out.residual.extend(std::iter::repeat_n(0.0, horizon));
    Ok(out)
}

/// Extend components over `horizon` further steps.
///
/// Causal: the trend continues a line fitted to its last `max(8, n/10)`
/// samples, the seasonal part repeats its last dominant period, the residual
/// is zero. Paper-faithful: the full series is decomposed in one piece.
pub fn extend_controls(
    tsr: &TsrComponents,
    horizon: usize,
    policy: &ExtensionPolicy<'_>,
) -> Result<TsrComponents> {
    match policy {
        ExtensionPolicy::Causal => extend_causal(tsr, horizon),
        ExtensionPolicy::PaperFaithful {
            full_series,
            decomposition,
        } => {
            let full = full_series.ok_or_else(|| {
                Error::Input("paper-faithful control extension needs the full series".into())
            })?;
            if full.len() != tsr.len() + horizon {
                return Err(Error::Input(format!(
                    "full series has {} samples, expected {} observed + {horizon} horizon",
                    full.len(),
                    tsr.len()
                )));
            }
            decomposition.decompose(full)
        }
    }
}
