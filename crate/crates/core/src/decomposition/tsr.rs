use serde::{Deserialize, Serialize};

use super::vmd::ModeSet;

/// Trend, seasonal and residual parts of a series; they add up to the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsrComponents {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
    /// Period of the seasonal part in samples, 0 when undefined.
    pub dominant_period: usize,
}

impl TsrComponents {
    /// The undecomposed signal as the only (trend) component.
    pub fn undecomposed(signal: &[f64]) -> Self {
        Self {
            trend: signal.to_vec(),
            seasonal: vec![0.0; signal.len()],
            residual: vec![0.0; signal.len()],
            dominant_period: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    pub fn parts(&self) -> [&[f64]; 3] {
        [&self.trend, &self.seasonal, &self.residual]
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.trend[i] + self.seasonal[i] + self.residual[i])
            .collect()
    }

    /// Merge down to `count` components: 2 folds the residual into the
    /// seasonal part, 1 folds everything into the trend.
    pub fn collapse(mut self, count: usize) -> Self {
        if count <= 2 {
            for (s, r) in self.seasonal.iter_mut().zip(self.residual.iter_mut()) {
                *s += *r;
                *r = 0.0;
            }
        }
        if count <= 1 {
            for (t, s) in self.trend.iter_mut().zip(self.seasonal.iter_mut()) {
                *t += *s;
                *s = 0.0;
            }
            self.dominant_period = 0;
        }
        self
    }
}

fn period_of(freq: f64, len: usize) -> usize {
    if len == 0 || freq < 1.0 / len as f64 {
        0
    } else {
        (1.0 / freq).round() as usize
    }
}

/// Assign modes (already sorted by frequency) to trend, seasonal and residual.
///
/// One mode is all trend; two modes are trend and seasonal; with three or more
/// the lowest is trend, the highest residual, and the rest are summed into the
/// seasonal part.
pub fn group_tsr(modes: &ModeSet) -> TsrComponents {
    let n = modes.signal_len();
    let k = modes.len();
    let zeros = vec![0.0; n];
    let sum = |range: std::ops::Range<usize>| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for m in &modes.modes[range] {
            for (o, v) in out.iter_mut().zip(m) {
                *o += v;
            }
        }
        out
    };
    let (trend, seasonal, residual, seasonal_range) = match k {
        0 => (zeros.clone(), zeros.clone(), zeros, 0..0),
        1 => (modes.modes[0].clone(), zeros.clone(), zeros, 0..0),
        2 => (modes.modes[0].clone(), modes.modes[1].clone(), zeros, 1..2),
        _ => (
            modes.modes[0].clone(),
            sum(1..k - 1),
            modes.modes[k - 1].clone(),
            1..k - 1,
        ),
    };
    let (mut num, mut den) = (0.0, 0.0);
    for j in seasonal_range {
        let energy: f64 = modes.modes[j].iter().map(|v| v * v).sum();
        num += energy * modes.center_freqs[j];
        den += energy;
    }
    let dominant_period = if den > 0.0 { period_of(num / den, n) } else { 0 };
    TsrComponents {
        trend,
        seasonal,
        residual,
        dominant_period,
    }
}
