//! Moving-average and LOESS-based (STL) decompositions.

use super::tsr::TsrComponents;
use crate::{Error, Result};

/// Centered moving average; near the edges the window shrinks symmetrically.
pub fn centered_moving_average(signal: &[f64], window: usize) -> Vec<f64> {
    let n = signal.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let slice = &signal[i - h..=i + h];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Zero-mean phase averages of `detrended` for the given period.
fn periodic_means(detrended: &[f64], period: usize) -> Vec<f64> {
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (i, v) in detrended.iter().enumerate() {
        sums[i % period] += v;
        counts[i % period] += 1;
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let centre = means.iter().sum::<f64>() / period as f64;
    (0..detrended.len()).map(|i| means[i % period] - centre).collect()
}

/// Trend by centered moving average; seasonal by periodic means of the
/// detrended series when a period is given and at least two cycles fit.
pub fn ma_decompose(signal: &[f64], window: usize, period: Option<usize>) -> Result<TsrComponents> {
    let n = signal.len();
    if window % 2 == 0 || window < 3 || window > n {
        return Err(Error::Input(format!(
            "moving-average window must be odd and within [3, {n}], got {window}"
        )));
    }
    let trend = centered_moving_average(signal, window);
    let detrended: Vec<f64> = signal.iter().zip(&trend).map(|(x, t)| x - t).collect();
    let (seasonal, dominant_period) = match period {
        Some(p) if p >= 2 && 2 * p <= n => (periodic_means(&detrended, p), p),
        _ => (vec![0.0; n], 0),
    };
    let residual = detrended.iter().zip(&seasonal).map(|(d, s)| d - s).collect();
    Ok(TsrComponents {
        trend,
        seasonal,
        residual,
        dominant_period,
    })
}

/// Local linear regression with tricube weights over the `span` nearest
/// neighbours of each point on a uniform grid.
pub fn loess(y: &[f64], span: usize) -> Vec<f64> {
    let n = y.len();
    if n == 0 {
        return vec![];
    }
    let q = span.clamp(1, n);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(q / 2).min(n - q);
            let window = start..start + q;
            let max_dist = window.clone().map(|j| i.abs_diff(j)).max().unwrap_or(0) as f64;
            if max_dist == 0.0 {
                return y[i];
            }
            // widen slightly so the farthest neighbour keeps a small weight
            let h = max_dist * 1.001;
            let mut sw = 0.0;
            let mut sx = 0.0;
            let mut sy = 0.0;
            let weights: Vec<(f64, f64, f64)> = window
                .map(|j| {
                    let u = (i.abs_diff(j) as f64 / h).min(1.0);
                    let w = (1.0 - u * u * u).powi(3);
                    (w, j as f64, y[j])
                })
                .collect();
            for &(w, x, v) in &weights {
                sw += w;
                sx += w * x;
                sy += w * v;
            }
            let (xm, ym) = (sx / sw, sy / sw);
            let (mut sxx, mut sxy) = (0.0, 0.0);
            for &(w, x, v) in &weights {
                sxx += w * (x - xm) * (x - xm);
                sxy += w * (x - xm) * (v - ym);
            }
            if sxx <= 1e-12 * sw {
                ym
            } else {
                ym + sxy / sxx * (i as f64 - xm)
            }
        })
        .collect()
}

/// Subtract the mean of each consecutive cycle; a trailing partial cycle uses
/// the mean of the last full period of samples.
fn center_per_cycle(seasonal: &mut [f64], period: usize) {
    let n = seasonal.len();
    let mut start = 0;
    while start < n {
        let end = (start + period).min(n);
        let (lo, hi) = if end - start == period {
            (start, end)
        } else {
            (n.saturating_sub(period), n)
        };
        let mean = seasonal[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        for v in &mut seasonal[start..end] {
            *v -= mean;
        }
        start = end;
    }
}

/// Span used to smooth each cycle-subseries.
const SUBSERIES_SPAN: usize = 7;
const STL_PASSES: usize = 2;

/// Default trend span: the smallest odd integer at least 1.5 periods long.
pub fn default_loess_width(period: usize) -> usize {
    let w = (3 * period).div_ceil(2);
    w | 1
}

/// Simplified STL: two passes of cycle-subseries smoothing and LOESS trend,
/// no robustness weights.
pub fn stl_decompose(signal: &[f64], period: usize, loess_width: usize) -> Result<TsrComponents> {
    let n = signal.len();
    if period < 2 {
        return Err(Error::Input(format!("STL period must be at least 2, got {period}")));
    }
    if n < 2 * period {
        return Err(Error::Input(format!(
            "STL needs at least two periods ({}) of data, got {n}",
            2 * period
        )));
    }
    if loess_width < 3 {
        return Err(Error::Input(format!("LOESS width must be at least 3, got {loess_width}")));
    }
    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    for _ in 0..STL_PASSES {
        let detrended: Vec<f64> = signal.iter().zip(&trend).map(|(x, t)| x - t).collect();
        for phase in 0..period {
            let sub: Vec<f64> = detrended.iter().skip(phase).step_by(period).copied().collect();
            let smooth = loess(&sub, SUBSERIES_SPAN);
            for (c, v) in smooth.into_iter().enumerate() {
                seasonal[phase + c * period] = v;
            }
        }
        center_per_cycle(&mut seasonal, period);
        let deseasonalized: Vec<f64> = signal.iter().zip(&seasonal).map(|(x, s)| x - s).collect();
        trend = loess(&deseasonalized, loess_width);
    }
    let residual = (0..n).map(|i| signal[i] - trend[i] - seasonal[i]).collect();
    Ok(TsrComponents {
        trend,
        seasonal,
        residual,
        dominant_period: period,
    })
}
