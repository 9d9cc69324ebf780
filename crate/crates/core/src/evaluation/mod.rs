//! Forecast metrics, parameter recovery scoring, and the benchmark and
//! ablation runners.

mod benchmark;
mod report;

pub use benchmark::{
    ablation_variants, run_ablations, run_benchmark, score_forecast, AblationPlan, BenchmarkPlan, CellOutcome,
    CellReport, CellScores, Variant, VariantKind,
};
pub use report::{Aggregate, BenchmarkReport, MeanStd};

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::mechanistic::RateTriple;
use crate::{Error, Result};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("sequences differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Input("metrics need at least one point".into()));
    }
    Ok(())
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    Ok((sq / a.len() as f64).sqrt())
}

pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let abs: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    Ok(abs / a.len() as f64)
}

/// Index of the maximum; ties go to the earliest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakErrors {
    /// `|argmax_pred - argmax_truth|` in steps.
    pub timing: usize,
    /// `max_pred - max_truth`.
    pub magnitude: f64,
    /// `|magnitude| / max_truth`.
    pub relative: f64,
    pub predicted_index: usize,
    pub truth_index: usize,
}

/// Compare the dominant peaks of two series inside `window`.
pub fn peak_errors(predicted: &[f64], truth: &[f64], window: Range<usize>) -> Result<PeakErrors> {
    if window.is_empty() {
        return Err(Error::Input("peak window is empty".into()));
    }
    if window.end > predicted.len() || window.end > truth.len() {
        return Err(Error::Input(format!(
            "peak window {window:?} exceeds series of length {} / {}",
            predicted.len(),
            truth.len()
        )));
    }
    let p = window.start + argmax(&predicted[window.clone()]).unwrap();
    let t = window.start + argmax(&truth[window]).unwrap();
    let magnitude = predicted[p] - truth[t];
    Ok(PeakErrors {
        timing: p.abs_diff(t),
        magnitude,
        relative: magnitude.abs() / truth[t],
        predicted_index: p,
        truth_index: t,
    })
}

/// Pearson correlation; `None` when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    // rounding leaves a residue of order eps^2 * n * max^2 for constant input
    let flat = |ss: f64, v: &[f64]| {
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        ss <= n * (1e-12 * scale).powi(2)
    };
    if flat(saa, a) || flat(sbb, b) {
        return Ok(None);
    }
    Ok(Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateScore {
    pub rmse: f64,
    /// Undefined when the truth is constant.
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub beta: RateScore,
    pub gamma: RateScore,
    pub delta: RateScore,
}

/// Score inferred against true rate trajectories point by point.
pub fn parameter_recovery(inferred: &[RateTriple], truth: &[RateTriple]) -> Result<RecoveryReport> {
    if inferred.len() != truth.len() || inferred.is_empty() {
        return Err(Error::Input(format!(
            "rate trajectories must be non-empty and equal length: {} vs {}",
            inferred.len(),
            truth.len()
        )));
    }
    let score = |get: fn(&RateTriple) -> f64| -> Result<RateScore> {
        let a: Vec<f64> = inferred.iter().map(get).collect();
        let b: Vec<f64> = truth.iter().map(get).collect();
        Ok(RateScore {
            rmse: rmse(&a, &b)?,
            correlation: pearson(&a, &b)?,
        })
    };
    Ok(RecoveryReport {
        beta: score(|r| r.beta)?,
        gamma: score(|r| r.gamma)?,
        delta: score(|r| r.delta)?,
    })
}

/// Pair rollout rates with generator rates by the step they drive.
///
/// A rollout's `rates[i]` (for `i >= 1`) moved the state into point `i`,
/// while a generator's `rates[i]` moves point `i` to `i + 1`.
pub fn align_applied_rates<'a>(
    rollout_rates: &'a [RateTriple],
    truth_rates: &'a [RateTriple],
) -> (&'a [RateTriple], &'a [RateTriple]) {
    let n = rollout_rates.len().saturating_sub(1).min(truth_rates.len());
    if n == 0 {
        return (&[], &[]);
    }
    (&rollout_rates[1..=n], &truth_rates[..n])
}

#[cfg(test)]
mod tests;
