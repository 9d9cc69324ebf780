use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::benchmark::CellReport;
use crate::data_io::write_atomic;
use crate::Result;

/// Mean and sample standard deviation; `std` is 0 for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

/// Seed aggregate of one (variant, split) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub variant: String,
    pub split: f64,
    pub failed: usize,
    pub rmse: Option<MeanStd>,
    pub mae: Option<MeanStd>,
    pub peak_timing: Option<MeanStd>,
    pub peak_relative: Option<MeanStd>,
    pub beta_correlation: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub cells: Vec<CellReport>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    variant: &'a str,
    split: f64,
    seed: u64,
    t_split: usize,
    status: &'static str,
    rmse: Option<f64>,
    mae: Option<f64>,
    peak_timing: Option<usize>,
    peak_magnitude: Option<f64>,
    peak_relative: Option<f64>,
    beta_rmse: Option<f64>,
    beta_corr: Option<f64>,
    gamma_corr: Option<f64>,
    delta_corr: Option<f64>,
    best_loss: Option<f64>,
    error: Option<&'a str>,
}

impl BenchmarkReport {
    pub fn new(dataset: String, cells: Vec<CellReport>) -> Self {
        let mut keys: Vec<(String, f64)> = Vec::new();
        for c in &cells {
            if !keys.iter().any(|(v, s)| *v == c.variant && *s == c.split) {
                keys.push((c.variant.clone(), c.split));
            }
        }
        let aggregates = keys
            .into_iter()
            .map(|(variant, split)| {
                let group: Vec<&CellReport> = cells.iter().filter(|c| c.variant == variant && c.split == split).collect();
                let ok: Vec<_> = group.iter().filter_map(|c| c.scores()).collect();
                let collect = |f: &dyn Fn(&super::CellScores) -> Option<f64>| {
                    MeanStd::of(&ok.iter().filter_map(|s| f(s)).collect::<Vec<_>>())
                };
                Aggregate {
                    failed: group.len() - ok.len(),
                    rmse: collect(&|s| Some(s.rmse)),
                    mae: collect(&|s| Some(s.mae)),
                    peak_timing: collect(&|s| Some(s.peak.timing as f64)),
                    peak_relative: collect(&|s| Some(s.peak.relative)),
                    beta_correlation: collect(&|s| s.recovery.and_then(|r| r.beta.correlation)),
                    variant,
                    split,
                }
            })
            .collect();
        Self {
            dataset,
            cells,
            aggregates,
        }
    }

    pub fn aggregate(&self, variant: &str, split: f64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.variant == variant && a.split == split)
    }

    /// One row per cell.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            let s = c.scores();
            let rec = s.and_then(|s| s.recovery);
            w.serialize(CsvRow {
                variant: &c.variant,
                split: c.split,
                seed: c.seed,
                t_split: c.t_split,
                status: if s.is_some() { "ok" } else { "failed" },
                rmse: s.map(|s| s.rmse),
                mae: s.map(|s| s.mae),
                peak_timing: s.map(|s| s.peak.timing),
                peak_magnitude: s.map(|s| s.peak.magnitude),
                peak_relative: s.map(|s| s.peak.relative),
                beta_rmse: rec.map(|r| r.beta.rmse),
                beta_corr: rec.and_then(|r| r.beta.correlation),
                gamma_corr: rec.and_then(|r| r.gamma.correlation),
                delta_corr: rec.and_then(|r| r.delta.correlation),
                best_loss: s.and_then(|s| s.best_loss),
                error: match &c.outcome {
                    super::CellOutcome::Failed { error } => Some(error),
                    super::CellOutcome::Ok(_) => None,
                },
            })?;
        }
        w.flush().map_err(|e| crate::Error::Parse(e.to_string()))?;
        w.into_inner().map_err(|e| crate::Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str, overwrite: bool) -> Result<()> {
        write_atomic(&dir.join(format!("{stem}.csv")), &self.to_csv()?, overwrite)?;
        write_atomic(&dir.join(format!("{stem}.json")), self.to_json()?.as_bytes(), overwrite)
    }

    /// Plain-text table of the aggregates.
    pub fn summary_table(&self) -> String {
        let fmt = |m: Option<MeanStd>| m.map_or("-".to_string(), |m| format!("{:.4} ± {:.4}", m.mean, m.std));
        let width = self.aggregates.iter().map(|a| a.variant.len()).max().unwrap_or(7).max(7);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>19}  {:>19}  {:>17}  {:>17}  {:>6}",
            "variant", "split", "rmse", "mae", "peak timing", "beta corr", "failed"
        );
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{:<width$}  {:>5.2}  {:>19}  {:>19}  {:>17}  {:>17}  {:>6}",
                a.variant,
                a.split,
                fmt(a.rmse),
                fmt(a.mae),
                a.peak_timing.map_or("-".into(), |m| format!("{:.1} ± {:.1}", m.mean, m.std)),
                fmt(a.beta_correlation),
                a.failed
            );
        }
        out
    }
}
