//! Variational mode decomposition solved by ADMM in the frequency domain.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::{dft, energy_of, idft, Spectrum};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VmdConfig {
    /// Number of modes.
    pub k: usize,
    /// Bandwidth penalty.
    pub alpha: f64,
    /// Dual ascent step; zero gives a noise-slack solution.
    pub tau: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for VmdConfig {
    fn default() -> Self {
        Self {
            k: 3,
            alpha: 2000.0,
            tau: 0.1,
            tol: 1e-7,
            max_iter: 500,
        }
    }
}

/// Band-limited modes sorted by ascending center frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub modes: Vec<Vec<f64>>,
    /// Cycles per sample, in `[0, 0.5]`.
    pub center_freqs: Vec<f64>,
    pub iterations_used: usize,
    /// `|x - sum_k u_k|_2` over the original samples.
    pub final_residual: f64,
    /// False when `max_iter` was reached before the tolerance.
    pub converged: bool,
    /// Constraint residual `|x - sum_k u_k|_2` on the mirrored signal after each iteration.
    pub residual_history: Vec<f64>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn signal_len(&self) -> usize {
        self.modes.first().map_or(0, Vec::len)
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.signal_len()];
        for m in &self.modes {
            for (o, v) in out.iter_mut().zip(m) {
                *o += v;
            }
        }
        out
    }
}

/// Reflect the first half before and the second half after the signal.
fn mirror(signal: &[f64]) -> (Vec<f64>, usize) {
    let half = signal.len() / 2;
    let mut out = Vec::with_capacity(2 * signal.len());
    out.extend(signal[..half].iter().rev());
    out.extend_from_slice(signal);
    out.extend(signal[half..].iter().rev());
    (out, half)
}

pub fn vmd_decompose(signal: &[f64], cfg: &VmdConfig) -> Result<ModeSet> {
    let n = signal.len();
    let k_modes = cfg.k;
    if k_modes == 0 {
        return Err(Error::Input("VMD needs at least one mode".into()));
    }
    if n < 4 * k_modes {
        return Err(Error::Input(format!(
            "signal of length {n} is too short for {k_modes} modes (need {})",
            4 * k_modes
        )));
    }
    if !(cfg.alpha > 0.0) || !(cfg.tau >= 0.0) || !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::Input(format!(
            "VMD needs alpha > 0, tau >= 0, tol > 0, max_iter >= 1: {cfg:?}"
        )));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("signal contains non-finite values".into()));
    }

    let (extended, offset) = mirror(signal);
    let x_hat = dft(&extended)?;
    let m = x_hat.len;
    let bins = x_hat.num_bins();
    let freqs: Vec<f64> = (0..bins).map(|b| x_hat.freq(b)).collect();

    let zero = Complex64::new(0.0, 0.0);
    let mut u_hat = vec![vec![zero; bins]; k_modes];
    let mut sum_all = vec![zero; bins];
    let mut lambda = vec![zero; bins];
    let mut omega: Vec<f64> = (0..k_modes).map(|k| (k as f64 + 0.5) / (2.0 * k_modes as f64)).collect();
    let mut residual_history = Vec::new();
    let mut converged = false;
    let mut iterations_used = 0;
    let mut updated = vec![zero; bins];

    for _ in 0..cfg.max_iter {
        iterations_used += 1;
        let mut change = 0.0;
        for k in 0..k_modes {
            let (mut diff, mut prev, mut num, mut den) = (0.0, 0.0, 0.0, 0.0);
            for b in 0..bins {
                let others = sum_all[b] - u_hat[k][b];
                let weight = 1.0 + 2.0 * cfg.alpha * (freqs[b] - omega[k]).powi(2);
                let new = (x_hat.coeffs[b] - others + 0.5 * lambda[b]) / weight;
                diff += x_hat.multiplicity(b) * (new - u_hat[k][b]).norm_sqr();
                prev += x_hat.multiplicity(b) * u_hat[k][b].norm_sqr();
                let p = new.norm_sqr();
                num += freqs[b] * p;
                den += p;
                sum_all[b] = others + new;
                updated[b] = new;
            }
            std::mem::swap(&mut u_hat[k], &mut updated);
            if den > 0.0 {
                omega[k] = num / den;
            }
            change += if prev > 0.0 {
                diff / prev
            } else if diff > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
        }
        let mut residual = vec![zero; bins];
        for b in 0..bins {
            residual[b] = x_hat.coeffs[b] - sum_all[b];
            lambda[b] += cfg.tau * residual[b];
        }
        residual_history.push(energy_of(&residual, m).sqrt());
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("VMD stopped at max_iter={} before reaching tol={}", cfg.max_iter, cfg.tol);
    }

    let mut order: Vec<usize> = (0..k_modes).collect();
    order.sort_by(|&a, &b| omega[a].total_cmp(&omega[b]));
    let mut modes = Vec::with_capacity(k_modes);
    let mut center_freqs = Vec::with_capacity(k_modes);
    for &k in &order {
        let full = idft(&Spectrum {
            coeffs: u_hat[k].clone(),
            len: m,
        })?;
        modes.push(full[offset..offset + n].to_vec());
        center_freqs.push(omega[k].clamp(0.0, 0.5));
    }

    let mut set = ModeSet {
        modes,
        center_freqs,
        iterations_used,
        final_residual: 0.0,
        converged,
        residual_history,
    };
    let recon = set.reconstruct();
    set.final_residual = signal
        .iter()
        .zip(&recon)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(set)
}
