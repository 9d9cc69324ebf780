use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// One-sided spectrum of a real signal: bins `0..=len/2` at `k / len` cycles per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coeffs: Vec<Complex64>,
    /// Length of the time-domain signal.
    pub len: usize,
}

impl Spectrum {
    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); len / 2 + 1],
            len,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.coeffs.len()
    }

    pub fn freq(&self, bin: usize) -> f64 {
        bin as f64 / self.len as f64
    }

    /// Multiplicity of a bin in the full two-sided spectrum.
    pub fn multiplicity(&self, bin: usize) -> f64 {
        if bin == 0 || (self.len % 2 == 0 && bin == self.len / 2) {
            1.0
        } else {
            2.0
        }
    }

    /// `sum x[t]^2` of the time-domain signal, via Parseval.
    pub fn energy(&self) -> f64 {
        energy_of(&self.coeffs, self.len)
    }

    /// Energy-weighted mean frequency over the one-sided bins; `None` when empty.
    pub fn mean_frequency(&self) -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for (b, c) in self.coeffs.iter().enumerate() {
            let p = c.norm_sqr();
            num += self.freq(b) * p;
            den += p;
        }
        (den > 0.0).then(|| num / den)
    }
}

pub(crate) fn energy_of(coeffs: &[Complex64], len: usize) -> f64 {
    let mut total = 0.0;
    for (b, c) in coeffs.iter().enumerate() {
        let m = if b == 0 || (len % 2 == 0 && b == len / 2) { 1.0 } else { 2.0 };
        total += m * c.norm_sqr();
    }
    total / len as f64
}

pub fn dft(signal: &[f64]) -> Result<Spectrum> {
    if signal.len() < 2 {
        return Err(Error::Input(format!(
            "a transform needs at least 2 samples, got {}",
            signal.len()
        )));
    }
    let n = signal.len();
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    Ok(Spectrum { coeffs: buf, len: n })
}

pub fn idft(spectrum: &Spectrum) -> Result<Vec<f64>> {
    let n = spectrum.len;
    if n < 2 || spectrum.coeffs.len() != n / 2 + 1 {
        return Err(Error::Input(format!(
            "spectrum with {} bins does not describe a signal of length {n}",
            spectrum.coeffs.len()
        )));
    }
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    full[..spectrum.coeffs.len()].copy_from_slice(&spectrum.coeffs);
    for k in 1..n.div_ceil(2) {
        full[n - k] = spectrum.coeffs[k].conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut full);
    let scale = 1.0 / n as f64;
    Ok(full.into_iter().map(|c| c.re * scale).collect())
}
