//! Welch power spectral density and band powers.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency bands, in Hz. Each band is `[lo, hi)` except that `Gamma`
/// includes its upper edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Low,
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 6] = [Band::Low, Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    pub fn edges(self) -> (f64, f64) {
        match self {
            Band::Low => (0.0, 0.5),
            Band::Delta => (0.5, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 12.0),
            Band::Beta => (12.0, 30.0),
            Band::Gamma => (30.0, 45.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }
}

/// Highest band edge; sampling rates must resolve it.
pub const MAX_BAND_HZ: f64 = 45.0;
pub const MIN_FS: f64 = 2.0 * MAX_BAND_HZ;

/// `[total power, relative low..gamma, peak frequency]`.
pub type SpectralFeatures = [f64; 8];

/// Averaged modified periodograms over 1 s Hann-tapered segments with 50%
/// overlap. The plan is built once per sampling rate and reused.
#[derive(Clone)]
pub struct Welch {
    fs: f64,
    taper: Vec<f64>,
    taper_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Welch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Welch").field("fs", &self.fs).field("segment", &self.taper.len()).finish()
    }
}

impl Welch {
    pub fn new(fs: f64) -> Result<Self> {
        if !(fs >= MIN_FS) {
            return Err(Error::Invalid(format!(
                "sampling rate {fs} Hz cannot resolve bands up to {MAX_BAND_HZ} Hz"
            )));
        }
        let n = fs.round() as usize;
        // periodic Hann
        let taper: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let taper_power = taper.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(n);
        Ok(Self {
            fs,
            taper,
            taper_power,
            fft,
        })
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn segment_len(&self) -> usize {
        self.taper.len()
    }

    /// Bin spacing in Hz.
    pub fn resolution(&self) -> f64 {
        self.fs / self.segment_len() as f64
    }

    /// One-sided PSD at frequencies `k * resolution()`, `k = 0..=n/2`.
    pub fn psd(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.segment_len();
        if x.len() < n {
            return Err(Error::Invalid(format!(
                "window of {} samples is shorter than one {n}-sample PSD segment",
                x.len()
            )));
        }
        let hop = n / 2;
        let n_segments = (x.len() - n) / hop + 1;
        let bins = n / 2 + 1;
        let mut psd = vec![0.0; bins];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for s in 0..n_segments {
            let seg = &x[s * hop..s * hop + n];
            for ((b, v), w) in buf.iter_mut().zip(seg).zip(&self.taper) {
                *b = Complex::new(v * w, 0.0);
            }
            self.fft.process(&mut buf);
            for (p, c) in psd.iter_mut().zip(&buf) {
                *p += c.norm_sqr();
            }
        }
        let scale = 1.0 / (self.fs * self.taper_power * n_segments as f64);
        for (k, p) in psd.iter_mut().enumerate() {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            *p *= scale * one_sided;
        }
        Ok(psd)
    }

    /// Total power, the six relative band powers and the peak frequency.
    ///
    /// Bin `k` carries power `psd[k] * df` spread over
    /// `[(k - 1/2) df, (k + 1/2) df]` clipped at 0, and contributes to a band
    /// in proportion to the overlap. A window with no
    /// power gets zero relative powers and a zero peak frequency.
    pub fn features(&self, x: &[f64]) -> Result<SpectralFeatures> {
        let psd = self.psd(x)?;
        let df = self.resolution();
        let total: f64 = psd.iter().sum::<f64>() * df;
        let mut out = [0.0; 8];
        out[0] = total;
        if total <= 0.0 {
            return Ok(out);
        }
        for (slot, band) in out[1..7].iter_mut().zip(Band::ALL) {
            let (lo, hi) = band.edges();
            let power: f64 = psd
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let b_lo = ((k as f64 - 0.5) * df).max(0.0);
                    let b_hi = (k as f64 + 0.5) * df;
                    p * df * (b_hi.min(hi) - b_lo.max(lo)).max(0.0) / (b_hi - b_lo)
                })
                .sum();
            *slot = power / total;
        }
        let peak = psd
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
            .0;
        out[7] = peak as f64 * df;
        Ok(out)
    }
}
