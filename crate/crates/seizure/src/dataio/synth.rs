//! Piecewise-stationary synthetic EEG-like recordings.
//!
//! Each sample belongs to one state: a seizure state inside annotated
//! intervals, otherwise one of several background states chosen in dwell
//! segments. A state is a sum of sinusoids plus AR(1) coloured noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Annotation, Recording};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub freq_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateProfile {
    pub name: String,
    /// Relative share of background time; ignored for the seizure state.
    pub weight: f64,
    pub oscillations: Vec<Oscillation>,
    pub noise_amplitude: f64,
    /// AR(1) coefficient in `[0, 1)`; 0 is white noise.
    pub noise_color: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub duration_sec: f64,
    pub fs: f64,
    pub channels: Vec<String>,
    pub background: Vec<StateProfile>,
    pub seizure: StateProfile,
    pub n_seizures: usize,
    /// Seizure length range, seconds.
    pub seizure_sec: (f64, f64),
    /// Background dwell range, seconds.
    pub dwell_sec: (f64, f64),
    /// Relative per-subject jitter of oscillation frequencies.
    pub freq_jitter: f64,
}

fn osc(freq_hz: f64, amplitude: f64) -> Oscillation {
    Oscillation { freq_hz, amplitude }
}

impl SynthSpec {
    /// Three background modes of unequal share and one seizure mode.
    pub fn multimodal(duration_sec: f64, fs: f64, n_channels: usize, n_seizures: usize) -> Self {
        let state = |name: &str, weight: f64, oscillations: Vec<Oscillation>, noise: f64| StateProfile {
            name: name.into(),
            weight,
            oscillations,
            noise_amplitude: noise,
            noise_color: 0.9,
        };
        Self {
            duration_sec,
            fs,
            channels: (0..n_channels).map(|c| format!("CH{}", c + 1)).collect(),
            background: vec![
                state("alpha", 0.6, vec![osc(10.0, 20.0)], 10.0),
                state("beta", 0.25, vec![osc(22.0, 45.0), osc(6.0, 25.0)], 10.0),
                state("delta", 0.15, vec![osc(2.0, 60.0), osc(6.0, 25.0)], 10.0),
            ],
            seizure: state("seizure", 1.0, vec![osc(6.0, 45.0), osc(2.0, 30.0), osc(22.0, 25.0)], 10.0),
            n_seizures,
            seizure_sec: (20.0, 40.0),
            dwell_sec: (5.0, 30.0),
            freq_jitter: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("synthetic spec: {m}")));
        if !(self.fs > 0.0 && self.duration_sec > 0.0) {
            return bad("fs and duration must be positive");
        }
        if self.channels.is_empty() || self.background.is_empty() {
            return bad("need at least one channel and one background state");
        }
        if self.background.iter().any(|s| !(s.weight > 0.0)) {
            return bad("background weights must be positive");
        }
        let (lo, hi) = self.seizure_sec;
        if !(lo > 0.0 && lo <= hi) || !(self.dwell_sec.0 > 0.0 && self.dwell_sec.0 <= self.dwell_sec.1) {
            return bad("length ranges must be positive and ordered");
        }
        if self.n_seizures as f64 * hi > self.duration_sec {
            return bad("seizure time exceeds the recording duration");
        }
        let all = self.background.iter().chain(std::iter::once(&self.seizure));
        for s in all {
            if !(0.0..1.0).contains(&s.noise_color) {
                return bad("noise_color must be in [0, 1)");
            }
        }
        Ok(())
    }
}

/// Evenly spread seizures: one per equal slot, at a random offset.
fn place_seizures(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Annotation> {
    let slot = spec.duration_sec / spec.n_seizures.max(1) as f64;
    (0..spec.n_seizures)
        .map(|k| {
            let len = rng.random_range(spec.seizure_sec.0..=spec.seizure_sec.1);
            let start = k as f64 * slot + rng.random_range(0.0..=(slot - len));
            (start, start + len)
        })
        .collect()
}

fn pick_state(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Deterministic in `(spec, seed)`; annotations are stored in the recording.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<Recording> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (spec.duration_sec * spec.fs).round() as usize;
    let annotations = place_seizures(spec, &mut rng);

    // state index per sample: background states first, seizure last
    let seizure_state = spec.background.len();
    let weights: Vec<f64> = spec.background.iter().map(|s| s.weight).collect();
    let mut state = vec![0usize; n];
    let mut i = 0;
    while i < n {
        let s = pick_state(&weights, &mut rng);
        let dwell = rng.random_range(spec.dwell_sec.0..=spec.dwell_sec.1);
        let end = (i + (dwell * spec.fs) as usize).clamp(i + 1, n);
        state[i..end].fill(s);
        i = end;
    }
    for &(s, e) in &annotations {
        let a = (s * spec.fs).ceil() as usize;
        let b = ((e * spec.fs).ceil() as usize).min(n);
        state[a..b].fill(seizure_state);
    }

    let profiles: Vec<&StateProfile> = spec.background.iter().chain(std::iter::once(&spec.seizure)).collect();
    let jitter: Vec<Vec<f64>> = profiles
        .iter()
        .map(|p| {
            p.oscillations
                .iter()
                .map(|_| 1.0 + spec.freq_jitter * rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    let mut samples = Vec::with_capacity(spec.channels.len());
    for _ in &spec.channels {
        let gain = rng.random_range(0.8..=1.2);
        let phases: Vec<Vec<f64>> = profiles
            .iter()
            .map(|p| p.oscillations.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect())
            .collect();
        let mut noise = 0.0f64;
        let mut x = Vec::with_capacity(n);
        for (t, &s) in state.iter().enumerate() {
            let p = profiles[s];
            let time = t as f64 / spec.fs;
            let mut v = 0.0;
            for ((o, ph), j) in p.oscillations.iter().zip(&phases[s]).zip(&jitter[s]) {
                v += o.amplitude * (2.0 * PI * o.freq_hz * j * time + ph).sin();
            }
            let e: f64 = StandardNormal.sample(&mut rng);
            noise = p.noise_color * noise + (1.0 - p.noise_color * p.noise_color).sqrt() * e;
            x.push(gain * (v + p.noise_amplitude * noise));
        }
        samples.push(x);
    }
    Recording::new(spec.fs, spec.channels.clone(), samples, annotations)
}
