//! Windowed per-channel feature extraction.

pub mod entropy;
mod io;
mod registry;
pub mod spectral;

use hdc_core::FeatureWindow;
use rayon::prelude::*;

pub use io::{read_feature_csv, write_feature_csv, FeatureTable};
pub use registry::{default_name, Extractor, FeatureEntry, FeatureRegistry, DEFAULT_BINS};
pub use spectral::{Band, Welch};

use crate::error::{Error, Result};

/// Seizure interval `[start, end)` in seconds from recording start.
pub type Annotation = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub fs: f64,
    pub channels: Vec<String>,
    /// One series per channel, in microvolts.
    pub samples: Vec<Vec<f64>>,
    pub annotations: Vec<Annotation>,
}

impl Recording {
    pub fn new(fs: f64, channels: Vec<String>, samples: Vec<Vec<f64>>, annotations: Vec<Annotation>) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Invalid(format!("sampling rate {fs} must be positive")));
        }
        if channels.len() != samples.len() || channels.is_empty() {
            return Err(Error::Invalid(format!(
                "{} channel names for {} sample series",
                channels.len(),
                samples.len()
            )));
        }
        let n = samples[0].len();
        if samples.iter().any(|s| s.len() != n) {
            return Err(Error::Invalid("channels have different lengths".into()));
        }
        validate_annotations(&annotations, n as f64 / fs)?;
        Ok(Self {
            fs,
            channels,
            samples,
            annotations,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.samples[0].len()
    }

    pub fn duration_sec(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
}

/// Intervals must satisfy `0 <= start < end <= duration` and not overlap.
pub fn validate_annotations(annotations: &[Annotation], duration_sec: f64) -> Result<()> {
    let mut sorted = annotations.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(s, e) in &sorted {
        if !(s >= 0.0 && s < e && e <= duration_sec + 1e-9) {
            return Err(Error::Invalid(format!(
                "annotation [{s}, {e}) is not inside a {duration_sec} s recording"
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::Invalid(format!(
                "annotations [{}, {}) and [{}, {}) overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    Ok(())
}

pub fn mean_amplitude(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Invalid("empty window".into()));
    }
    Ok(x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64)
}

/// Window length and hop in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowGrid {
    pub len: usize,
    pub hop: usize,
}

impl WindowGrid {
    pub fn new(fs: f64, window_sec: f64, step_sec: f64) -> Result<Self> {
        let len = (window_sec * fs).round() as usize;
        let hop = (step_sec * fs).round() as usize;
        if len == 0 || hop == 0 {
            return Err(Error::Invalid(format!(
                "window {window_sec} s / step {step_sec} s is empty at {fs} Hz"
            )));
        }
        Ok(Self { len, hop })
    }

    /// Start samples of all complete windows in `n_samples`.
    pub fn starts(&self, n_samples: usize) -> Vec<usize> {
        if n_samples < self.len {
            return Vec::new();
        }
        (0..=(n_samples - self.len) / self.hop).map(|k| k * self.hop).collect()
    }
}

/// 1 iff the window midpoint lies in an annotation.
pub fn label_at(midpoint: f64, annotations: &[Annotation]) -> u8 {
    annotations.iter().any(|&(s, e)| midpoint >= s && midpoint < e) as u8
}

/// Per-recording extraction state.
#[derive(Debug, Clone)]
pub struct Extraction<'a> {
    registry: &'a FeatureRegistry,
    fs: f64,
    welch: Option<Welch>,
    sampen: Vec<(usize, f64)>,
}

impl<'a> Extraction<'a> {
    pub fn new(registry: &'a FeatureRegistry, fs: f64) -> Result<Self> {
        let welch = if registry.entries().iter().any(|e| e.extractor.is_spectral()) {
            Some(Welch::new(fs)?)
        } else {
            None
        };
        let mut sampen = Vec::new();
        for e in registry.entries() {
            if let Extractor::SampleEntropy { m, r_factor } = e.extractor {
                sampen.push((m, r_factor));
            }
        }
        Ok(Self {
            registry,
            fs,
            welch,
            sampen,
        })
    }

    /// All registry features of one channel window, in registry order.
    pub fn channel(&self, x: &[f64]) -> Result<Vec<f64>> {
        let need = self.registry.min_samples(self.fs);
        if x.len() < need {
            return Err(Error::Invalid(format!("window of {} samples, registry needs {need}", x.len())));
        }
        let spectral = match &self.welch {
            Some(w) => Some(w.features(x)?),
            None => None,
        };
        let sampen = entropy::sample_entropy_batch(x, &self.sampen)?;
        let mut hist: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut probs = |bins: usize| -> Result<Vec<f64>> {
            if let Some((_, p)) = hist.iter().find(|(b, _)| *b == bins) {
                return Ok(p.clone());
            }
            let p = entropy::histogram(x, bins)?;
            hist.push((bins, p.clone()));
            Ok(p)
        };
        let mut next_sampen = 0;
        let mut out = Vec::with_capacity(self.registry.len());
        for e in self.registry.entries() {
            let v = match e.extractor {
                Extractor::MeanAmplitude => mean_amplitude(x)?,
                Extractor::TotalPower => spectral.unwrap()[0],
                Extractor::RelativePower { band } => {
                    let k = Band::ALL.iter().position(|b| *b == band).unwrap();
                    spectral.unwrap()[1 + k]
                }
                Extractor::PeakFrequency => spectral.unwrap()[7],
                Extractor::Shannon { bins } => entropy::shannon(&probs(bins)?),
                Extractor::Renyi { alpha, bins } => entropy::renyi(&probs(bins)?, alpha)?,
                Extractor::Tsallis { q, bins } => entropy::tsallis(&probs(bins)?, q)?,
                Extractor::SampleEntropy { .. } => {
                    next_sampen += 1;
                    sampen[next_sampen - 1]
                }
                Extractor::PermutationEntropy { order, delay } => entropy::permutation_entropy(x, order, delay)?,
            };
            out.push(if v.is_finite() { v } else { 0.0 });
        }
        Ok(out)
    }

    /// Features of the window starting at sample `start`, channel-major.
    pub fn window(&self, rec: &Recording, start: usize, len: usize) -> Result<FeatureWindow> {
        let mut values = Vec::with_capacity(rec.n_channels() * self.registry.len());
        for ch in &rec.samples {
            values.extend(self.channel(&ch[start..start + len])?);
        }
        let t_start = start as f64 / rec.fs;
        let t_end = (start + len) as f64 / rec.fs;
        let label = label_at(0.5 * (t_start + t_end), &rec.annotations);
        Ok(FeatureWindow::new(
            t_start,
            t_end,
            rec.n_channels(),
            self.registry.len(),
            values,
            label,
        )?)
    }
}

/// Features of the windows starting at `starts`, in the given order.
pub fn extract_at(rec: &Recording, starts: &[usize], window_len: usize, registry: &FeatureRegistry) -> Result<Vec<FeatureWindow>> {
    if let Some(&s) = starts.iter().find(|&&s| s + window_len > rec.n_samples()) {
        return Err(Error::Invalid(format!("window at sample {s} runs past the recording end")));
    }
    let ex = Extraction::new(registry, rec.fs)?;
    starts.par_iter().map(|&s| ex.window(rec, s, window_len)).collect()
}

/// Sliding-window features over the whole recording.
pub fn extract_features(
    rec: &Recording,
    window_sec: f64,
    step_sec: f64,
    registry: &FeatureRegistry,
) -> Result<Vec<FeatureWindow>> {
    let grid = WindowGrid::new(rec.fs, window_sec, step_sec)?;
    let starts = grid.starts(rec.n_samples());
    if starts.is_empty() {
        return Err(Error::Invalid(format!(
            "{} s recording is shorter than one {window_sec} s window",
            rec.duration_sec()
        )));
    }
    extract_at(rec, &starts, grid.len, registry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_recording(secs: f64, annotations: Vec<Annotation>) -> Recording {
        let fs = 256.0;
        let n = (secs * fs) as usize;
        let a: Vec<f64> = (0..n).map(|i| (2.0 * PI * 10.0 * i as f64 / fs).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| 20.0 * (2.0 * PI * 3.0 * i as f64 / fs).cos() + (i % 7) as f64).collect();
        Recording::new(fs, vec!["A-B".into(), "C-D".into()], vec![a, b], annotations).unwrap()
    }

    #[test]
    fn mean_amplitude_examples() {
        assert_eq!(mean_amplitude(&[-2.5; 10]).unwrap(), 2.5);
        assert_eq!(mean_amplitude(&[-1.0, 1.0, -1.0, 1.0]).unwrap(), 1.0);
        let x: Vec<f64> = (0..1024).map(|i| (2.0 * PI * 10.0 * i as f64 / 256.0).sin()).collect();
        assert!((mean_amplitude(&x).unwrap() - 2.0 / PI).abs() < 0.01);
        assert!(mean_amplitude(&[]).is_err());
    }

    #[test]
    fn window_count_and_labels() {
        let rec = sine_recording(60.0, vec![(10.0, 20.0)]);
        let w = extract_features(&rec, 4.0, 0.5, &FeatureRegistry::compact()).unwrap();
        assert_eq!(w.len(), 113);
        assert_eq!(w[0].n_features(), FeatureRegistry::compact().len());
        // [12, 16) lies inside the annotation
        let inside = w.iter().find(|x| x.t_start == 12.0).unwrap();
        assert_eq!(inside.label, 1);
        assert_eq!(w[0].label, 0);
        // midpoint 20.0 is outside the half-open interval
        assert_eq!(w.iter().find(|x| x.t_start == 18.0).unwrap().label, 0);
    }

    #[test]
    fn default_registry_values_are_finite() {
        let rec = sine_recording(8.0, vec![]);
        let r = FeatureRegistry::default_registry();
        let w = extract_features(&rec, 4.0, 2.0, &r).unwrap();
        assert_eq!(w.len(), 3);
        for win in &w {
            assert_eq!(win.values().len(), 2 * r.len());
            assert!(win.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn channel_order_does_not_matter() {
        let rec = sine_recording(10.0, vec![]);
        let swapped = Recording::new(
            rec.fs,
            vec![rec.channels[1].clone(), rec.channels[0].clone()],
            vec![rec.samples[1].clone(), rec.samples[0].clone()],
            vec![],
        )
        .unwrap();
        let r = FeatureRegistry::default_registry();
        let a = extract_features(&rec, 4.0, 1.0, &r).unwrap();
        let b = extract_features(&swapped, 4.0, 1.0, &r).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.channel(0), y.channel(1));
            assert_eq!(x.channel(1), y.channel(0));
        }
    }

    #[test]
    fn recording_validation() {
        assert!(Recording::new(0.0, vec!["a".into()], vec![vec![0.0]], vec![]).is_err());
        assert!(Recording::new(1.0, vec!["a".into(), "b".into()], vec![vec![0.0], vec![]], vec![]).is_err());
        assert!(Recording::new(1.0, vec!["a".into()], vec![vec![0.0; 20]], vec![(5.0, 10.0), (8.0, 12.0)]).is_err());
        assert!(Recording::new(1.0, vec!["a".into()], vec![vec![0.0; 20]], vec![(15.0, 25.0)]).is_err());
        let short = sine_recording(2.0, vec![]);
        assert!(extract_features(&short, 4.0, 0.5, &FeatureRegistry::compact()).is_err());
    }
}
