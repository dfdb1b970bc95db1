use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TIME_EPS: f64 = 1e-9;

/// Binary labels sampled every `step_sec` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSequence {
    labels: Vec<u8>,
    step_sec: f64,
}

impl LabelSequence {
    pub fn new(labels: Vec<u8>, step_sec: f64) -> Result<Self> {
        if !(step_sec > 0.0) || !step_sec.is_finite() {
            return Err(Error::InvalidParameter("label step must be positive"));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidParameter("labels must be 0 or 1"));
        }
        Ok(Self { labels, step_sec })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn step_sec(&self) -> f64 {
        self.step_sec
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn into_labels(self) -> Vec<u8> {
        self.labels
    }
}

/// Centered moving-window majority vote over `round(sw_len_sec / step)`
/// labels. Windows are truncated at the edges; ties resolve to 1.
pub fn smooth_labels(seq: &LabelSequence, sw_len_sec: f64) -> Result<LabelSequence> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(sw_len_sec + TIME_EPS >= seq.step_sec) {
        return Err(Error::InvalidParameter("smoothing window shorter than the label step"));
    }
    let width = (libm::round(sw_len_sec / seq.step_sec) as usize).max(1);
    let left = (width - 1) / 2;
    let right = width / 2;
    let n = seq.len();

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0usize);
    for &l in &seq.labels {
        prefix.push(prefix.last().unwrap() + l as usize);
    }
    let labels = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right + 1).min(n);
            let ones = prefix[hi] - prefix[lo];
            (2 * ones >= hi - lo) as u8
        })
        .collect();
    Ok(LabelSequence {
        labels,
        step_sec: seq.step_sec,
    })
}

/// Fills every run of zeros lasting strictly less than `gap_sec` that sits
/// between two runs of ones. Idempotent.
pub fn merge_events(seq: &LabelSequence, gap_sec: f64) -> LabelSequence {
    let mut labels = seq.labels.clone();
    let n = labels.len();
    let mut i = 0;
    let mut seen_one = false;
    while i < n {
        if labels[i] == 1 {
            seen_one = true;
            i += 1;
            continue;
        }
        let start = i;
        while i < n && labels[i] == 0 {
            i += 1;
        }
        let duration = (i - start) as f64 * seq.step_sec;
        if seen_one && i < n && duration < gap_sec - TIME_EPS {
            labels[start..i].iter_mut().for_each(|l| *l = 1);
        }
    }
    LabelSequence {
        labels,
        step_sec: seq.step_sec,
    }
}

/// Smoothing followed by event merging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostProcess {
    pub smooth_sec: f64,
    pub merge_gap_sec: f64,
}

impl Default for PostProcess {
    fn default() -> Self {
        Self {
            smooth_sec: 5.0,
            merge_gap_sec: 30.0,
        }
    }
}

impl PostProcess {
    pub fn apply(&self, seq: &LabelSequence) -> Result<LabelSequence> {
        let smoothed = smooth_labels(seq, self.smooth_sec)?;
        Ok(merge_events(&smoothed, self.merge_gap_sec))
    }
}

pub fn postprocess(seq: &LabelSequence, params: &PostProcess) -> Result<LabelSequence> {
    params.apply(seq)
}
