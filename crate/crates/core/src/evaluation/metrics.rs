use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::labels::LabelSequence;
use crate::error::{Error, Result};

/// Maximal runs of ones as half-open index ranges.
pub fn blocks(labels: &[u8]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        if labels[i] == 1 {
            let start = i;
            while i < labels.len() && labels[i] == 1 {
                i += 1;
            }
            out.push((start, i));
        } else {
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Sensitivity, precision and F1 at one level, with the raw counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelScores {
    pub counts: Counts,
    pub tpr: f64,
    pub ppv: f64,
    pub f1: f64,
}

impl LevelScores {
    /// Empty denominators: with no true positives possible and nothing
    /// predicted both rates are 1; otherwise an empty denominator gives 0.
    pub fn from_counts(counts: Counts) -> Self {
        let Counts { tp, fp, fn_ } = counts;
        let tpr = if tp + fn_ == 0 {
            if fp == 0 { 1.0 } else { 0.0 }
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let ppv = if tp + fp == 0 {
            if fn_ == 0 { 1.0 } else { 0.0 }
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let f1 = if tpr + ppv == 0.0 {
            0.0
        } else {
            2.0 * tpr * ppv / (tpr + ppv)
        };
        Self { counts, tpr, ppv, f1 }
    }
}

fn check_pair(pred: &LabelSequence, truth: &LabelSequence) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if (pred.step_sec() - truth.step_sec()).abs() > 1e-12 {
        return Err(Error::InvalidParameter("label sequences have different steps"));
    }
    Ok(())
}

/// Block-level scoring. A true block hit by any predicted block is one TP
/// however many fragments hit it; a predicted block touching no true block
/// is one FP; a predicted block spanning several true blocks makes each of
/// them a TP.
pub fn episode_metrics(pred: &LabelSequence, truth: &LabelSequence) -> Result<LevelScores> {
    check_pair(pred, truth)?;
    Ok(LevelScores::from_counts(episode_counts(pred.labels(), truth.labels())))
}

fn episode_counts(pred: &[u8], truth: &[u8]) -> Counts {
    let any_one = |labels: &[u8], (s, e): (usize, usize)| labels[s..e].contains(&1);
    let truth_blocks = blocks(truth);
    let tp = truth_blocks.iter().filter(|b| any_one(pred, **b)).count();
    let fp = blocks(pred).into_iter().filter(|b| !any_one(truth, *b)).count();
    Counts {
        tp,
        fp,
        fn_: truth_blocks.len() - tp,
    }
}

/// Per-sample scoring.
pub fn duration_metrics(pred: &LabelSequence, truth: &LabelSequence) -> Result<LevelScores> {
    check_pair(pred, truth)?;
    let mut counts = Counts::default();
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        match (p, t) {
            (1, 1) => counts.tp += 1,
            (1, 0) => counts.fp += 1,
            (0, 1) => counts.fn_ += 1,
            _ => {}
        }
    }
    Ok(LevelScores::from_counts(counts))
}

pub fn f1_de_mean(f1_episode: f64, f1_duration: f64) -> f64 {
    0.5 * (f1_episode + f1_duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episode: LevelScores,
    pub duration: LevelScores,
    pub f1_de_mean: f64,
}

impl MetricsReport {
    pub fn new(episode: LevelScores, duration: LevelScores) -> Self {
        Self {
            episode,
            duration,
            f1_de_mean: f1_de_mean(episode.f1, duration.f1),
        }
    }

    /// The seven scores in report column order: episode TPR/PPV/F1,
    /// duration TPR/PPV/F1, F1DEmean.
    pub fn scores(&self) -> [f64; 7] {
        [
            self.episode.tpr,
            self.episode.ppv,
            self.episode.f1,
            self.duration.tpr,
            self.duration.ppv,
            self.duration.f1,
            self.f1_de_mean,
        ]
    }
}

/// Episode and duration scores of already post-processed predictions.
pub fn evaluate(pred: &LabelSequence, truth: &LabelSequence) -> Result<MetricsReport> {
    Ok(MetricsReport::new(episode_metrics(pred, truth)?, duration_metrics(pred, truth)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(labels: &[u8]) -> LabelSequence {
        LabelSequence::new(labels.to_vec(), 1.0).unwrap()
    }

    fn with_blocks(n: usize, bs: &[(usize, usize)]) -> LabelSequence {
        let mut l = alloc::vec![0u8; n];
        for &(s, e) in bs {
            l[s..=e].iter_mut().for_each(|x| *x = 1);
        }
        seq(&l)
    }

    #[test]
    fn perfect_prediction() {
        let t = with_blocks(40, &[(3, 8), (20, 30)]);
        let r = evaluate(&t, &t).unwrap();
        assert_eq!(r.scores(), [1.0; 7]);
    }

    #[test]
    fn missed_everything() {
        let t = with_blocks(40, &[(3, 8)]);
        let p = seq(&[0; 40]);
        let e = episode_metrics(&p, &t).unwrap();
        assert_eq!((e.tpr, e.f1), (0.0, 0.0));
    }

    #[test]
    fn fragmented_detection_example() {
        let t = with_blocks(70, &[(10, 20), (40, 50)]);
        let p = with_blocks(70, &[(12, 15), (18, 22), (60, 65)]);
        let e = episode_metrics(&p, &t).unwrap();
        assert_eq!(e.counts, Counts { tp: 1, fp: 1, fn_: 1 });
        assert_eq!((e.tpr, e.ppv, e.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn spanning_prediction_hits_both() {
        let t = with_blocks(30, &[(2, 5), (9, 12)]);
        let p = with_blocks(30, &[(4, 10)]);
        let e = episode_metrics(&p, &t).unwrap();
        assert_eq!(e.counts, Counts { tp: 2, fp: 0, fn_: 0 });
    }

    #[test]
    fn complement_has_zero_sensitivity() {
        let t = with_blocks(20, &[(5, 9)]);
        let p = seq(&t.labels().iter().map(|l| 1 - l).collect::<alloc::vec::Vec<_>>());
        let d = duration_metrics(&p, &t).unwrap();
        assert_eq!(d.tpr, 0.0);
        assert_eq!(d.f1, 0.0);
    }

    #[test]
    fn empty_denominator_conventions() {
        let none = seq(&[0; 10]);
        let some = with_blocks(10, &[(2, 3)]);
        let r = episode_metrics(&none, &none).unwrap();
        assert_eq!((r.tpr, r.ppv, r.f1), (1.0, 1.0, 1.0));
        let r = episode_metrics(&some, &none).unwrap();
        assert_eq!((r.tpr, r.ppv, r.f1), (0.0, 0.0, 0.0));
        let r = episode_metrics(&none, &some).unwrap();
        assert_eq!((r.tpr, r.ppv, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn f1_de_mean_values() {
        assert_eq!(f1_de_mean(1.0, 1.0), 1.0);
        assert_eq!(f1_de_mean(0.0, 1.0), 0.5);
        assert!((f1_de_mean(0.6, 0.8) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            episode_metrics(&seq(&[0, 1]), &seq(&[0])),
            Err(Error::LengthMismatch { .. })
        ));
        let other_step = LabelSequence::new(alloc::vec![0, 1], 0.5).unwrap();
        assert!(duration_metrics(&seq(&[0, 1]), &other_step).is_err());
    }
}
