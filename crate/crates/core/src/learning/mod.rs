//! Prototype models and the training strategies that build them.
//!
//! Every strategy is a deterministic function of the sample order, the
//! tie-break vector and its parameters. Samples are processed exactly in the
//! order given.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::hypervector::{Accumulator, Hypervector, Sign, Weight};

mod stop;
mod strategies;

pub use stop::{StopDecision, StopRule};
pub use strategies::{
    default_scorer, fine_tune_multi_pass, reduce_centroids, train, train_multi_centroid, train_multi_pass,
    train_online, train_single_pass, MultiPassConfig, Reduction, ReductionMethod, StrategyParams, UpdateRule,
};

/// Number of classes exercised by the pipeline (non-seizure, seizure).
pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Single pass, one centroid per class.
    #[serde(rename = "2C")]
    SinglePass,
    /// Multi-pass, re-adding mispredicted samples.
    #[serde(rename = "2C+")]
    MultiPassAdd,
    /// Multi-pass, re-adding and subtracting from the wrong class.
    #[serde(rename = "2C+-")]
    MultiPassAddSubtract,
    /// Multi-centroid single pass.
    #[serde(rename = "MC")]
    MultiCentroid,
    /// Multi-centroid, then rare centroids removed.
    #[serde(rename = "MCr")]
    MultiCentroidRemoved,
    /// Multi-centroid, then rare centroids merged into neighbours.
    #[serde(rename = "MCc")]
    MultiCentroidClustered,
    /// Multi-centroid with removal, then multi-pass fine-tuning.
    #[serde(rename = "MCri")]
    MultiCentroidRefined,
    /// Weighted single pass, add only.
    #[serde(rename = "On+")]
    OnlineAdd,
    /// Weighted single pass, add and subtract.
    #[serde(rename = "On+-")]
    OnlineAddSubtract,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::SinglePass,
        Strategy::MultiPassAdd,
        Strategy::MultiPassAddSubtract,
        Strategy::MultiCentroid,
        Strategy::MultiCentroidRemoved,
        Strategy::MultiCentroidClustered,
        Strategy::MultiCentroidRefined,
        Strategy::OnlineAdd,
        Strategy::OnlineAddSubtract,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::SinglePass => "2C",
            Strategy::MultiPassAdd => "2C+",
            Strategy::MultiPassAddSubtract => "2C+-",
            Strategy::MultiCentroid => "MC",
            Strategy::MultiCentroidRemoved => "MCr",
            Strategy::MultiCentroidClustered => "MCc",
            Strategy::MultiCentroidRefined => "MCri",
            Strategy::OnlineAdd => "On+",
            Strategy::OnlineAddSubtract => "On+-",
        }
    }

    /// Compact code used in the binary model header.
    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|s| *s == self).unwrap() as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn is_multi_pass(self) -> bool {
        matches!(
            self,
            Strategy::MultiPassAdd | Strategy::MultiPassAddSubtract | Strategy::MultiCentroidRefined
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// Accepts the tags of [`Strategy::tag`]; `−` (U+2212) is read as `-`.
    fn from_str(s: &str) -> Result<Self> {
        let normalized: String = s.trim().chars().map(|c| if c == '\u{2212}' { '-' } else { c }).collect();
        Self::ALL
            .iter()
            .copied()
            .find(|st| st.tag() == normalized)
            .ok_or(Error::UnknownStrategy)
    }
}

/// One class prototype (or sub-class centroid).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Centroid {
    acc: Accumulator,
    proto: Hypervector,
    /// Total positive weight added, fixed-point (`Weight::SCALE` per sample).
    n_members: u64,
    label: u8,
}

impl Centroid {
    pub fn seeded(sample: &Hypervector, label: u8, weight: Weight, tie_break: &Hypervector) -> Result<Self> {
        let mut acc = Accumulator::new(sample.dim())?;
        acc.accumulate(sample, weight, Sign::Add)?;
        let proto = acc.binarize(tie_break)?;
        Ok(Self {
            acc,
            proto,
            n_members: weight.raw() as u64,
            label,
        })
    }

    /// Rebuilds a centroid from decoded parts; the prototype is taken as
    /// stored.
    pub fn from_parts(acc: Accumulator, proto: Hypervector, n_members: u64, label: u8) -> Result<Self> {
        check_dims(acc.dim(), proto.dim())?;
        Ok(Self {
            acc,
            proto,
            n_members,
            label,
        })
    }

    pub fn accumulator(&self) -> &Accumulator {
        &self.acc
    }

    pub fn proto(&self) -> &Hypervector {
        &self.proto
    }

    pub fn n_members_raw(&self) -> u64 {
        self.n_members
    }

    pub fn n_members(&self) -> f64 {
        self.n_members as f64 / Weight::SCALE as f64
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    /// Updates the counters only; call [`Centroid::refresh`] to re-binarize.
    pub(crate) fn add_deferred(&mut self, sample: &Hypervector, weight: Weight, sign: Sign) -> Result<()> {
        self.acc.accumulate(sample, weight, sign)?;
        if sign == Sign::Add {
            self.n_members += weight.raw() as u64;
        }
        Ok(())
    }

    pub(crate) fn refresh(&mut self, tie_break: &Hypervector) -> Result<()> {
        self.proto = self.acc.binarize(tie_break)?;
        Ok(())
    }

    pub fn update(&mut self, sample: &Hypervector, weight: Weight, sign: Sign, tie_break: &Hypervector) -> Result<()> {
        self.add_deferred(sample, weight, sign)?;
        self.refresh(tie_break)
    }

    pub(crate) fn absorb(&mut self, other: &Centroid) -> Result<()> {
        self.acc.merge(&other.acc)?;
        self.n_members += other.n_members;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub label: u8,
    pub hamming: usize,
    pub centroid: usize,
}

impl Prediction {
    pub fn similarity(&self, dim: usize) -> f64 {
        1.0 - self.hamming as f64 / dim as f64
    }
}

/// Applied-weight distribution of one class in weighted training.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightSummary {
    pub count: usize,
    pub mean: f64,
    /// Ten equal-width bins over `[0, 1]`.
    pub histogram: [u64; 10],
}

impl WeightSummary {
    pub(crate) fn record(&mut self, w: Weight) {
        let v = w.as_f64();
        self.count += 1;
        self.mean += (v - self.mean) / self.count as f64;
        let bin = ((v * 10.0) as usize).min(9);
        self.histogram[bin] += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainStats {
    /// Passes over the training data, including the initial one.
    pub passes: usize,
    /// Fraction of samples re-added in each refinement pass (pass 2 onward).
    pub readded_fraction_per_pass: Vec<f64>,
    /// Training score after each pass.
    pub train_score_per_pass: Vec<f64>,
    /// 1-based pass whose prototypes were kept.
    pub selected_pass: usize,
    /// Samples per class seen during training.
    pub class_samples: [usize; NUM_CLASSES],
    pub centroids_before_reduction: [usize; NUM_CLASSES],
    pub centroids_after_reduction: [usize; NUM_CLASSES],
    /// Weighted strategies only.
    pub weights: Option<[WeightSummary; NUM_CLASSES]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub(crate) strategy: Strategy,
    pub(crate) dim: usize,
    pub(crate) centroids: Vec<Centroid>,
    pub(crate) tie_break: Hypervector,
    pub stats: TrainStats,
}

impl Model {
    pub fn from_parts(strategy: Strategy, centroids: Vec<Centroid>, tie_break: Hypervector) -> Result<Self> {
        let dim = tie_break.dim();
        for c in &centroids {
            check_dims(dim, c.proto.dim())?;
        }
        Ok(Self {
            strategy,
            dim,
            centroids,
            tie_break,
            stats: TrainStats::default(),
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroids(&self) -> &[Centroid] {
        &self.centroids
    }

    pub fn tie_break(&self) -> &Hypervector {
        &self.tie_break
    }

    pub fn centroid_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for c in &self.centroids {
            counts[c.label as usize] += 1;
        }
        counts
    }

    /// Most similar centroid; ties go to the lower class label, then the
    /// lower centroid index.
    pub fn predict(&self, x: &Hypervector) -> Result<Prediction> {
        check_dims(self.dim, x.dim())?;
        predict_among(&self.centroids, x).ok_or(Error::EmptyModel)
    }

    pub fn predict_all(&self, xs: &[Hypervector]) -> Result<Vec<u8>> {
        xs.iter().map(|x| self.predict(x).map(|p| p.label)).collect()
    }
}

pub(crate) fn predict_among(centroids: &[Centroid], x: &Hypervector) -> Option<Prediction> {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| Prediction {
            label: c.label,
            hamming: c.proto.hamming_unchecked(x),
            centroid: i,
        })
        .min_by_key(|p| (p.hamming, p.label, p.centroid))
}

pub fn predict(model: &Model, x: &Hypervector) -> Result<Prediction> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypervector::random_hv;
    use alloc::vec;

    fn bits(s: &str) -> Hypervector {
        Hypervector::from_bits(&s.chars().map(|c| c == '1').collect::<Vec<_>>()).unwrap()
    }

    fn model_of(protos: &[(&Hypervector, u8)], tie: &Hypervector) -> Model {
        let centroids = protos
            .iter()
            .map(|(p, l)| Centroid::seeded(p, *l, Weight::ONE, tie).unwrap())
            .collect();
        Model::from_parts(Strategy::SinglePass, centroids, tie.clone()).unwrap()
    }

    #[test]
    fn strategy_tags_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.tag().parse::<Strategy>().unwrap(), s);
            assert_eq!(Strategy::from_code(s.code()), Some(s));
        }
        assert_eq!("2C+\u{2212}".parse::<Strategy>().unwrap(), Strategy::MultiPassAddSubtract);
        assert_eq!("bogus".parse::<Strategy>(), Err(Error::UnknownStrategy));
    }

    #[test]
    fn exact_match_wins() {
        let tie = random_hv(256, 0).unwrap();
        let a = random_hv(256, 1).unwrap();
        let b = random_hv(256, 2).unwrap();
        let m = model_of(&[(&a, 0), (&b, 1)], &tie);
        let p = m.predict(&b).unwrap();
        assert_eq!(p.label, 1);
        assert_eq!(p.similarity(256), 1.0);
    }

    #[test]
    fn equidistant_goes_to_class_zero() {
        let tie = bits("00000000");
        let m = model_of(&[(&bits("11110000"), 1), (&bits("00001111"), 0)], &tie);
        let p = m.predict(&bits("11111111")).unwrap();
        assert_eq!(p.label, 0);
        assert_eq!(p.centroid, 1);
    }

    #[test]
    fn predict_matches_exhaustive_argmax() {
        let tie = random_hv(64, 0).unwrap();
        for seed in 0..200u64 {
            let cs: Vec<_> = (0..3).map(|k| random_hv(64, seed * 10 + k).unwrap()).collect();
            let labels = [0u8, 1, (seed % 2) as u8];
            let m = model_of(&[(&cs[0], labels[0]), (&cs[1], labels[1]), (&cs[2], labels[2])], &tie);
            let x = random_hv(64, 5000 + seed).unwrap();
            // oracle: scan every centroid bit by bit
            let mut best: Option<(usize, u8, usize)> = None;
            for (i, c) in cs.iter().enumerate() {
                let d = (0..64).filter(|&b| c.get(b) != x.get(b)).count();
                let key = (d, labels[i], i);
                if best.map_or(true, |b| key < b) {
                    best = Some(key);
                }
            }
            let (d, l, i) = best.unwrap();
            let p = m.predict(&x).unwrap();
            assert_eq!((p.hamming, p.label, p.centroid), (d, l, i));
        }
    }

    #[test]
    fn predict_rejects_wrong_dim() {
        let tie = random_hv(64, 0).unwrap();
        let m = model_of(&[(&random_hv(64, 1).unwrap(), 0)], &tie);
        assert!(m.predict(&random_hv(65, 1).unwrap()).is_err());
        let empty = Model::from_parts(Strategy::SinglePass, vec![], tie).unwrap();
        assert_eq!(empty.predict(&random_hv(64, 1).unwrap()), Err(Error::EmptyModel));
    }
}
