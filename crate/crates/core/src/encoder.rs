//! Window encoder: quantized feature values are bound to their feature
//! vectors and bundled per channel, each channel bundle is bound to its
//! channel vector, and the channel bundles are bundled into one window
//! hypervector.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypervector::{bundle_bound, seeded_rng, Hypervector, LevelTable};
use crate::window::FeatureWindow;

const STREAM_ITEMS: u64 = 1;
const STREAM_LEVELS: u64 = 2;
const STREAM_TIE: u64 = 3;

/// Lower/upper robust percentiles used for normalization bounds.
pub const LOWER_PERCENTILE: f64 = 1.0;
pub const UPPER_PERCENTILE: f64 = 99.0;

/// How feature-level bindings are combined into one window vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bundling {
    /// Bundle features within each channel, bind with the channel vector,
    /// then bundle channels.
    #[default]
    TwoStage,
    /// Bundle `level ^ feature ^ channel` over all (channel, feature) pairs
    /// at once. Kept for ablations.
    SingleStage,
}

impl Bundling {
    pub fn code(self) -> u8 {
        match self {
            Bundling::TwoStage => 0,
            Bundling::SingleStage => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Bundling::TwoStage),
            1 => Some(Bundling::SingleStage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemMemoryConfig {
    pub dim: usize,
    pub num_levels: usize,
    pub seed: u64,
    pub bundling: Bundling,
}

impl Default for ItemMemoryConfig {
    fn default() -> Self {
        Self {
            dim: crate::DEFAULT_DIM,
            num_levels: crate::DEFAULT_NUM_LEVELS,
            seed: 0,
            bundling: Bundling::TwoStage,
        }
    }
}

/// Seeded symbol vectors plus normalization bounds fitted on training data.
/// Immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemMemory {
    pub(crate) config: ItemMemoryConfig,
    pub(crate) feature_vectors: Vec<Hypervector>,
    pub(crate) channel_vectors: Vec<Hypervector>,
    pub(crate) level_table: LevelTable,
    pub(crate) bounds: Vec<Bounds>,
    pub(crate) tie_break: Hypervector,
}

impl ItemMemory {
    /// Draws item vectors from `config.seed` and fits per-feature bounds on
    /// `train` (pooled over channels).
    pub fn fit(train: &[FeatureWindow], config: ItemMemoryConfig) -> Result<Self> {
        let first = train.first().ok_or(Error::EmptyTrainingSet)?;
        let (n_channels, n_features) = (first.n_channels(), first.n_features());
        for w in train {
            check_shape(w, n_channels, n_features)?;
        }

        let mut memory = Self::generate(n_channels, n_features, config)?;
        let mut column = Vec::with_capacity(train.len() * n_channels);
        for f in 0..n_features {
            column.clear();
            for w in train {
                for c in 0..n_channels {
                    column.push(w.value(c, f));
                }
            }
            memory.bounds[f] = robust_bounds(&mut column);
        }
        Ok(memory)
    }

    /// Item vectors only, with placeholder bounds `[0, 1]`.
    pub fn generate(n_channels: usize, n_features: usize, config: ItemMemoryConfig) -> Result<Self> {
        if n_channels == 0 || n_features == 0 {
            return Err(Error::InvalidParameter("item memory needs at least one channel and one feature"));
        }
        let mut items = seeded_rng(config.seed, STREAM_ITEMS);
        let feature_vectors = (0..n_features)
            .map(|_| Hypervector::random_from(config.dim, &mut items))
            .collect::<Result<Vec<_>>>()?;
        let channel_vectors = (0..n_channels)
            .map(|_| Hypervector::random_from(config.dim, &mut items))
            .collect::<Result<Vec<_>>>()?;
        let level_table =
            LevelTable::build_from(config.dim, config.num_levels, &mut seeded_rng(config.seed, STREAM_LEVELS))?;
        let tie_break = Hypervector::random_from(config.dim, &mut seeded_rng(config.seed, STREAM_TIE))?;
        Ok(Self {
            config,
            feature_vectors,
            channel_vectors,
            level_table,
            bounds: alloc::vec![Bounds { min: 0.0, max: 1.0 }; n_features],
            tie_break,
        })
    }

    pub(crate) fn from_parts(
        config: ItemMemoryConfig,
        feature_vectors: Vec<Hypervector>,
        channel_vectors: Vec<Hypervector>,
        level_table: LevelTable,
        bounds: Vec<Bounds>,
        tie_break: Hypervector,
    ) -> Result<Self> {
        if bounds.len() != feature_vectors.len() {
            return Err(Error::LengthMismatch {
                left: feature_vectors.len(),
                right: bounds.len(),
            });
        }
        Ok(Self {
            config,
            feature_vectors,
            channel_vectors,
            level_table,
            bounds,
            tie_break,
        })
    }

    pub fn config(&self) -> ItemMemoryConfig {
        self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn n_channels(&self) -> usize {
        self.channel_vectors.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_vectors.len()
    }

    pub fn feature_vectors(&self) -> &[Hypervector] {
        &self.feature_vectors
    }

    pub fn channel_vectors(&self) -> &[Hypervector] {
        &self.channel_vectors
    }

    pub fn level_table(&self) -> &LevelTable {
        &self.level_table
    }

    pub fn bounds(&self) -> &[Bounds] {
        &self.bounds
    }

    /// The experiment-wide tie-break vector used by every binarization.
    pub fn tie_break(&self) -> &Hypervector {
        &self.tie_break
    }

    pub fn quantize(&self, feature: usize, value: f64) -> usize {
        quantize(value, self.bounds[feature], self.config.num_levels)
    }

    pub fn encode(&self, window: &FeatureWindow) -> Result<Hypervector> {
        check_shape(window, self.n_channels(), self.n_features())?;
        match self.config.bundling {
            Bundling::TwoStage => {
                let mut channel_hvs = Vec::with_capacity(self.n_channels());
                for c in 0..self.n_channels() {
                    let terms: Vec<[&Hypervector; 2]> = self
                        .feature_vectors
                        .iter()
                        .enumerate()
                        .map(|(f, fv)| [self.level_table.level(self.quantize(f, window.value(c, f))), fv])
                        .collect();
                    let refs: Vec<&[&Hypervector]> = terms.iter().map(|t| t.as_slice()).collect();
                    channel_hvs.push(bundle_bound(&refs, &self.tie_break)?);
                }
                let terms: Vec<[&Hypervector; 2]> =
                    channel_hvs.iter().zip(&self.channel_vectors).map(|(h, cv)| [h, cv]).collect();
                let refs: Vec<&[&Hypervector]> = terms.iter().map(|t| t.as_slice()).collect();
                bundle_bound(&refs, &self.tie_break)
            }
            Bundling::SingleStage => {
                let mut terms: Vec<[&Hypervector; 3]> = Vec::with_capacity(self.n_channels() * self.n_features());
                for (c, channel_vec) in self.channel_vectors.iter().enumerate() {
                    for (f, feature_vec) in self.feature_vectors.iter().enumerate() {
                        let level = self.level_table.level(self.quantize(f, window.value(c, f)));
                        terms.push([level, feature_vec, channel_vec]);
                    }
                }
                let refs: Vec<&[&Hypervector]> = terms.iter().map(|t| t.as_slice()).collect();
                bundle_bound(&refs, &self.tie_break)
            }
        }
    }
}

fn check_shape(w: &FeatureWindow, n_channels: usize, n_features: usize) -> Result<()> {
    if w.n_channels() != n_channels || w.n_features() != n_features {
        return Err(Error::ShapeMismatch {
            expected_channels: n_channels,
            expected_features: n_features,
            channels: w.n_channels(),
            features: w.n_features(),
        });
    }
    Ok(())
}

/// Linear-interpolation percentile of sorted data (`p` in `[0, 100]`).
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = libm::floor(rank) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// 1st/99th percentile bounds; degenerate columns widen to `(c - 1, c + 1)`.
fn robust_bounds(column: &mut [f64]) -> Bounds {
    column.sort_unstable_by(f64::total_cmp);
    let min = percentile_sorted(column, LOWER_PERCENTILE);
    let max = percentile_sorted(column, UPPER_PERCENTILE);
    if max > min {
        Bounds { min, max }
    } else {
        Bounds {
            min: min - 1.0,
            max: min + 1.0,
        }
    }
}

/// Clip to `bounds`, then map to one of `num_levels` equal-width bins; the
/// upper bound maps to the last level. Non-finite values map to level 0.
pub fn quantize(value: f64, bounds: Bounds, num_levels: usize) -> usize {
    if value.is_nan() {
        return 0;
    }
    let v = value.clamp(bounds.min, bounds.max);
    let frac = (v - bounds.min) / (bounds.max - bounds.min);
    let idx = libm::floor(frac * num_levels as f64) as usize;
    idx.min(num_levels - 1)
}

pub fn fit_item_memory(train: &[FeatureWindow], config: ItemMemoryConfig) -> Result<ItemMemory> {
    ItemMemory::fit(train, config)
}

pub fn encode_window(window: &FeatureWindow, memory: &ItemMemory) -> Result<Hypervector> {
    memory.encode(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::hypervector::{Accumulator, Sign, Weight};

    fn window(values: Vec<f64>, n_channels: usize, n_features: usize) -> FeatureWindow {
        FeatureWindow::new(0.0, 4.0, n_channels, n_features, values, 0).unwrap()
    }

    fn cfg(dim: usize, seed: u64) -> ItemMemoryConfig {
        ItemMemoryConfig {
            dim,
            num_levels: 20,
            seed,
            bundling: Bundling::TwoStage,
        }
    }

    #[test]
    fn quantize_edges() {
        let b = Bounds { min: 0.0, max: 10.0 };
        assert_eq!(quantize(0.0, b, 20), 0);
        assert_eq!(quantize(10.0, b, 20), 19);
        assert_eq!(quantize(12.0, b, 20), 19);
        assert_eq!(quantize(-3.0, b, 20), 0);
        assert_eq!(quantize(5.0, b, 20), 10);
        assert_eq!(quantize(4.99, b, 20), 9);
        assert_eq!(quantize(f64::NAN, b, 20), 0);
    }

    #[test]
    fn fit_rejects_empty() {
        assert_eq!(ItemMemory::fit(&[], cfg(64, 0)), Err(Error::EmptyTrainingSet));
    }

    #[test]
    fn fit_is_deterministic() {
        let train: Vec<_> = (0..10).map(|i| window(vec![i as f64, 2.0 * i as f64], 1, 2)).collect();
        let a = ItemMemory::fit(&train, cfg(1000, 4)).unwrap();
        let b = ItemMemory::fit(&train, cfg(1000, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_feature_gets_widened_bounds() {
        let train: Vec<_> = (0..10).map(|i| window(vec![3.5, i as f64], 1, 2)).collect();
        let im = ItemMemory::fit(&train, cfg(256, 4)).unwrap();
        assert_eq!(im.bounds()[0], Bounds { min: 2.5, max: 4.5 });
        assert!(im.bounds()[1].min < im.bounds()[1].max);
    }

    #[test]
    fn bounds_are_robust_percentiles() {
        // 0..=100: p1 = 1, p99 = 99 with linear interpolation.
        let train: Vec<_> = (0..=100).map(|i| window(vec![i as f64], 1, 1)).collect();
        let im = ItemMemory::fit(&train, cfg(256, 4)).unwrap();
        assert!((im.bounds()[0].min - 1.0).abs() < 1e-12);
        assert!((im.bounds()[0].max - 99.0).abs() < 1e-12);
    }

    #[test]
    fn item_vector_counts() {
        let im = ItemMemory::generate(18, 46, cfg(10_000, 1)).unwrap();
        assert_eq!(im.feature_vectors().len() + im.channel_vectors().len(), 64);
        assert_eq!(im.level_table().num_levels(), 20);
    }

    #[test]
    fn item_vectors_are_quasi_orthogonal() {
        let im = ItemMemory::generate(18, 46, cfg(10_000, 1)).unwrap();
        let all: Vec<_> = im.feature_vectors().iter().chain(im.channel_vectors()).collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                let s = all[i].similarity(all[j]).unwrap();
                assert!((s - 0.5).abs() <= 0.03, "{i},{j}: {s}");
            }
        }
    }

    #[test]
    fn single_channel_single_feature_is_one_binding() {
        let train = vec![window(vec![0.0], 1, 1), window(vec![10.0], 1, 1)];
        let im = ItemMemory::fit(&train, cfg(1000, 9)).unwrap();
        let w = window(vec![5.0], 1, 1);
        let level = im.level_table().level(im.quantize(0, 5.0));
        let inner = level.bind(&im.feature_vectors()[0]).unwrap();
        let expected = inner.bind(&im.channel_vectors()[0]).unwrap();
        assert_eq!(im.encode(&w).unwrap(), expected);
    }

    #[test]
    fn encode_never_reads_the_label() {
        let train: Vec<_> = (0..5).map(|i| window(vec![i as f64, 1.0 + i as f64], 2, 1)).collect();
        let im = ItemMemory::fit(&train, cfg(512, 2)).unwrap();
        let mut a = window(vec![1.0, 2.0], 2, 1);
        let h0 = im.encode(&a).unwrap();
        a.label = 1;
        assert_eq!(im.encode(&a).unwrap(), h0);
    }

    #[test]
    fn encode_rejects_wrong_shape() {
        let train = vec![window(vec![0.0, 1.0], 1, 2)];
        let im = ItemMemory::fit(&train, cfg(128, 2)).unwrap();
        assert!(matches!(im.encode(&window(vec![0.0; 3], 1, 3)), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn one_level_step_keeps_encodings_close() {
        // 18 channels x 36 features; perturb one feature of one channel by
        // exactly one quantization step.
        let (nc, nf) = (18, 36);
        for seed in 0..50u64 {
            let mut im = ItemMemory::generate(nc, nf, cfg(10_000, seed)).unwrap();
            for b in im.bounds.iter_mut() {
                *b = Bounds { min: 0.0, max: 20.0 };
            }
            let base: Vec<f64> = (0..nc * nf).map(|k| ((k * 7 + seed as usize) % 19) as f64 + 0.5).collect();
            let mut moved = base.clone();
            let k = (seed as usize * 13) % (nc * nf);
            moved[k] += 1.0;
            let a = im.encode(&window(base, nc, nf)).unwrap();
            let b = im.encode(&window(moved, nc, nf)).unwrap();
            let s = a.similarity(&b).unwrap();
            assert!(s >= 0.9, "seed {seed}: {s}");
        }
    }

    #[test]
    fn single_stage_is_available() {
        let train: Vec<_> = (0..5).map(|i| window(vec![i as f64, 1.0, 2.0, i as f64], 2, 2)).collect();
        let mut c = cfg(512, 3);
        c.bundling = Bundling::SingleStage;
        let im = ItemMemory::fit(&train, c).unwrap();
        let a = im.encode(&train[1]).unwrap();
        assert_eq!(a, im.encode(&train[1]).unwrap());
        assert_eq!(a.dim(), 512);
    }

    fn reference_encode(im: &ItemMemory, w: &FeatureWindow) -> Hypervector {
        let dim = im.level_table().dim();
        let tie = im.tie_break.clone();
        let per_channel = |c: usize, acc: &mut Accumulator, extra: Option<&Hypervector>| {
            for f in 0..w.n_features() {
                let mut v = im.level_table().level(im.quantize(f, w.value(c, f))).bind(&im.feature_vectors()[f]).unwrap();
                if let Some(e) = extra {
                    v = v.bind(e).unwrap();
                }
                acc.accumulate(&v, Weight::ONE, Sign::Add).unwrap();
            }
        };
        let mut outer = Accumulator::new(dim).unwrap();
        for c in 0..w.n_channels() {
            match im.config.bundling {
                Bundling::TwoStage => {
                    let mut inner = Accumulator::new(dim).unwrap();
                    per_channel(c, &mut inner, None);
                    let h = inner.binarize(&tie).unwrap().bind(&im.channel_vectors()[c]).unwrap();
                    outer.accumulate(&h, Weight::ONE, Sign::Add).unwrap();
                }
                Bundling::SingleStage => per_channel(c, &mut outer, Some(&im.channel_vectors()[c])),
            }
        }
        outer.binarize(&tie).unwrap()
    }

    #[test]
    fn encode_matches_accumulator_reference() {
        for bundling in [Bundling::TwoStage, Bundling::SingleStage] {
            for (nc, nf) in [(1, 1), (2, 3), (4, 6), (3, 8)] {
                let train: Vec<_> = (0..8)
                    .map(|i| window((0..nc * nf).map(|k| ((i * 5 + k * 3) % 11) as f64).collect(), nc, nf))
                    .collect();
                let mut c = cfg(777, 5);
                c.bundling = bundling;
                let im = ItemMemory::fit(&train, c).unwrap();
                for w in &train {
                    assert_eq!(im.encode(w).unwrap(), reference_encode(&im, w), "{bundling:?} {nc}x{nf}");
                }
            }
        }
    }
}
