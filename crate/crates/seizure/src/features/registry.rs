use serde::{Deserialize, Serialize};

use super::spectral::Band;
use crate::error::{Error, Result};

/// Histogram bins for the distribution entropies.
pub const DEFAULT_BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extractor {
    MeanAmplitude,
    TotalPower,
    RelativePower { band: Band },
    PeakFrequency,
    Shannon { bins: usize },
    Renyi { alpha: f64, bins: usize },
    Tsallis { q: f64, bins: usize },
    SampleEntropy { m: usize, r_factor: f64 },
    PermutationEntropy { order: usize, delay: usize },
}

impl Extractor {
    pub fn is_spectral(&self) -> bool {
        matches!(
            self,
            Extractor::TotalPower | Extractor::RelativePower { .. } | Extractor::PeakFrequency
        )
    }

    /// Fewest samples a window needs for this extractor at `fs`.
    pub fn min_samples(&self, fs: f64) -> usize {
        match *self {
            Extractor::MeanAmplitude => 1,
            Extractor::TotalPower | Extractor::RelativePower { .. } | Extractor::PeakFrequency => fs.round() as usize,
            Extractor::Shannon { .. } | Extractor::Renyi { .. } | Extractor::Tsallis { .. } => 1,
            Extractor::SampleEntropy { m, .. } => m + 2,
            Extractor::PermutationEntropy { order, delay } => order * delay + 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Extractor::Shannon { bins } => bins >= 2,
            Extractor::Renyi { alpha, bins } => alpha > 0.0 && alpha != 1.0 && bins >= 2,
            Extractor::Tsallis { q, bins } => q.is_finite() && q != 1.0 && bins >= 2,
            Extractor::SampleEntropy { m, r_factor } => m >= 1 && r_factor >= 0.0,
            Extractor::PermutationEntropy { order, delay } => (2..=10).contains(&order) && delay >= 1,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid extractor parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub extractor: Extractor,
}

/// Ordered feature list; the order is the column order of every window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRegistry {
    entries: Vec<FeatureEntry>,
}

fn fmt_param(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

impl FeatureRegistry {
    pub fn new(entries: Vec<FeatureEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Invalid("feature registry is empty".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            e.extractor.validate()?;
            if e.name.is_empty() || e.name.contains([',', '.']) {
                return Err(Error::Invalid(format!("feature name {:?} must be non-empty without ',' or '.'", e.name)));
            }
            if entries[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::Invalid(format!("duplicate feature name {}", e.name)));
            }
        }
        Ok(Self { entries })
    }

    fn from_extractors(list: Vec<Extractor>) -> Self {
        let entries = list
            .into_iter()
            .map(|extractor| FeatureEntry {
                name: default_name(&extractor),
                extractor,
            })
            .collect();
        Self::new(entries).expect("built-in registries are valid")
    }

    fn spectral() -> Vec<Extractor> {
        let mut v = vec![Extractor::TotalPower];
        v.extend(Band::ALL.iter().map(|&band| Extractor::RelativePower { band }));
        v.push(Extractor::PeakFrequency);
        v
    }

    /// 8 spectral, 27 entropy and mean amplitude: 36 features.
    pub fn default_registry() -> Self {
        let mut v = Self::spectral();
        for order in [3, 5, 7] {
            for delay in [1, 2] {
                v.push(Extractor::PermutationEntropy { order, delay });
            }
        }
        for m in [2, 3] {
            for r_factor in [0.1, 0.2, 0.3] {
                v.push(Extractor::SampleEntropy { m, r_factor });
            }
        }
        for alpha in [0.5, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0] {
            v.push(Extractor::Renyi { alpha, bins: DEFAULT_BINS });
        }
        for q in [0.5, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0] {
            v.push(Extractor::Tsallis { q, bins: DEFAULT_BINS });
        }
        v.push(Extractor::Shannon { bins: DEFAULT_BINS });
        v.push(Extractor::MeanAmplitude);
        Self::from_extractors(v)
    }

    /// Every family once, without sample entropy's quadratic cost: 8
    /// spectral, permutation (order 3 and 5), Renyi, Tsallis, Shannon and
    /// mean amplitude.
    pub fn compact() -> Self {
        let mut v = Self::spectral();
        v.push(Extractor::PermutationEntropy { order: 3, delay: 1 });
        v.push(Extractor::PermutationEntropy { order: 5, delay: 1 });
        v.push(Extractor::Renyi { alpha: 2.0, bins: DEFAULT_BINS });
        v.push(Extractor::Tsallis { q: 2.0, bins: DEFAULT_BINS });
        v.push(Extractor::Shannon { bins: DEFAULT_BINS });
        v.push(Extractor::MeanAmplitude);
        Self::from_extractors(v)
    }

    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "default" => Ok(Self::default_registry()),
            "compact" => Ok(Self::compact()),
            other => Err(Error::Usage(format!("unknown feature registry {other:?} (expected default or compact)"))),
        }
    }

    pub fn entries(&self) -> &[FeatureEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn min_samples(&self, fs: f64) -> usize {
        self.entries.iter().map(|e| e.extractor.min_samples(fs)).max().unwrap_or(1)
    }
}

pub fn default_name(e: &Extractor) -> String {
    match *e {
        Extractor::MeanAmplitude => "mean_amp".into(),
        Extractor::TotalPower => "psd_total".into(),
        Extractor::RelativePower { band } => format!("rel_{}", band.name()),
        Extractor::PeakFrequency => "peak_freq".into(),
        Extractor::Shannon { bins } => format!("shannon_b{bins}"),
        Extractor::Renyi { alpha, bins } => format!("renyi_a{}_b{bins}", fmt_param(alpha)),
        Extractor::Tsallis { q, bins } => format!("tsallis_q{}_b{bins}", fmt_param(q)),
        Extractor::SampleEntropy { m, r_factor } => format!("sampen_m{m}_r{}", fmt_param(r_factor)),
        Extractor::PermutationEntropy { order, delay } => format!("permen_o{order}_d{delay}"),
    }
}
