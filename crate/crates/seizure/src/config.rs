//! Sectioned `key = value` experiment configuration.
//!
//! ```text
//! [experiment]
//! name = demo      # comments start with '#'
//! ```
//!
//! Unknown sections or keys are usage errors. Every key has a default, so an
//! empty file is a valid configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hdc_core::encoder::ItemMemoryConfig;
use hdc_core::evaluation::PostProcess;
use hdc_core::learning::{Reduction, StopRule, StrategyParams};
use hdc_core::{Bundling, Strategy, Weight};
use serde::{Deserialize, Serialize};

use crate::dataio::DatasetConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSection {
    pub subjects: usize,
    pub recordings_per_subject: usize,
    pub seizures_per_recording: usize,
    pub duration_sec: f64,
    pub fs: f64,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Raw recordings: `<data_root>/<subject>/<file>.{edf,csv}` and
    /// `<data_root>/annotations.csv`.
    pub data_root: PathBuf,
    /// Per-seizure dataset files: `<work_dir>/<subject>/seiz<k>.csv`.
    pub work_dir: PathBuf,
    pub results_dir: PathBuf,
    pub synth: SynthSection,
    pub window_sec: f64,
    pub step_sec: f64,
    pub registry: String,
    /// Channels to read; empty keeps every channel of CSV recordings and
    /// selects the 18-channel bipolar montage from EDF files.
    pub channels: Vec<String>,
    pub ratio: f64,
    pub pre_exclusion_sec: f64,
    pub post_exclusion_sec: f64,
    pub dim: usize,
    pub num_levels: usize,
    pub bundling: Bundling,
    pub strategies: Vec<Strategy>,
    pub learning_rate: f64,
    pub stop: StopRule,
    pub reduction: Reduction,
    pub postprocess: PostProcess,
    pub baseline: Strategy,
    pub bench_repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 42,
            data_root: "data/raw".into(),
            work_dir: "data/dataset".into(),
            results_dir: "results".into(),
            synth: SynthSection {
                subjects: 6,
                recordings_per_subject: 2,
                seizures_per_recording: 2,
                duration_sec: 3600.0,
                fs: 128.0,
                channels: 4,
            },
            window_sec: 4.0,
            step_sec: 0.5,
            registry: "default".into(),
            channels: Vec::new(),
            ratio: 10.0,
            pre_exclusion_sec: 60.0,
            post_exclusion_sec: 900.0,
            dim: hdc_core::DEFAULT_DIM,
            num_levels: hdc_core::DEFAULT_NUM_LEVELS,
            bundling: Bundling::TwoStage,
            strategies: Strategy::ALL.to_vec(),
            learning_rate: 1.0,
            stop: StopRule::default(),
            reduction: Reduction::default(),
            postprocess: PostProcess::default(),
            baseline: Strategy::SinglePass,
            bench_repeats: 1,
        }
    }
}

fn usage(line: usize, msg: impl std::fmt::Display) -> Error {
    if line == 0 {
        Error::Usage(format!("config: {msg}"))
    } else {
        Error::Usage(format!("config line {line}: {msg}"))
    }
}

fn num<T: FromStr>(value: &str, key: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key} = {value:?} is not a valid number"))
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn bundling_name(b: Bundling) -> &'static str {
    match b {
        Bundling::TwoStage => "two_stage",
        Bundling::SingleStage => "single_stage",
    }
}

/// All `section.key` names, in documentation order.
pub const KEYS: &[&str] = &[
    "experiment.name",
    "experiment.seed",
    "paths.data_root",
    "paths.work_dir",
    "paths.results_dir",
    "synth.subjects",
    "synth.recordings_per_subject",
    "synth.seizures_per_recording",
    "synth.duration_sec",
    "synth.fs",
    "synth.channels",
    "features.window_sec",
    "features.step_sec",
    "features.registry",
    "features.channels",
    "dataset.ratio",
    "dataset.pre_exclusion_sec",
    "dataset.post_exclusion_sec",
    "encoder.dim",
    "encoder.levels",
    "encoder.bundling",
    "training.strategies",
    "training.learning_rate",
    "training.stop_epsilon",
    "training.stop_patience",
    "training.stop_max_passes",
    "training.reduction_min_members",
    "training.reduction_min_share",
    "training.reduction_keep_fraction",
    "postprocess.smooth_sec",
    "postprocess.merge_gap_sec",
    "compare.baseline",
    "bench.repeats",
];

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !KEYS.iter().any(|k| k.split('.').next() == Some(section.as_str())) {
                    return Err(usage(line_no, format!("unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(line_no, format!("expected key = value, found {line:?}")))?;
            if section.is_empty() {
                return Err(usage(line_no, "key outside of any [section]"));
            }
            cfg.set(&format!("{section}.{}", key.trim()), value.trim())
                .map_err(|e| usage(line_no, e))?;
        }
        cfg.validate().map_err(|e| usage(0, e))?;
        Ok(cfg)
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("override {assignment:?} is not section.key=value")))?;
        self.set(key.trim(), value.trim()).map_err(Error::Usage)?;
        self.validate().map_err(Error::Usage)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "experiment.name" => {
                if v.is_empty() || v.contains(['/', '\\']) {
                    return Err("experiment.name must be a non-empty file name".into());
                }
                self.name = v.into()
            }
            "experiment.seed" => self.seed = num(v, key)?,
            "paths.data_root" => self.data_root = v.into(),
            "paths.work_dir" => self.work_dir = v.into(),
            "paths.results_dir" => self.results_dir = v.into(),
            "synth.subjects" => self.synth.subjects = num(v, key)?,
            "synth.recordings_per_subject" => self.synth.recordings_per_subject = num(v, key)?,
            "synth.seizures_per_recording" => self.synth.seizures_per_recording = num(v, key)?,
            "synth.duration_sec" => self.synth.duration_sec = num(v, key)?,
            "synth.fs" => self.synth.fs = num(v, key)?,
            "synth.channels" => self.synth.channels = num(v, key)?,
            "features.window_sec" => self.window_sec = num(v, key)?,
            "features.step_sec" => self.step_sec = num(v, key)?,
            "features.registry" => self.registry = v.into(),
            "features.channels" => self.channels = list(v),
            "dataset.ratio" => self.ratio = num(v, key)?,
            "dataset.pre_exclusion_sec" => self.pre_exclusion_sec = num(v, key)?,
            "dataset.post_exclusion_sec" => self.post_exclusion_sec = num(v, key)?,
            "encoder.dim" => self.dim = num(v, key)?,
            "encoder.levels" => self.num_levels = num(v, key)?,
            "encoder.bundling" => {
                self.bundling = match v {
                    "two_stage" => Bundling::TwoStage,
                    "single_stage" => Bundling::SingleStage,
                    _ => return Err(format!("encoder.bundling must be two_stage or single_stage, not {v:?}")),
                }
            }
            "training.strategies" => self.strategies = parse_strategies(&list(v))?,
            "training.learning_rate" => self.learning_rate = num(v, key)?,
            "training.stop_epsilon" => self.stop.epsilon = num(v, key)?,
            "training.stop_patience" => self.stop.patience = num(v, key)?,
            "training.stop_max_passes" => self.stop.max_passes = num(v, key)?,
            "training.reduction_min_members" => self.reduction.min_members = num(v, key)?,
            "training.reduction_min_share" => self.reduction.min_share = num(v, key)?,
            "training.reduction_keep_fraction" => {
                self.reduction.keep_fraction = if v.is_empty() || v == "none" { None } else { Some(num(v, key)?) }
            }
            "postprocess.smooth_sec" => self.postprocess.smooth_sec = num(v, key)?,
            "postprocess.merge_gap_sec" => self.postprocess.merge_gap_sec = num(v, key)?,
            "compare.baseline" => self.baseline = parse_strategies(&[v.to_string()])?[0],
            "bench.repeats" => self.bench_repeats = num(v, key)?,
            _ => return Err(format!("unknown key {key}")),
        }
        Ok(())
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let checks: [(bool, &str); 10] = [
            (self.window_sec > 0.0 && self.step_sec > 0.0, "window and step must be positive"),
            (self.dim > 0, "encoder.dim must be positive"),
            (self.num_levels >= 2, "encoder.levels must be at least 2"),
            (self.learning_rate > 0.0, "training.learning_rate must be positive"),
            (self.stop.max_passes >= 1, "training.stop_max_passes must be at least 1"),
            (!self.strategies.is_empty(), "training.strategies is empty"),
            (self.ratio >= 0.0, "dataset.ratio must be non-negative"),
            (self.postprocess.smooth_sec > 0.0, "postprocess.smooth_sec must be positive"),
            (self.bench_repeats >= 1, "bench.repeats must be at least 1"),
            (
                self.reduction.keep_fraction.is_none_or(|k| k > 0.0 && k <= 1.0),
                "training.reduction_keep_fraction must be in (0, 1]",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(msg.to_string()),
            None => Ok(()),
        }
    }

    pub fn dataset(&self) -> DatasetConfig {
        DatasetConfig {
            window_sec: self.window_sec,
            step_sec: self.step_sec,
            ratio: self.ratio,
            pre_exclusion_sec: self.pre_exclusion_sec,
            post_exclusion_sec: self.post_exclusion_sec,
            seed: self.seed,
        }
    }

    pub fn item_memory(&self) -> ItemMemoryConfig {
        ItemMemoryConfig {
            dim: self.dim,
            num_levels: self.num_levels,
            seed: self.seed,
            bundling: self.bundling,
        }
    }

    pub fn strategy_params(&self) -> Result<StrategyParams> {
        Ok(StrategyParams {
            learning_rate: Weight::from_f64(self.learning_rate)?,
            stop: self.stop,
            reduction: self.reduction,
        })
    }

    /// The fully resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let joined = |v: &[String]| v.join(", ");
        let tags: Vec<String> = self.strategies.iter().map(|t| t.tag().to_string()).collect();
        let _ = write!(
            s,
            "[experiment]\nname = {}\nseed = {}\n\n\
             [paths]\ndata_root = {}\nwork_dir = {}\nresults_dir = {}\n\n\
             [synth]\nsubjects = {}\nrecordings_per_subject = {}\nseizures_per_recording = {}\nduration_sec = {}\nfs = {}\nchannels = {}\n\n\
             [features]\nwindow_sec = {}\nstep_sec = {}\nregistry = {}\nchannels = {}\n\n\
             [dataset]\nratio = {}\npre_exclusion_sec = {}\npost_exclusion_sec = {}\n\n\
             [encoder]\ndim = {}\nlevels = {}\nbundling = {}\n\n\
             [training]\nstrategies = {}\nlearning_rate = {}\nstop_epsilon = {}\nstop_patience = {}\nstop_max_passes = {}\n\
             reduction_min_members = {}\nreduction_min_share = {}\nreduction_keep_fraction = {}\n\n\
             [postprocess]\nsmooth_sec = {}\nmerge_gap_sec = {}\n\n\
             [compare]\nbaseline = {}\n\n\
             [bench]\nrepeats = {}\n",
            self.name,
            self.seed,
            self.data_root.display(),
            self.work_dir.display(),
            self.results_dir.display(),
            self.synth.subjects,
            self.synth.recordings_per_subject,
            self.synth.seizures_per_recording,
            self.synth.duration_sec,
            self.synth.fs,
            self.synth.channels,
            self.window_sec,
            self.step_sec,
            self.registry,
            joined(&self.channels),
            self.ratio,
            self.pre_exclusion_sec,
            self.post_exclusion_sec,
            self.dim,
            self.num_levels,
            bundling_name(self.bundling),
            tags.join(", "),
            self.learning_rate,
            self.stop.epsilon,
            self.stop.patience,
            self.stop.max_passes,
            self.reduction.min_members,
            self.reduction.min_share,
            self.reduction.keep_fraction.map_or("none".to_string(), |k| k.to_string()),
            self.postprocess.smooth_sec,
            self.postprocess.merge_gap_sec,
            self.baseline.tag(),
            self.bench_repeats,
        );
        s
    }
}

pub fn parse_strategies(tags: &[String]) -> std::result::Result<Vec<Strategy>, String> {
    tags.iter()
        .map(|t| {
            t.parse::<Strategy>().map_err(|_| {
                let valid: Vec<&str> = Strategy::ALL.iter().map(|s| s.tag()).collect();
                format!("unknown strategy {t:?}; valid tags: {}", valid.join(", "))
            })
        })
        .collect()
}
