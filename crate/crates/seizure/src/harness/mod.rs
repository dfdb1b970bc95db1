//! Leave-one-seizure-out cross-validation, strategy comparison and
//! training benchmarks.
//!
//! Every fold fits the item memory on its training files only, encodes each
//! window once, and trains all requested strategies on the same encodings.

mod output;

use std::time::Instant;

use hdc_core::codec;
use hdc_core::encoder::ItemMemoryConfig;
use hdc_core::evaluation::{evaluate, wilcoxon_signed_rank, LabelSequence, MetricsReport, PostProcess, WilcoxonMethod};
use hdc_core::learning::{train, StrategyParams};
use hdc_core::{FeatureWindow, Hypervector, ItemMemory, Strategy, TrainStats};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dataio::SubjectDataset;
use crate::error::{Error, Result};

pub use output::{
    external_scores, load_scores, read_predictions, score_header, write_bench, write_comparisons, write_experiment, write_report,
    ExperimentManifest, HostInfo, PredictionRow, ReportRow, BENCH_FILE, COMPARISON_FILE, MANIFEST_FILE, PER_FOLD_FILE,
    PER_SUBJECT_FILE,
};

/// Names of the seven scores, in `MetricsReport::scores` order.
pub const SCORE_NAMES: [&str; 7] = ["ep_tpr", "ep_ppv", "ep_f1", "du_tpr", "du_ppv", "du_f1", "f1de_mean"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub item_memory: ItemMemoryConfig,
    pub params: StrategyParams,
    pub postprocess: PostProcess,
    pub step_sec: f64,
}

impl Settings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            item_memory: cfg.item_memory(),
            params: cfg.strategy_params()?,
            postprocess: cfg.postprocess,
            step_sec: cfg.step_sec,
        })
    }
}

/// One train/test split of a subject.
#[derive(Debug, Clone)]
pub struct Fold<'a> {
    pub index: usize,
    pub test_name: String,
    pub train: Vec<&'a [FeatureWindow]>,
    pub test: &'a [FeatureWindow],
    pub warning: Option<String>,
}

/// Leave-one-seizure-out folds. A subject with a single seizure file is
/// split chronologically at its middle seizure window instead: the earlier
/// part trains, the later part tests.
pub fn folds(ds: &SubjectDataset) -> Result<Vec<Fold<'_>>> {
    match ds.files.len() {
        0 => Err(Error::Invalid(format!("subject {} has no seizure files", ds.subject))),
        1 => {
            let file = &ds.files[0];
            let ictal: Vec<usize> = file.windows.iter().enumerate().filter(|(_, w)| w.label == 1).map(|(i, _)| i).collect();
            if ictal.len() < 2 {
                return Err(Error::Invalid(format!(
                    "subject {} has one seizure file with fewer than two seizure windows",
                    ds.subject
                )));
            }
            let cut = ictal[ictal.len() / 2];
            let (train, test) = file.windows.split_at(cut);
            Ok(vec![Fold {
                index: 0,
                test_name: format!("{}_second_half", file.name),
                train: vec![train],
                test,
                warning: Some(format!(
                    "subject {} has one seizure; split {} chronologically at window {cut}",
                    ds.subject, file.name
                )),
            }])
        }
        _ => Ok((0..ds.files.len())
            .map(|k| Fold {
                index: k,
                test_name: ds.files[k].name.clone(),
                train: ds.files.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, f)| f.windows.as_slice()).collect(),
                test: &ds.files[k].windows,
                warning: None,
            })
            .collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub t_start: Vec<f64>,
    pub t_end: Vec<f64>,
    pub truth: Vec<u8>,
    pub raw: Vec<u8>,
    pub post: Vec<u8>,
}

/// Result of one strategy on one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub strategy: Strategy,
    pub metrics: MetricsReport,
    pub stats: TrainStats,
    pub centroids: [usize; 2],
    pub model_bytes: usize,
    pub train_secs: f64,
    pub predictions: Predictions,
    /// Encoded model; the tie-break lives in the fold's item memory.
    pub model: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRun {
    pub subject: String,
    pub fold: usize,
    pub test_name: String,
    pub warning: Option<String>,
    pub item_memory: Vec<u8>,
    pub outcomes: Vec<(Strategy, std::result::Result<FoldOutcome, String>)>,
}

impl FoldRun {
    pub fn outcome(&self, strategy: Strategy) -> Option<&std::result::Result<FoldOutcome, String>> {
        self.outcomes.iter().find(|(s, _)| *s == strategy).map(|(_, o)| o)
    }
}

/// Post-processed F1DEmean of `pred` against `truth`.
pub fn file_score(pred: &[u8], truth: &[u8], settings: &Settings) -> Result<f64> {
    let p = settings.postprocess.apply(&LabelSequence::new(pred.to_vec(), settings.step_sec)?)?;
    let t = LabelSequence::new(truth.to_vec(), settings.step_sec)?;
    Ok(evaluate(&p, &t)?.f1_de_mean)
}

/// Encoded training data of one fold.
pub struct EncodedFold {
    pub item_memory: ItemMemory,
    pub train: Vec<Hypervector>,
    pub train_labels: Vec<u8>,
    /// Length of each training file within `train`.
    pub train_lengths: Vec<usize>,
    pub test: Vec<Hypervector>,
}

pub fn encode_fold(fold: &Fold<'_>, config: ItemMemoryConfig) -> Result<EncodedFold> {
    let train_windows: Vec<FeatureWindow> = fold.train.iter().flat_map(|f| f.iter().cloned()).collect();
    let item_memory = ItemMemory::fit(&train_windows, config)?;
    let encode = |ws: &[FeatureWindow]| -> Result<Vec<Hypervector>> {
        ws.par_iter().map(|w| item_memory.encode(w).map_err(Error::from)).collect()
    };
    let train = encode(&train_windows)?;
    let test = encode(fold.test)?;
    Ok(EncodedFold {
        train_labels: train_windows.iter().map(|w| w.label).collect(),
        train_lengths: fold.train.iter().map(|f| f.len()).collect(),
        item_memory,
        train,
        test,
    })
}

/// Trains `strategy` on an encoded fold. The training score is the mean
/// post-processed F1DEmean over the training files.
pub fn train_encoded(enc: &EncodedFold, strategy: Strategy, settings: &Settings) -> Result<(hdc_core::Model, f64)> {
    let scorer = |pred: &[u8]| -> f64 {
        let mut offset = 0;
        let mut total = 0.0;
        for &len in &enc.train_lengths {
            let range = offset..offset + len;
            total += file_score(&pred[range.clone()], &enc.train_labels[range], settings).unwrap_or(0.0);
            offset += len;
        }
        total / enc.train_lengths.len().max(1) as f64
    };
    let started = Instant::now();
    let model = train(
        strategy,
        &enc.train,
        &enc.train_labels,
        enc.item_memory.tie_break(),
        &settings.params,
        &scorer,
    )?;
    Ok((model, started.elapsed().as_secs_f64()))
}

fn run_strategy(enc: &EncodedFold, fold: &Fold<'_>, strategy: Strategy, settings: &Settings) -> Result<FoldOutcome> {
    let (model, train_secs) = train_encoded(enc, strategy, settings)?;
    let raw = model.predict_all(&enc.test)?;
    let post = settings.postprocess.apply(&LabelSequence::new(raw.clone(), settings.step_sec)?)?;
    let truth: Vec<u8> = fold.test.iter().map(|w| w.label).collect();
    let metrics = evaluate(&post, &LabelSequence::new(truth.clone(), settings.step_sec)?)?;
    let bytes = codec::encode_model(&model);
    Ok(FoldOutcome {
        strategy,
        metrics,
        stats: model.stats.clone(),
        centroids: model.centroid_counts(),
        model_bytes: bytes.len(),
        train_secs,
        predictions: Predictions {
            t_start: fold.test.iter().map(|w| w.t_start).collect(),
            t_end: fold.test.iter().map(|w| w.t_end).collect(),
            truth,
            raw,
            post: post.into_labels(),
        },
        model: bytes,
    })
}

/// Runs every strategy on one fold. Encoding failures fail the fold;
/// training failures are recorded per strategy.
pub fn run_fold(subject: &str, fold: &Fold<'_>, strategies: &[Strategy], settings: &Settings) -> Result<FoldRun> {
    let enc = encode_fold(fold, settings.item_memory)?;
    let outcomes = strategies
        .iter()
        .map(|&s| (s, run_strategy(&enc, fold, s, settings).map_err(|e| e.to_string())))
        .collect();
    Ok(FoldRun {
        subject: subject.to_string(),
        fold: fold.index,
        test_name: fold.test_name.clone(),
        warning: fold.warning.clone(),
        item_memory: codec::encode_item_memory(&enc.item_memory),
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectCv {
    pub subject: String,
    pub folds: Vec<FoldOutcome>,
    pub mean: [f64; 7],
}

fn mean_scores<'a>(reports: impl Iterator<Item = &'a MetricsReport>) -> [f64; 7] {
    let mut sum = [0.0; 7];
    let mut n = 0usize;
    for r in reports {
        for (s, v) in sum.iter_mut().zip(r.scores()) {
            *s += v;
        }
        n += 1;
    }
    sum.map(|s| if n == 0 { f64::NAN } else { s / n as f64 })
}

/// Leave-one-seizure-out cross-validation of one strategy on one subject.
pub fn loso_cv(ds: &SubjectDataset, strategy: Strategy, settings: &Settings) -> Result<SubjectCv> {
    let mut outcomes = Vec::new();
    for fold in folds(ds)? {
        let run = run_fold(&ds.subject, &fold, &[strategy], settings)?;
        let (_, o) = run.outcomes.into_iter().next().expect("one strategy requested");
        outcomes.push(o.map_err(|e| Error::Invalid(format!("{} fold {}: {e}", ds.subject, fold.index)))?);
    }
    let mean = mean_scores(outcomes.iter().map(|o| &o.metrics));
    Ok(SubjectCv {
        subject: ds.subject.clone(),
        folds: outcomes,
        mean,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectFailure {
    pub subject: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub strategies: Vec<Strategy>,
    pub subjects: Vec<String>,
    /// Ordered by subject, then fold.
    pub runs: Vec<FoldRun>,
    /// Subjects whose folds could not be built or encoded.
    pub failures: Vec<SubjectFailure>,
}

/// Cross-validates every strategy on every subject, folds in parallel.
pub fn run_experiment(datasets: &[SubjectDataset], strategies: &[Strategy], settings: &Settings) -> ExperimentResults {
    let mut failures = Vec::new();
    let mut jobs = Vec::new();
    for ds in datasets {
        match folds(ds) {
            Ok(fs) => jobs.extend(fs.into_iter().map(|f| (ds, f))),
            Err(e) => failures.push(SubjectFailure {
                subject: ds.subject.clone(),
                error: e.to_string(),
            }),
        }
    }
    let results: Vec<(String, Result<FoldRun>)> = jobs
        .par_iter()
        .map(|(ds, f)| (ds.subject.clone(), run_fold(&ds.subject, f, strategies, settings)))
        .collect();
    let mut runs = Vec::new();
    for (subject, r) in results {
        match r {
            Ok(run) => runs.push(run),
            Err(e) if !failures.iter().any(|f| f.subject == subject) => failures.push(SubjectFailure {
                subject,
                error: e.to_string(),
            }),
            Err(_) => {}
        }
    }
    runs.retain(|r| !failures.iter().any(|f| f.subject == r.subject));
    ExperimentResults {
        strategies: strategies.to_vec(),
        subjects: datasets.iter().map(|d| d.subject.clone()).collect(),
        runs,
        failures,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSummary {
    pub subject: String,
    pub strategy: Strategy,
    pub folds: usize,
    /// Fold means of the seven scores; `None` when any fold failed.
    pub mean: Option<[f64; 7]>,
    pub mean_centroids: [f64; 2],
    pub mean_passes: f64,
    pub error: Option<String>,
}

impl ExperimentResults {
    /// Per-subject fold means of one strategy, in subject order.
    pub fn summarize(&self, strategy: Strategy) -> Vec<SubjectSummary> {
        self.subjects
            .iter()
            .map(|subject| {
                if let Some(f) = self.failures.iter().find(|f| &f.subject == subject) {
                    return SubjectSummary {
                        subject: subject.clone(),
                        strategy,
                        folds: 0,
                        mean: None,
                        mean_centroids: [f64::NAN; 2],
                        mean_passes: f64::NAN,
                        error: Some(f.error.clone()),
                    };
                }
                let outcomes: Vec<&std::result::Result<FoldOutcome, String>> = self
                    .runs
                    .iter()
                    .filter(|r| &r.subject == subject)
                    .filter_map(|r| r.outcome(strategy))
                    .collect();
                let error = outcomes.iter().find_map(|o| o.as_ref().err().cloned());
                let ok: Vec<&FoldOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
                let n = ok.len().max(1) as f64;
                SubjectSummary {
                    subject: subject.clone(),
                    strategy,
                    folds: outcomes.len(),
                    mean: error.is_none().then(|| mean_scores(ok.iter().map(|o| &o.metrics))),
                    mean_centroids: [0, 1].map(|c| ok.iter().map(|o| o.centroids[c] as f64).sum::<f64>() / n),
                    mean_passes: ok.iter().map(|o| o.stats.passes as f64).sum::<f64>() / n,
                    error,
                }
            })
            .collect()
    }

    /// Successful outcomes of one strategy, in run order.
    pub fn outcomes(&self, strategy: Strategy) -> impl Iterator<Item = (&FoldRun, &FoldOutcome)> {
        self.runs
            .iter()
            .filter_map(move |r| match r.outcome(strategy) {
                Some(Ok(o)) => Some((r, o)),
                _ => None,
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMethod {
    Exact,
    Normal,
    /// Every paired difference is zero; p is reported as 1.
    Identical,
    /// Too few non-zero differences for the test; p is reported as 1.
    InsufficientData,
}

impl ComparisonMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Normal => "normal",
            Self::Identical => "identical",
            Self::InsufficientData => "insufficient_data",
        }
    }
}

/// Paired Wilcoxon signed-rank comparison of per-subject F1DEmean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub strategy: String,
    pub baseline: String,
    pub n_subjects: usize,
    pub mean_strategy: f64,
    pub mean_baseline: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub method: ComparisonMethod,
    /// Subjects left out because either side failed on them.
    pub excluded: Vec<String>,
}

/// Per-subject F1DEmean of one method; `None` marks a failed subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectScores {
    pub name: String,
    pub scores: Vec<(String, Option<f64>)>,
}

impl SubjectScores {
    pub fn from_summaries(summaries: &[SubjectSummary]) -> Result<Self> {
        let first = summaries.first().ok_or_else(|| Error::Invalid("no subjects to compare".into()))?;
        Ok(Self {
            name: first.strategy.tag().into(),
            scores: summaries.iter().map(|s| (s.subject.clone(), s.mean.map(|m| m[6]))).collect(),
        })
    }
}

/// Compares paired per-subject F1DEmean of `a` against the baseline `b`.
/// Both must cover the same subjects; subjects where either side failed
/// are excluded pairwise and listed.
pub fn compare_scores(a: &SubjectScores, b: &SubjectScores) -> Result<Comparison> {
    let mut sa: Vec<&String> = a.scores.iter().map(|s| &s.0).collect();
    let mut sb: Vec<&String> = b.scores.iter().map(|s| &s.0).collect();
    sa.sort();
    sb.sort();
    if sa != sb {
        return Err(Error::Invalid(format!("{} and {} cover different subjects", a.name, b.name)));
    }
    if sa.is_empty() {
        return Err(Error::Invalid("no subjects to compare".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for (subject, x) in &a.scores {
        let y = b.scores.iter().find(|s| &s.0 == subject).and_then(|s| s.1);
        match (x, y) {
            (Some(x), Some(y)) => {
                xs.push(*x);
                ys.push(y);
            }
            _ => excluded.push(subject.clone()),
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mut c = Comparison {
        strategy: a.name.clone(),
        baseline: b.name.clone(),
        n_subjects: xs.len(),
        mean_strategy: mean(&xs),
        mean_baseline: mean(&ys),
        w_plus: 0.0,
        w_minus: 0.0,
        p_value: 1.0,
        method: ComparisonMethod::Identical,
        excluded,
    };
    if xs.iter().zip(&ys).all(|(x, y)| x == y) {
        return Ok(c);
    }
    match wilcoxon_signed_rank(&xs, &ys) {
        Ok(w) => {
            c.w_plus = w.w_plus;
            c.w_minus = w.w_minus;
            c.p_value = w.p_value;
            c.method = match w.method {
                WilcoxonMethod::Exact => ComparisonMethod::Exact,
                WilcoxonMethod::Normal => ComparisonMethod::Normal,
            };
        }
        Err(hdc_core::Error::InsufficientData { .. }) => c.method = ComparisonMethod::InsufficientData,
        Err(e) => return Err(e.into()),
    }
    Ok(c)
}

/// [`compare_scores`] on two strategies' per-subject summaries.
pub fn compare(a: &[SubjectSummary], b: &[SubjectSummary]) -> Result<Comparison> {
    compare_scores(&SubjectScores::from_summaries(a)?, &SubjectScores::from_summaries(b)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub strategy: Strategy,
    pub folds: usize,
    /// Mean over folds of the fastest of `repeats` training runs.
    pub train_secs: f64,
    pub train_rel: f64,
    pub model_bytes: f64,
    pub memory_rel: f64,
}

/// Times training of each strategy, one fold at a time on the calling
/// thread. Encoding is untimed. Every strategy is trained once on the first
/// fold as a warm-up; strategies are interleaved within each fold so drift
/// affects all alike.
/// Relative values are against `baseline` when it is among `strategies`.
pub fn bench(
    datasets: &[SubjectDataset],
    strategies: &[Strategy],
    baseline: Strategy,
    settings: &Settings,
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    let mut secs = vec![0.0; strategies.len()];
    let mut bytes = vec![0.0; strategies.len()];
    let mut n = 0usize;
    for ds in datasets {
        for fold in folds(ds)? {
            let enc = encode_fold(&fold, settings.item_memory)?;
            if n == 0 {
                for &s in strategies {
                    train_encoded(&enc, s, settings)?;
                }
            }
            for (i, &s) in strategies.iter().enumerate() {
                let mut best = f64::INFINITY;
                let mut size = 0;
                for _ in 0..repeats.max(1) {
                    let (model, t) = train_encoded(&enc, s, settings)?;
                    best = best.min(t);
                    size = codec::model_size(&model);
                }
                secs[i] += best;
                bytes[i] += size as f64;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Invalid("no folds to benchmark".into()));
    }
    let base = strategies.iter().position(|&s| s == baseline);
    Ok(strategies
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let t = secs[i] / n as f64;
            let m = bytes[i] / n as f64;
            BenchRow {
                strategy: s,
                folds: n,
                train_secs: t,
                train_rel: base.map_or(f64::NAN, |b| t / (secs[b] / n as f64)),
                model_bytes: m,
                memory_rel: base.map_or(f64::NAN, |b| m / (bytes[b] / n as f64)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::SeizureFile;

    fn window(t: f64, label: u8, v: f64) -> FeatureWindow {
        FeatureWindow::new(t, t + 4.0, 2, 3, vec![v, v * 0.5, 1.0 - v, v, v * v, 0.3], label).unwrap()
    }

    /// Seizure windows have high values, the rest low, with small jitter.
    fn file(name: &str, n: usize, ictal: std::ops::Range<usize>, phase: f64) -> SeizureFile {
        SeizureFile {
            name: name.into(),
            windows: (0..n)
                .map(|i| {
                    let label = ictal.contains(&i) as u8;
                    let jitter = 0.05 * ((i as f64 * 1.7 + phase).sin());
                    window(i as f64 * 0.5, label, if label == 1 { 0.8 + jitter } else { 0.2 + jitter })
                })
                .collect(),
        }
    }

    fn dataset(files: usize) -> SubjectDataset {
        SubjectDataset {
            subject: "s1".into(),
            channels: vec!["a".into(), "b".into()],
            features: vec!["f1".into(), "f2".into(), "f3".into()],
            files: (0..files).map(|k| file(&format!("seiz{}", k + 1), 60, 20..30, k as f64)).collect(),
        }
    }

    fn settings() -> Settings {
        let mut cfg = ExperimentConfig::default();
        cfg.dim = 1024;
        Settings::from_config(&cfg).unwrap()
    }

    #[test]
    fn leave_one_out_folds() {
        let ds = dataset(3);
        let f = folds(&ds).unwrap();
        assert_eq!(f.len(), 3);
        for (k, fold) in f.iter().enumerate() {
            assert_eq!(fold.test_name, format!("seiz{}", k + 1));
            assert_eq!(fold.train.len(), 2);
            assert!(fold.train.iter().all(|t| t.as_ptr() != fold.test.as_ptr()));
        }
    }

    #[test]
    fn single_file_split_has_both_classes() {
        let ds = dataset(1);
        let f = folds(&ds).unwrap();
        assert_eq!(f.len(), 1);
        assert!(f[0].warning.is_some());
        assert!(f[0].train[0].iter().any(|w| w.label == 1));
        assert!(f[0].test.iter().any(|w| w.label == 1));
        assert_eq!(f[0].train[0].len() + f[0].test.len(), 60);
    }

    #[test]
    fn separable_data_is_detected() {
        let cv = loso_cv(&dataset(3), Strategy::SinglePass, &settings()).unwrap();
        assert_eq!(cv.folds.len(), 3);
        assert!(cv.mean[6] > 0.9, "{:?}", cv.mean);
    }

    #[test]
    fn fitted_artifacts_ignore_the_test_file() {
        let ds = dataset(3);
        let mut noisy = ds.clone();
        for (i, w) in noisy.files[0].windows.iter_mut().enumerate() {
            let v = (i as f64 * 12.9898).sin().abs();
            *w = window(w.t_start, w.label, v * 50.0);
        }
        let s = settings();
        let f_clean = &folds(&ds).unwrap()[0];
        let f_noisy = &folds(&noisy).unwrap()[0];
        let a = run_fold("s1", f_clean, &Strategy::ALL, &s).unwrap();
        let b = run_fold("s1", f_noisy, &Strategy::ALL, &s).unwrap();
        assert_eq!(a.item_memory, b.item_memory);
        for ((_, x), (_, y)) in a.outcomes.iter().zip(&b.outcomes) {
            assert_eq!(x.as_ref().unwrap().model, y.as_ref().unwrap().model);
        }
    }

    #[test]
    fn experiment_is_deterministic_and_ordered() {
        let mut b = dataset(2);
        b.subject = "s2".into();
        let data = [dataset(3), b];
        let s = settings();
        let strategies = [Strategy::SinglePass, Strategy::MultiCentroid];
        let r1 = run_experiment(&data, &strategies, &s);
        let r2 = run_experiment(&data, &strategies, &s);
        assert_eq!(r1.runs.len(), 5);
        let key = |r: &ExperimentResults| r.runs.iter().map(|x| (x.subject.clone(), x.fold)).collect::<Vec<_>>();
        assert_eq!(key(&r1), vec![("s1".into(), 0), ("s1".into(), 1), ("s1".into(), 2), ("s2".into(), 0), ("s2".into(), 1)]);
        for (x, y) in r1.runs.iter().zip(&r2.runs) {
            assert_eq!(x.item_memory, y.item_memory);
            for ((_, a), (_, b)) in x.outcomes.iter().zip(&y.outcomes) {
                let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
                assert_eq!((&a.model, &a.predictions, &a.metrics), (&b.model, &b.predictions, &b.metrics));
            }
        }
        let sum = r1.summarize(Strategy::SinglePass);
        assert_eq!(sum.len(), 2);
        assert_eq!(sum[0].folds, 3);
    }

    #[test]
    fn failing_subject_is_recorded() {
        let mut bad = dataset(2);
        bad.subject = "bad".into();
        for f in &mut bad.files {
            for w in &mut f.windows {
                w.label = 0;
            }
        }
        let r = run_experiment(&[dataset(2), bad], &[Strategy::SinglePass], &settings());
        let sum = r.summarize(Strategy::SinglePass);
        assert!(sum[0].mean.is_some());
        assert!(sum[1].mean.is_none() && sum[1].error.is_some());
    }

    fn summary(subject: &str, strategy: Strategy, f1: Option<f64>) -> SubjectSummary {
        SubjectSummary {
            subject: subject.into(),
            strategy,
            folds: 1,
            mean: f1.map(|v| [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, v]),
            mean_centroids: [1.0, 1.0],
            mean_passes: 1.0,
            error: f1.is_none().then(|| "failed".into()),
        }
    }

    #[test]
    fn identical_strategies_give_sentinel() {
        let a: Vec<_> = (0..6).map(|i| summary(&i.to_string(), Strategy::MultiCentroid, Some(0.1 * i as f64))).collect();
        let c = compare(&a, &a).unwrap();
        assert_eq!(c.method, ComparisonMethod::Identical);
        assert_eq!(c.p_value, 1.0);
    }

    #[test]
    fn failed_subjects_excluded_pairwise() {
        let a: Vec<_> = (0..7)
            .map(|i| summary(&i.to_string(), Strategy::MultiCentroid, (i != 3).then(|| 0.5 + 0.05 * i as f64)))
            .collect();
        let b: Vec<_> = (0..7).map(|i| summary(&i.to_string(), Strategy::SinglePass, Some(0.4))).collect();
        let c = compare(&a, &b).unwrap();
        assert_eq!(c.excluded, vec!["3".to_string()]);
        assert_eq!(c.n_subjects, 6);
        assert_eq!(c.method, ComparisonMethod::Exact);
        // all six differences positive: p = 2 / 2^6
        assert!((c.p_value - 2.0 / 64.0).abs() < 1e-12);
        let few = compare(&a[..3], &b[..3]).unwrap();
        assert_eq!((few.method, few.p_value), (ComparisonMethod::InsufficientData, 1.0));
        assert!(compare(&a[..3], &b[..4]).is_err());
    }

    #[test]
    fn bench_reports_relative_values() {
        let rows = bench(&[dataset(2)], &[Strategy::SinglePass, Strategy::MultiCentroid], Strategy::SinglePass, &settings(), 1).unwrap();
        assert_eq!(rows[0].memory_rel, 1.0);
        assert_eq!(rows[0].folds, 2);
        assert!(rows[1].model_bytes >= rows[0].model_bytes);
    }
}
