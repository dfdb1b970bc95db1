//! Result files of an experiment:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/comparison.csv
//! <dir>/<strategy>/per_fold.csv
//! <dir>/<strategy>/per_subject.csv
//! <dir>/<strategy>/predictions/<subject>/<test>.csv
//! <dir>/<strategy>/models/<subject>/<test>.{hdm,hdim,stats.json}
//! ```
//!
//! Nothing timing-dependent is written to these files, so reruns with the
//! same inputs and seed are byte-identical. Timings go to `bench.csv`.

use std::path::{Path, PathBuf};

use hdc_core::Strategy;
use serde::{Deserialize, Serialize};

use super::{compare, file_score, BenchRow, Comparison, ExperimentResults, FoldOutcome, Settings, SubjectScores, SubjectSummary, SCORE_NAMES};
use crate::error::{Error, Result};

pub const PER_FOLD_FILE: &str = "per_fold.csv";
pub const PER_SUBJECT_FILE: &str = "per_subject.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const BENCH_FILE: &str = "bench.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Invalid(format!("cannot read {}: {e}", path.display())),
        _ => e.into(),
    })?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::parse(path, i as u64 + 2, e.to_string())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PerFoldRow {
    subject: String,
    fold: usize,
    test_file: String,
    strategy: Strategy,
    ep_tpr: Option<f64>,
    ep_ppv: Option<f64>,
    ep_f1: Option<f64>,
    du_tpr: Option<f64>,
    du_ppv: Option<f64>,
    du_f1: Option<f64>,
    f1de_mean: Option<f64>,
    ep_tp: Option<usize>,
    ep_fp: Option<usize>,
    ep_fn: Option<usize>,
    du_tp: Option<usize>,
    du_fp: Option<usize>,
    du_fn: Option<usize>,
    centroids_0: Option<usize>,
    centroids_1: Option<usize>,
    centroids_before_0: Option<usize>,
    centroids_before_1: Option<usize>,
    passes: Option<usize>,
    selected_pass: Option<usize>,
    final_readded_fraction: Option<f64>,
    model_bytes: Option<usize>,
    warning: Option<String>,
    error: Option<String>,
}

impl PerFoldRow {
    fn new(subject: &str, fold: usize, test_file: &str, strategy: Strategy, warning: Option<String>) -> Self {
        Self {
            subject: subject.into(),
            fold,
            test_file: test_file.into(),
            strategy,
            ep_tpr: None,
            ep_ppv: None,
            ep_f1: None,
            du_tpr: None,
            du_ppv: None,
            du_f1: None,
            f1de_mean: None,
            ep_tp: None,
            ep_fp: None,
            ep_fn: None,
            du_tp: None,
            du_fp: None,
            du_fn: None,
            centroids_0: None,
            centroids_1: None,
            centroids_before_0: None,
            centroids_before_1: None,
            passes: None,
            selected_pass: None,
            final_readded_fraction: None,
            model_bytes: None,
            warning,
            error: None,
        }
    }

    fn fill(&mut self, o: &FoldOutcome) {
        let [a, b, c, d, e, f, g] = o.metrics.scores();
        (self.ep_tpr, self.ep_ppv, self.ep_f1) = (Some(a), Some(b), Some(c));
        (self.du_tpr, self.du_ppv, self.du_f1, self.f1de_mean) = (Some(d), Some(e), Some(f), Some(g));
        let (ep, du) = (o.metrics.episode.counts, o.metrics.duration.counts);
        (self.ep_tp, self.ep_fp, self.ep_fn) = (Some(ep.tp), Some(ep.fp), Some(ep.fn_));
        (self.du_tp, self.du_fp, self.du_fn) = (Some(du.tp), Some(du.fp), Some(du.fn_));
        (self.centroids_0, self.centroids_1) = (Some(o.centroids[0]), Some(o.centroids[1]));
        let before = o.stats.centroids_before_reduction;
        (self.centroids_before_0, self.centroids_before_1) = (Some(before[0]), Some(before[1]));
        self.passes = Some(o.stats.passes);
        self.selected_pass = Some(o.stats.selected_pass);
        self.final_readded_fraction = o.stats.readded_fraction_per_pass.last().copied();
        self.model_bytes = Some(o.model_bytes);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PerSubjectRow {
    subject: String,
    strategy: Strategy,
    folds: usize,
    ep_tpr: Option<f64>,
    ep_ppv: Option<f64>,
    ep_f1: Option<f64>,
    du_tpr: Option<f64>,
    du_ppv: Option<f64>,
    du_f1: Option<f64>,
    f1de_mean: Option<f64>,
    mean_centroids_0: f64,
    mean_centroids_1: f64,
    mean_passes: f64,
    error: Option<String>,
}

impl From<&SubjectSummary> for PerSubjectRow {
    fn from(s: &SubjectSummary) -> Self {
        let m = |i: usize| s.mean.map(|v| v[i]);
        Self {
            subject: s.subject.clone(),
            strategy: s.strategy,
            folds: s.folds,
            ep_tpr: m(0),
            ep_ppv: m(1),
            ep_f1: m(2),
            du_tpr: m(3),
            du_ppv: m(4),
            du_f1: m(5),
            f1de_mean: m(6),
            mean_centroids_0: s.mean_centroids[0],
            mean_centroids_1: s.mean_centroids[1],
            mean_passes: s.mean_passes,
            error: s.error.clone(),
        }
    }
}

impl PerSubjectRow {
    fn summary(&self) -> SubjectSummary {
        let v = [self.ep_tpr, self.ep_ppv, self.ep_f1, self.du_tpr, self.du_ppv, self.du_f1, self.f1de_mean];
        SubjectSummary {
            subject: self.subject.clone(),
            strategy: self.strategy,
            folds: self.folds,
            mean: v.iter().all(Option::is_some).then(|| v.map(Option::unwrap)),
            mean_centroids: [self.mean_centroids_0, self.mean_centroids_1],
            mean_passes: self.mean_passes,
            error: self.error.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PredictionCsvRow {
    t_start: f64,
    t_end: f64,
    truth: u8,
    raw: u8,
    post: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ComparisonRow {
    strategy: String,
    baseline: String,
    n_subjects: usize,
    mean_strategy: f64,
    mean_baseline: f64,
    mean_diff: f64,
    w_plus: f64,
    w_minus: f64,
    p_value: f64,
    method: String,
    excluded_subjects: String,
}

impl From<&Comparison> for ComparisonRow {
    fn from(c: &Comparison) -> Self {
        Self {
            strategy: c.strategy.clone(),
            baseline: c.baseline.clone(),
            n_subjects: c.n_subjects,
            mean_strategy: c.mean_strategy,
            mean_baseline: c.mean_baseline,
            mean_diff: c.mean_strategy - c.mean_baseline,
            w_plus: c.w_plus,
            w_minus: c.w_minus,
            p_value: c.p_value,
            method: c.method.name().into(),
            excluded_subjects: c.excluded.join(";"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
}

impl HostInfo {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub baseline: Strategy,
    pub subjects: Vec<String>,
    pub failures: Vec<(String, String)>,
    pub warnings: Vec<String>,
    /// Fully resolved configuration text.
    pub config: String,
    pub host: HostInfo,
}

fn strategy_dir(dir: &Path, s: Strategy) -> PathBuf {
    dir.join(s.tag())
}

/// Writes every result file of `results` under `dir` and returns the
/// comparisons of each strategy against `baseline`.
pub fn write_experiment(
    dir: &Path,
    results: &ExperimentResults,
    baseline: Strategy,
    name: &str,
    seed: u64,
    config_text: &str,
) -> Result<Vec<Comparison>> {
    create_dir(dir)?;
    for &s in &results.strategies {
        let sdir = strategy_dir(dir, s);
        let mut rows = Vec::new();
        for run in &results.runs {
            let mut row = PerFoldRow::new(&run.subject, run.fold, &run.test_name, s, run.warning.clone());
            match run.outcome(s) {
                Some(Ok(o)) => {
                    row.fill(o);
                    let pred: Vec<PredictionCsvRow> = (0..o.predictions.truth.len())
                        .map(|i| PredictionCsvRow {
                            t_start: o.predictions.t_start[i],
                            t_end: o.predictions.t_end[i],
                            truth: o.predictions.truth[i],
                            raw: o.predictions.raw[i],
                            post: o.predictions.post[i],
                        })
                        .collect();
                    write_rows(&sdir.join("predictions").join(&run.subject).join(format!("{}.csv", run.test_name)), &pred)?;
                    let mdir = sdir.join("models").join(&run.subject);
                    write_bytes(&mdir.join(format!("{}.hdm", run.test_name)), &o.model)?;
                    write_bytes(&mdir.join(format!("{}.hdim", run.test_name)), &run.item_memory)?;
                    let stats = serde_json::to_vec_pretty(&o.stats)?;
                    write_bytes(&mdir.join(format!("{}.stats.json", run.test_name)), &stats)?;
                }
                Some(Err(e)) => row.error = Some(e.clone()),
                None => row.error = Some("not run".into()),
            }
            rows.push(row);
        }
        write_rows(&sdir.join(PER_FOLD_FILE), &rows)?;
        let subjects: Vec<PerSubjectRow> = results.summarize(s).iter().map(PerSubjectRow::from).collect();
        write_rows(&sdir.join(PER_SUBJECT_FILE), &subjects)?;
    }

    let comparisons = compare_all(results, baseline)?;
    let rows: Vec<ComparisonRow> = comparisons.iter().map(ComparisonRow::from).collect();
    write_rows(&dir.join(COMPARISON_FILE), &rows)?;

    let mut warnings: Vec<String> = results.runs.iter().filter_map(|r| r.warning.clone()).collect();
    warnings.dedup();
    let manifest = ExperimentManifest {
        name: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        strategies: results.strategies.clone(),
        baseline,
        subjects: results.subjects.clone(),
        failures: results.failures.iter().map(|f| (f.subject.clone(), f.error.clone())).collect(),
        warnings,
        config: config_text.into(),
        host: HostInfo::current(),
    };
    write_bytes(&dir.join(MANIFEST_FILE), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(comparisons)
}

fn compare_all(results: &ExperimentResults, baseline: Strategy) -> Result<Vec<Comparison>> {
    if !results.strategies.contains(&baseline) {
        return Ok(Vec::new());
    }
    let base = results.summarize(baseline);
    results
        .strategies
        .iter()
        .filter(|&&s| s != baseline)
        .map(|&s| compare(&results.summarize(s), &base))
        .collect()
}

/// Per-subject F1DEmean of `strategy` from an experiment directory.
pub fn load_scores(dir: &Path, strategy: Strategy) -> Result<SubjectScores> {
    let rows: Vec<PerSubjectRow> = read_rows(&strategy_dir(dir, strategy).join(PER_SUBJECT_FILE))?;
    let summaries: Vec<SubjectSummary> = rows.iter().map(PerSubjectRow::summary).collect();
    SubjectScores::from_summaries(&summaries)
}

/// Per-subject F1DEmean of an external classifier. `dir` holds
/// `<subject>/<test>.csv` prediction files with `truth` and `pred` columns;
/// predictions are post-processed like the strategies' raw labels.
pub fn external_scores(dir: &Path, name: &str, settings: &Settings) -> Result<SubjectScores> {
    let mut subjects: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subjects.sort();
    let mut scores = Vec::new();
    for sdir in subjects {
        let mut files: Vec<PathBuf> = std::fs::read_dir(&sdir)
            .map_err(|e| Error::io(&sdir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            continue;
        }
        let mut total = 0.0;
        for f in &files {
            let rows = read_predictions(f)?;
            let pred: Vec<u8> = rows.iter().map(|r| r.pred).collect();
            let truth: Vec<u8> = rows.iter().map(|r| r.truth).collect();
            total += file_score(&pred, &truth, settings)?;
        }
        let subject = sdir.file_name().unwrap().to_string_lossy().into_owned();
        scores.push((subject, Some(total / files.len() as f64)));
    }
    Ok(SubjectScores {
        name: name.into(),
        scores,
    })
}

pub fn write_comparisons(path: &Path, comparisons: &[Comparison]) -> Result<()> {
    let rows: Vec<ComparisonRow> = comparisons.iter().map(ComparisonRow::from).collect();
    write_rows(path, &rows)
}

pub fn write_bench(dir: &Path, rows: &[BenchRow], host: &HostInfo) -> Result<()> {
    write_rows(&dir.join(BENCH_FILE), rows)?;
    write_bytes(&dir.join("bench_host.json"), &serde_json::to_vec_pretty(host)?)
}

/// One line of the aggregate report: subject means of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strategy: Strategy,
    pub subjects: usize,
    pub failed_subjects: usize,
    pub ep_tpr: f64,
    pub ep_ppv: f64,
    pub ep_f1: f64,
    pub du_tpr: f64,
    pub du_ppv: f64,
    pub du_f1: f64,
    pub f1de_mean: f64,
    pub mean_centroids_0: f64,
    pub mean_centroids_1: f64,
}

/// Aggregates the per-subject files of `dir` into `report.csv` and
/// `report.json`.
pub fn write_report(dir: &Path) -> Result<Vec<ReportRow>> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: ExperimentManifest = serde_json::from_str(&text)?;
    let mut report = Vec::new();
    for &s in &manifest.strategies {
        let rows: Vec<PerSubjectRow> = read_rows(&strategy_dir(dir, s).join(PER_SUBJECT_FILE))?;
        let ok: Vec<SubjectSummary> = rows.iter().map(PerSubjectRow::summary).filter(|r| r.mean.is_some()).collect();
        let n = ok.len();
        let avg = |f: &dyn Fn(&SubjectSummary) -> f64| {
            if n == 0 { f64::NAN } else { ok.iter().map(f).sum::<f64>() / n as f64 }
        };
        let m = |i: usize| avg(&|r: &SubjectSummary| r.mean.unwrap()[i]);
        report.push(ReportRow {
            strategy: s,
            subjects: n,
            failed_subjects: rows.len() - n,
            ep_tpr: m(0),
            ep_ppv: m(1),
            ep_f1: m(2),
            du_tpr: m(3),
            du_ppv: m(4),
            du_f1: m(5),
            f1de_mean: m(6),
            mean_centroids_0: avg(&|r| r.mean_centroids[0]),
            mean_centroids_1: avg(&|r| r.mean_centroids[1]),
        });
    }
    write_rows(&dir.join("report.csv"), &report)?;
    write_bytes(&dir.join("report.json"), &serde_json::to_vec_pretty(&report)?)?;
    Ok(report)
}

/// A row of an externally produced prediction file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRow {
    pub truth: u8,
    pub pred: u8,
}

/// Reads `truth` and `pred` columns (or `raw` when there is no `pred`).
pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let truth = col("truth").ok_or_else(|| Error::parse(path, 1, "missing truth column"))?;
    let pred = col("pred")
        .or_else(|| col("raw"))
        .ok_or_else(|| Error::parse(path, 1, "missing pred column"))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bit = |c: usize| match rec.get(c).map(str::trim) {
            Some("0") => Ok(0u8),
            Some("1") => Ok(1u8),
            v => Err(Error::parse(path, line, format!("label {v:?} is not 0 or 1"))),
        };
        out.push(PredictionRow {
            truth: bit(truth)?,
            pred: bit(pred)?,
        });
    }
    Ok(out)
}

/// Header of the score columns, for callers printing tables.
pub fn score_header() -> String {
    SCORE_NAMES.join(",")
}
