//! Pipeline stages driven by an [`ExperimentConfig`]: synthetic corpus,
//! ingestion, featurization and dataset loading.
//!
//! Raw data layout: `<data_root>/<subject>/<file>.{edf,csv}` plus
//! `<data_root>/annotations.csv`. Featurized data:
//! `<work_dir>/<subject>/seiz<k>.csv` with a per-subject manifest.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dataio::{
    annotations_for, bipolar_montage, fnv1a, load_subject_dataset, materialize, plan_dataset, read_annotations,
    read_csv_recording, read_edf, synth_generate, write_annotations, write_csv_recording, write_subject_dataset,
    AnnotationRow, DatasetManifest, RecordingInfo, SubjectDataset, SynthSpec, MANIFEST_NAME,
};
use crate::error::{Error, Result};
use crate::features::{validate_annotations, FeatureRegistry, Recording};

pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const INGEST_FILE: &str = "ingest.json";
pub const STAGE_MANIFEST: &str = "manifest.json";

/// Record of how a stage output was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub version: String,
    pub seed: u64,
    /// Fully resolved configuration text.
    pub config: String,
}

impl StageManifest {
    pub fn new(stage: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            stage: stage.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.seed,
            config: cfg.to_text(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(STAGE_MANIFEST);
        std::fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))
    }
}

pub fn synth_subject_name(i: usize) -> String {
    format!("syn{:02}", i + 1)
}

/// Synthetic recordings of one subject, in memory.
pub fn synth_subject(cfg: &ExperimentConfig, subject: &str) -> Result<Vec<(String, Recording)>> {
    let s = &cfg.synth;
    let spec = SynthSpec::multimodal(s.duration_sec, s.fs, s.channels, s.seizures_per_recording);
    (0..s.recordings_per_subject)
        .map(|r| {
            let name = format!("{subject}_{:02}", r + 1);
            let seed = cfg.seed ^ fnv1a(&name);
            Ok((name, synth_generate(&spec, seed)?))
        })
        .collect()
}

/// Writes the synthetic corpus as recording CSVs plus an annotation CSV.
pub fn synth_corpus(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    let subjects: Vec<String> = (0..cfg.synth.subjects).map(synth_subject_name).collect();
    let rows: Vec<Vec<AnnotationRow>> = subjects
        .par_iter()
        .map(|subject| {
            let mut rows = Vec::new();
            for (name, rec) in synth_subject(cfg, subject)? {
                write_csv_recording(&out.join(subject).join(format!("{name}.csv")), &rec)?;
                rows.extend(rec.annotations.iter().map(|&(s, e)| AnnotationRow {
                    subject_id: subject.clone(),
                    file: name.clone(),
                    start_sec: s,
                    end_sec: e,
                }));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    write_annotations(&out.join(ANNOTATIONS_FILE), &rows.concat())?;
    StageManifest::new("synth", cfg).write(out)?;
    Ok(subjects)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    Edf,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedRecording {
    pub path: PathBuf,
    pub format: SourceFormat,
    pub channels: Vec<String>,
    pub info: RecordingInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedSubject {
    pub subject: String,
    pub recordings: Vec<IngestedRecording>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestIndex {
    pub data_root: PathBuf,
    /// Channels requested from every recording; empty keeps CSV columns as
    /// they are and selects the bipolar montage from EDF.
    pub channels: Vec<String>,
    pub subjects: Vec<IngestedSubject>,
}

fn channel_request(cfg: &ExperimentConfig, format: SourceFormat) -> Option<Vec<String>> {
    match (format, cfg.channels.is_empty()) {
        (_, false) => Some(cfg.channels.clone()),
        (SourceFormat::Edf, true) => Some(bipolar_montage()),
        (SourceFormat::Csv, true) => None,
    }
}

fn select_channels(rec: Recording, wanted: &[String], path: &Path) -> Result<Recording> {
    let mut samples = Vec::with_capacity(wanted.len());
    for w in wanted {
        let i = rec
            .channels
            .iter()
            .position(|c| c.eq_ignore_ascii_case(w))
            .ok_or_else(|| Error::Invalid(format!("{}: channel {w} not found", path.display())))?;
        samples.push(rec.samples[i].clone());
    }
    Recording::new(rec.fs, wanted.to_vec(), samples, rec.annotations)
}

/// Loads one recording with the configured channels and its annotations.
pub fn load_recording(cfg: &ExperimentConfig, path: &Path, format: SourceFormat, annotations: Vec<(f64, f64)>) -> Result<Recording> {
    let wanted = channel_request(cfg, format);
    let rec = match format {
        SourceFormat::Edf => read_edf(path, wanted.as_deref())?,
        SourceFormat::Csv => {
            let rec = read_csv_recording(path)?;
            match &wanted {
                Some(w) => select_channels(rec, w, path)?,
                None => rec,
            }
        }
    };
    validate_annotations(&annotations, rec.duration_sec())
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    Recording::new(rec.fs, rec.channels, rec.samples, annotations)
}

fn recording_files(dir: &Path) -> Result<Vec<(PathBuf, SourceFormat)>> {
    let mut out: Vec<(PathBuf, SourceFormat)> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| {
            let ext = p.extension()?.to_str()?.to_ascii_lowercase();
            match ext.as_str() {
                "edf" => Some((p, SourceFormat::Edf)),
                "csv" => Some((p, SourceFormat::Csv)),
                _ => None,
            }
        })
        .collect();
    out.sort();
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

/// Annotation rows match a recording by file stem or full file name.
fn annotations_of(rows: &[AnnotationRow], subject: &str, path: &Path) -> Vec<(f64, f64)> {
    let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
    let mut a = annotations_for(rows, subject, &stem(path));
    a.extend(annotations_for(rows, subject, &name));
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    a
}

/// Scans the data root, reads every recording once to validate it, and
/// writes the index to `<work_dir>/ingest.json`.
pub fn ingest(cfg: &ExperimentConfig) -> Result<IngestIndex> {
    let root = &cfg.data_root;
    let ann_path = root.join(ANNOTATIONS_FILE);
    if !ann_path.exists() {
        return Err(Error::Invalid(format!("{} not found", ann_path.display())));
    }
    let rows = read_annotations(&ann_path)?;
    let mut subject_dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subject_dirs.sort();
    let mut subjects = Vec::new();
    for dir in subject_dirs {
        let subject = stem(&dir);
        let files = recording_files(&dir)?;
        if files.is_empty() {
            continue;
        }
        // EDF files are large; read them one at a time
        let recordings = files
            .iter()
            .map(|(path, format)| {
                let rec = load_recording(cfg, path, *format, annotations_of(&rows, &subject, path))?;
                Ok(IngestedRecording {
                    path: path.clone(),
                    format: *format,
                    channels: rec.channels.clone(),
                    info: RecordingInfo::of(&stem(path), &rec),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        subjects.push(IngestedSubject { subject, recordings });
    }
    if subjects.is_empty() {
        return Err(Error::Invalid(format!("no subject directories with recordings under {}", root.display())));
    }
    let index = IngestIndex {
        data_root: root.clone(),
        channels: cfg.channels.clone(),
        subjects,
    };
    std::fs::create_dir_all(&cfg.work_dir).map_err(|e| Error::io(&cfg.work_dir, e))?;
    let path = cfg.work_dir.join(INGEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&index)?).map_err(|e| Error::io(&path, e))?;
    Ok(index)
}

pub fn read_ingest(work_dir: &Path) -> Result<Option<IngestIndex>> {
    let path = work_dir.join(INGEST_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeaturizeStatus {
    Written { files: usize },
    Skipped,
    Failed(String),
}

/// A subject is up to date when its manifest was made with the same
/// dataset settings and registry and all listed files exist.
fn up_to_date(dir: &Path, cfg: &ExperimentConfig, registry: &FeatureRegistry) -> bool {
    let Ok(text) = std::fs::read_to_string(dir.join(MANIFEST_NAME)) else {
        return false;
    };
    let Ok(m) = serde_json::from_str::<DatasetManifest>(&text) else {
        return false;
    };
    m.config == cfg.dataset() && &m.registry == registry && m.files.iter().all(|f| dir.join(&f.file).exists())
}

fn featurize_subject(cfg: &ExperimentConfig, subject: &IngestedSubject, registry: &FeatureRegistry) -> Result<usize> {
    let infos: Vec<RecordingInfo> = subject.recordings.iter().map(|r| r.info.clone()).collect();
    let plan = plan_dataset(&subject.subject, &infos, &cfg.dataset())?;
    let ds = materialize(&plan, registry, |i| {
        let r = &subject.recordings[i];
        load_recording(cfg, &r.path, r.format, r.info.annotations.clone())
    })?;
    let dir = cfg.work_dir.join(&subject.subject);
    // stale seizure files from an earlier configuration would be picked up
    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    write_subject_dataset(&dir, &plan, &ds, registry)?;
    Ok(ds.files.len())
}

/// Featurizes every ingested subject, in parallel across subjects. Subjects
/// already featurized with the same settings are skipped unless `force`.
/// Ingests first when there is no index yet.
pub fn featurize(cfg: &ExperimentConfig, force: bool) -> Result<Vec<(String, FeaturizeStatus)>> {
    let registry = FeatureRegistry::by_id(&cfg.registry)?;
    let index = match read_ingest(&cfg.work_dir)? {
        Some(i) if !force && i.data_root == cfg.data_root && i.channels == cfg.channels => i,
        _ => ingest(cfg)?,
    };
    let out = index
        .subjects
        .par_iter()
        .map(|s| {
            let dir = cfg.work_dir.join(&s.subject);
            let status = if !force && up_to_date(&dir, cfg, &registry) {
                FeaturizeStatus::Skipped
            } else {
                match featurize_subject(cfg, s, &registry) {
                    Ok(files) => FeaturizeStatus::Written { files },
                    Err(e) => FeaturizeStatus::Failed(e.to_string()),
                }
            };
            (s.subject.clone(), status)
        })
        .collect();
    StageManifest::new("featurize", cfg).write(&cfg.work_dir)?;
    Ok(out)
}

/// Every featurized subject under `work_dir`, sorted by name.
pub fn load_datasets(work_dir: &Path) -> Result<Vec<SubjectDataset>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(work_dir)
        .map_err(|e| Error::io(work_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_NAME).exists())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Invalid(format!(
            "no featurized subjects under {}; run featurize first",
            work_dir.display()
        )));
    }
    dirs.par_iter().map(|d| load_subject_dataset(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.data_root = dir.join("raw");
        c.work_dir = dir.join("work");
        c.synth.subjects = 2;
        c.synth.duration_sec = 300.0;
        c.synth.channels = 2;
        c.synth.seizures_per_recording = 1;
        c.registry = "compact".into();
        c.step_sec = 2.0;
        c.ratio = 2.0;
        c.post_exclusion_sec = 60.0;
        c
    }

    #[test]
    fn synth_ingest_featurize_resume() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small(tmp.path());
        let subjects = synth_corpus(&cfg, &cfg.data_root).unwrap();
        assert_eq!(subjects, vec!["syn01", "syn02"]);
        let index = ingest(&cfg).unwrap();
        assert_eq!(index.subjects.len(), 2);
        assert_eq!(index.subjects[0].recordings.len(), 2);
        assert_eq!(index.subjects[0].recordings[0].info.annotations.len(), 1);

        let first = featurize(&cfg, false).unwrap();
        assert!(first.iter().all(|(_, s)| *s == FeaturizeStatus::Written { files: 2 }), "{first:?}");
        let again = featurize(&cfg, false).unwrap();
        assert!(again.iter().all(|(_, s)| *s == FeaturizeStatus::Skipped));
        let forced = featurize(&cfg, true).unwrap();
        assert!(forced.iter().all(|(_, s)| matches!(s, FeaturizeStatus::Written { .. })));

        let ds = load_datasets(&cfg.work_dir).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[0].files.len(), 2);
        assert_eq!(ds[0].features.len(), 14);
        for f in &ds[0].files {
            let ictal = f.windows.iter().filter(|w| w.label == 1).count();
            let other = f.windows.len() - ictal;
            assert!((other as f64 - 2.0 * ictal as f64).abs() <= 1.0, "{ictal} {other}");
        }
    }

    #[test]
    fn changed_settings_refeaturize() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small(tmp.path());
        cfg.synth.subjects = 1;
        synth_corpus(&cfg, &cfg.data_root).unwrap();
        featurize(&cfg, false).unwrap();
        cfg.ratio = 1.0;
        let r = featurize(&cfg, false).unwrap();
        assert!(matches!(r[0].1, FeaturizeStatus::Written { .. }));
    }

    #[test]
    fn missing_channel_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small(tmp.path());
        cfg.synth.subjects = 1;
        synth_corpus(&cfg, &cfg.data_root).unwrap();
        cfg.channels = vec!["CH1".into(), "nope".into()];
        assert!(ingest(&cfg).is_err());
        cfg.channels = vec!["ch2".into()];
        let index = ingest(&cfg).unwrap();
        assert_eq!(index.subjects[0].recordings[0].channels, vec!["ch2".to_string()]);
    }
}
