//! Per-seizure dataset files.
//!
//! Each file holds every ictal window of one seizure plus `ratio` times as
//! many non-seizure windows drawn without replacement from the subject's
//! recordings outside all exclusion zones. Windows are selected from
//! recording metadata first and only the selected ones are featurized.

use std::path::{Path, PathBuf};

use hdc_core::FeatureWindow;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_at, label_at, read_feature_csv, write_feature_csv, Annotation, FeatureRegistry, FeatureTable, Recording, WindowGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub window_sec: f64,
    pub step_sec: f64,
    /// Non-seizure windows per ictal window in every file.
    pub ratio: f64,
    pub pre_exclusion_sec: f64,
    pub post_exclusion_sec: f64,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            window_sec: 4.0,
            step_sec: 0.5,
            ratio: 10.0,
            pre_exclusion_sec: 60.0,
            post_exclusion_sec: 900.0,
            seed: 0,
        }
    }
}

/// What the planner needs to know about a recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingInfo {
    pub name: String,
    pub fs: f64,
    pub n_samples: usize,
    pub annotations: Vec<Annotation>,
}

impl RecordingInfo {
    pub fn of(name: &str, rec: &Recording) -> Self {
        Self {
            name: name.to_string(),
            fs: rec.fs,
            n_samples: rec.n_samples(),
            annotations: rec.annotations.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowRef {
    pub recording: usize,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeizureFilePlan {
    pub name: String,
    pub recording: usize,
    pub seizure: Annotation,
    pub n_ictal: usize,
    pub n_non_seizure: usize,
    /// Chronological: by recording, then start sample.
    pub windows: Vec<WindowRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPlan {
    pub subject: String,
    pub recordings: Vec<RecordingInfo>,
    pub config: DatasetConfig,
    pub files: Vec<SeizureFilePlan>,
    pub warnings: Vec<String>,
}

/// Stable 64-bit FNV-1a, used to derive per-subject seeds.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn seizure_rng(seed: u64, subject: &str, k: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(subject));
    r.set_stream(k as u64 + 1);
    r
}

fn in_zone(mid: f64, annotations: &[Annotation], cfg: &DatasetConfig) -> bool {
    annotations
        .iter()
        .any(|&(s, e)| mid >= s - cfg.pre_exclusion_sec && mid < e + cfg.post_exclusion_sec)
}

pub fn plan_dataset(subject: &str, recordings: &[RecordingInfo], cfg: &DatasetConfig) -> Result<DatasetPlan> {
    if !(cfg.ratio >= 0.0) || cfg.pre_exclusion_sec < 0.0 || cfg.post_exclusion_sec < 0.0 {
        return Err(Error::Invalid("ratio and exclusion lengths must be non-negative".into()));
    }
    let mut seizures: Vec<(usize, Annotation, Vec<WindowRef>)> = Vec::new();
    let mut pool: Vec<WindowRef> = Vec::new();
    for (ri, info) in recordings.iter().enumerate() {
        let grid = WindowGrid::new(info.fs, cfg.window_sec, cfg.step_sec)?;
        let mid = |start: usize| (start as f64 + 0.5 * grid.len as f64) / info.fs;
        let starts = grid.starts(info.n_samples);
        for &(s, e) in &info.annotations {
            let ictal: Vec<WindowRef> = starts
                .iter()
                .filter(|&&st| (s..e).contains(&mid(st)))
                .map(|&start| WindowRef { recording: ri, start })
                .collect();
            seizures.push((ri, (s, e), ictal));
        }
        pool.extend(
            starts
                .iter()
                .filter(|&&st| !in_zone(mid(st), &info.annotations, cfg))
                .map(|&start| WindowRef { recording: ri, start }),
        );
    }
    seizures.sort_by(|a, b| (a.0, a.1 .0).partial_cmp(&(b.0, b.1 .0)).unwrap());

    let mut warnings = Vec::new();
    match seizures.len() {
        0 => return Err(Error::Invalid(format!("subject {subject} has no annotated seizures"))),
        1 => warnings.push(format!(
            "subject {subject} has a single seizure; cross-validation falls back to a chronological split"
        )),
        _ => {}
    }

    let mut files = Vec::with_capacity(seizures.len());
    for (k, (ri, seizure, ictal)) in seizures.into_iter().enumerate() {
        if ictal.is_empty() {
            warnings.push(format!(
                "seizure [{}, {}) in {} is shorter than a window step and has no ictal windows",
                seizure.0, seizure.1, recordings[ri].name
            ));
        }
        let need = (cfg.ratio * ictal.len() as f64).round() as usize;
        if need > pool.len() {
            return Err(Error::Invalid(format!(
                "subject {subject}, seizure {}: need {need} non-seizure windows but only {} remain outside exclusion zones (deficit {})",
                k + 1,
                pool.len(),
                need - pool.len()
            )));
        }
        let mut rng = seizure_rng(cfg.seed, subject, k);
        let mut picked: Vec<usize> = sample(&mut rng, pool.len(), need).into_vec();
        picked.sort_unstable();
        let mut windows: Vec<WindowRef> = picked.iter().map(|&i| pool[i]).collect();
        let mut taken = vec![false; pool.len()];
        for &i in &picked {
            taken[i] = true;
        }
        let mut pos = 0;
        pool.retain(|_| {
            pos += 1;
            !taken[pos - 1]
        });
        let n_ictal = ictal.len();
        windows.extend(ictal);
        windows.sort();
        files.push(SeizureFilePlan {
            name: format!("seiz{}", k + 1),
            recording: ri,
            seizure,
            n_ictal,
            n_non_seizure: need,
            windows,
        });
    }
    Ok(DatasetPlan {
        subject: subject.to_string(),
        recordings: recordings.to_vec(),
        config: *cfg,
        files,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeizureFile {
    pub name: String,
    pub windows: Vec<FeatureWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectDataset {
    pub subject: String,
    pub channels: Vec<String>,
    pub features: Vec<String>,
    pub files: Vec<SeizureFile>,
}

impl SubjectDataset {
    pub fn n_windows(&self) -> usize {
        self.files.iter().map(|f| f.windows.len()).sum()
    }
}

/// Featurizes the planned windows, loading one recording at a time.
pub fn materialize(
    plan: &DatasetPlan,
    registry: &FeatureRegistry,
    mut load: impl FnMut(usize) -> Result<Recording>,
) -> Result<SubjectDataset> {
    let mut per_file: Vec<Vec<Option<FeatureWindow>>> = plan.files.iter().map(|f| vec![None; f.windows.len()]).collect();
    let mut channels: Option<Vec<String>> = None;
    for (ri, info) in plan.recordings.iter().enumerate() {
        let wanted: Vec<(usize, usize, usize)> = plan
            .files
            .iter()
            .enumerate()
            .flat_map(|(fi, f)| {
                f.windows
                    .iter()
                    .enumerate()
                    .filter(move |(_, w)| w.recording == ri)
                    .map(move |(wi, w)| (fi, wi, w.start))
            })
            .collect();
        if wanted.is_empty() {
            continue;
        }
        let rec = load(ri)?;
        if rec.n_samples() != info.n_samples || rec.fs != info.fs {
            return Err(Error::Invalid(format!("recording {} changed since planning", info.name)));
        }
        match &channels {
            None => channels = Some(rec.channels.clone()),
            Some(c) if *c != rec.channels => {
                return Err(Error::Invalid(format!("recording {} has different channels", info.name)))
            }
            _ => {}
        }
        let grid = WindowGrid::new(rec.fs, plan.config.window_sec, plan.config.step_sec)?;
        let starts: Vec<usize> = wanted.iter().map(|w| w.2).collect();
        let windows = extract_at(&rec, &starts, grid.len, registry)?;
        for ((fi, wi, _), w) in wanted.into_iter().zip(windows) {
            per_file[fi][wi] = Some(w);
        }
    }
    let files = plan
        .files
        .iter()
        .zip(per_file)
        .map(|(f, ws)| SeizureFile {
            name: f.name.clone(),
            windows: ws.into_iter().map(|w| w.expect("every planned window is extracted")).collect(),
        })
        .collect();
    Ok(SubjectDataset {
        subject: plan.subject.clone(),
        channels: channels.unwrap_or_default(),
        features: registry.names().iter().map(|s| s.to_string()).collect(),
        files,
    })
}

/// Plans and featurizes in-memory recordings.
pub fn build_dataset(
    subject: &str,
    recordings: &[(String, Recording)],
    cfg: &DatasetConfig,
    registry: &FeatureRegistry,
) -> Result<(DatasetPlan, SubjectDataset)> {
    let infos: Vec<RecordingInfo> = recordings.iter().map(|(n, r)| RecordingInfo::of(n, r)).collect();
    let plan = plan_dataset(subject, &infos, cfg)?;
    let ds = materialize(&plan, registry, |i| Ok(recordings[i].1.clone()))?;
    Ok((plan, ds))
}

/// Labels of planned windows from the recording annotations.
pub fn planned_labels(plan: &DatasetPlan, file: &SeizureFilePlan) -> Vec<u8> {
    file.windows
        .iter()
        .map(|w| {
            let info = &plan.recordings[w.recording];
            let len = (plan.config.window_sec * info.fs).round();
            label_at((w.start as f64 + 0.5 * len) / info.fs, &info.annotations)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFileEntry {
    pub file: String,
    pub recording: String,
    pub seizure_start_sec: f64,
    pub seizure_end_sec: f64,
    pub n_ictal: usize,
    pub n_non_seizure: usize,
}

/// Written next to the per-seizure files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub subject: String,
    pub config: DatasetConfig,
    pub ratio_scope: String,
    pub registry: FeatureRegistry,
    pub channels: Vec<String>,
    pub recordings: Vec<String>,
    pub files: Vec<DatasetFileEntry>,
    pub warnings: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn write_subject_dataset(dir: &Path, plan: &DatasetPlan, ds: &SubjectDataset, registry: &FeatureRegistry) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for f in &ds.files {
        let table = FeatureTable {
            channels: ds.channels.clone(),
            features: ds.features.clone(),
            windows: f.windows.clone(),
        };
        write_feature_csv(&dir.join(format!("{}.csv", f.name)), &table)?;
    }
    let manifest = DatasetManifest {
        subject: ds.subject.clone(),
        config: plan.config,
        ratio_scope: "per seizure file, in windows".into(),
        registry: registry.clone(),
        channels: ds.channels.clone(),
        recordings: plan.recordings.iter().map(|r| r.name.clone()).collect(),
        files: plan
            .files
            .iter()
            .map(|f| DatasetFileEntry {
                file: format!("{}.csv", f.name),
                recording: plan.recordings[f.recording].name.clone(),
                seizure_start_sec: f.seizure.0,
                seizure_end_sec: f.seizure.1,
                n_ictal: f.n_ictal,
                n_non_seizure: f.n_non_seizure,
            })
            .collect(),
        warnings: plan.warnings.clone(),
    };
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}

fn seizure_index(p: &Path) -> Option<usize> {
    p.file_stem()?.to_str()?.strip_prefix("seiz")?.parse().ok()
}

/// Reads `seiz<k>.csv` files of one subject directory in `k` order.
pub fn load_subject_dataset(dir: &Path) -> Result<SubjectDataset> {
    let mut paths: Vec<(usize, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .filter_map(|p| seizure_index(&p).map(|k| (k, p)))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Invalid(format!("{} holds no seiz<k>.csv files", dir.display())));
    }
    let subject = dir
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    let mut channels = Vec::new();
    let mut features = Vec::new();
    let mut files = Vec::new();
    for (i, (_, p)) in paths.iter().enumerate() {
        let t = read_feature_csv(p)?;
        if i == 0 {
            channels = t.channels;
            features = t.features;
        } else if t.channels != channels || t.features != features {
            return Err(Error::Invalid(format!("{} has different columns", p.display())));
        }
        files.push(SeizureFile {
            name: p.file_stem().unwrap().to_string_lossy().into_owned(),
            windows: t.windows,
        });
    }
    Ok(SubjectDataset {
        subject,
        channels,
        features,
        files,
    })
}
