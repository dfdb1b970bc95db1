//! Recording CSV (`time,<channel>...`) and annotation CSV
//! (`subject_id,file,start_sec,end_sec`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{validate_annotations, Annotation, Recording};

/// Largest tolerated deviation of a timestamp from the uniform grid.
pub const TIME_JITTER_SEC: f64 = 1e-6;

pub fn read_csv_recording(path: &Path) -> Result<Recording> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("time") {
        return Err(Error::parse(path, 1, "expected header time,<channel>..."));
    }
    let channels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut times = Vec::new();
    let mut samples = vec![Vec::new(); channels.len()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let mut it = rec.iter().map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("{v:?} is not a number")))
        });
        times.push(it.next().unwrap()?);
        for s in samples.iter_mut() {
            s.push(it.next().unwrap()?);
        }
    }
    if times.len() < 2 {
        return Err(Error::parse(path, 1, "need at least two rows to infer the sampling rate"));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::parse(path, 3, "timestamps must increase"));
    }
    for (i, &t) in times.iter().enumerate() {
        if (t - times[0] - i as f64 * dt).abs() > TIME_JITTER_SEC {
            return Err(Error::parse(
                path,
                i as u64 + 2,
                format!("timestamp {t} is off the uniform {dt} s grid"),
            ));
        }
    }
    Recording::new(1.0 / dt, channels, samples, Vec::new())
}

/// Writes `time` as `i / fs`.
pub fn write_csv_recording(path: &Path, rec: &Recording) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["time".to_string()];
    header.extend(rec.channels.iter().cloned());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..rec.n_samples() {
        row.clear();
        row.push((i as f64 / rec.fs).to_string());
        row.extend(rec.samples.iter().map(|s| s[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub subject_id: String,
    pub file: String,
    pub start_sec: f64,
    pub end_sec: f64,
}

/// All rows; intervals of one file must not overlap.
pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<AnnotationRow> = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let row: AnnotationRow = row.map_err(|e| Error::parse(path, i as u64 + 2, e.to_string()))?;
        if !(row.start_sec >= 0.0 && row.start_sec < row.end_sec) {
            return Err(Error::parse(path, i as u64 + 2, "start_sec must be >= 0 and below end_sec"));
        }
        rows.push(row);
    }
    let mut keys: Vec<(&str, &str)> = rows.iter().map(|r| (r.subject_id.as_str(), r.file.as_str())).collect();
    keys.sort();
    keys.dedup();
    for (s, f) in keys {
        validate_annotations(&annotations_for(&rows, s, f), f64::INFINITY)
            .map_err(|e| Error::parse(path, 0, format!("{s}/{f}: {e}")))?;
    }
    Ok(rows)
}

/// Intervals of one file, sorted by start.
pub fn annotations_for(rows: &[AnnotationRow], subject: &str, file: &str) -> Vec<Annotation> {
    let mut out: Vec<Annotation> = rows
        .iter()
        .filter(|r| r.subject_id == subject && r.file == file)
        .map(|r| (r.start_sec, r.end_sec))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

pub fn write_annotations(path: &Path, rows: &[AnnotationRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["subject_id", "file", "start_sec", "end_sec"])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
