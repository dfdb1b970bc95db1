//! Plain EDF reader.
//!
//! Spec of the format: <https://www.edfplus.info/specs/edf.html>. EDF+
//! annotation signals are not interpreted.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::Recording;

const MAIN_HEADER: usize = 256;
const SIGNAL_HEADER: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EdfSignal {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
}

impl EdfSignal {
    pub fn gain(&self) -> f64 {
        (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min) as f64
    }

    pub fn to_physical(&self, digital: i16) -> f64 {
        self.physical_min + (digital as i32 - self.digital_min) as f64 * self.gain()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfHeader {
    pub version: String,
    pub patient: String,
    pub recording: String,
    pub start_date: String,
    pub start_time: String,
    pub header_bytes: usize,
    pub n_records: usize,
    pub record_duration: f64,
    pub signals: Vec<EdfSignal>,
}

impl EdfHeader {
    pub fn record_bytes(&self) -> usize {
        2 * self.signals.iter().map(|s| s.samples_per_record).sum::<usize>()
    }

    pub fn sampling_rate(&self, signal: usize) -> f64 {
        self.signals[signal].samples_per_record as f64 / self.record_duration
    }

    pub fn duration_sec(&self) -> f64 {
        self.n_records as f64 * self.record_duration
    }
}

struct Fields<'a> {
    path: &'a Path,
    bytes: &'a [u8],
}

impl Fields<'_> {
    fn err(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Edf {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            reason: reason.into(),
        }
    }

    fn text(&self, offset: usize, len: usize, what: &str) -> Result<String> {
        let raw = self
            .bytes
            .get(offset..offset + len)
            .ok_or_else(|| self.err(self.bytes.len(), format!("header truncated while reading {what}")))?;
        if let Some(p) = raw.iter().position(|b| !(0x20..=0x7e).contains(b)) {
            return Err(self.err(offset + p, format!("non-ASCII byte in {what}")));
        }
        Ok(String::from_utf8_lossy(raw).trim().to_string())
    }

    fn number<T: std::str::FromStr>(&self, offset: usize, len: usize, what: &str) -> Result<T> {
        let s = self.text(offset, len, what)?;
        s.parse()
            .map_err(|_| self.err(offset, format!("{what} {s:?} is not a valid number")))
    }
}

/// Parses the fixed-width header at the start of `bytes`.
pub fn parse_header(path: &Path, bytes: &[u8]) -> Result<EdfHeader> {
    let f = Fields { path, bytes };
    let version = f.text(0, 8, "version")?;
    if version != "0" {
        return Err(f.err(0, format!("unsupported version {version:?}")));
    }
    let header_bytes: usize = f.number(184, 8, "header size")?;
    let n_records: i64 = f.number(236, 8, "number of data records")?;
    let record_duration: f64 = f.number(244, 8, "data record duration")?;
    let ns: usize = f.number(252, 4, "number of signals")?;
    if ns == 0 {
        return Err(f.err(252, "no signals"));
    }
    if header_bytes != MAIN_HEADER + SIGNAL_HEADER * ns {
        return Err(f.err(
            184,
            format!("header size {header_bytes} disagrees with {ns} signals ({} expected)", MAIN_HEADER + SIGNAL_HEADER * ns),
        ));
    }
    if bytes.len() < header_bytes {
        return Err(f.err(bytes.len(), format!("header truncated: {ns} signals need {header_bytes} header bytes")));
    }
    if !(record_duration > 0.0) {
        return Err(f.err(244, "data record duration must be positive"));
    }

    // signal fields are stored field-major: all labels, then all transducers, ...
    let widths = [16usize, 80, 8, 8, 8, 8, 8, 80, 8, 32];
    let mut starts = [0usize; 10];
    let mut acc = MAIN_HEADER;
    for (s, w) in starts.iter_mut().zip(widths) {
        *s = acc;
        acc += w * ns;
    }
    let at = |field: usize, i: usize| starts[field] + widths[field] * i;
    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let sig = EdfSignal {
            label: f.text(at(0, i), 16, "signal label")?,
            transducer: f.text(at(1, i), 80, "transducer type")?,
            physical_dimension: f.text(at(2, i), 8, "physical dimension")?,
            physical_min: f.number(at(3, i), 8, "physical minimum")?,
            physical_max: f.number(at(4, i), 8, "physical maximum")?,
            digital_min: f.number(at(5, i), 8, "digital minimum")?,
            digital_max: f.number(at(6, i), 8, "digital maximum")?,
            prefiltering: f.text(at(7, i), 80, "prefiltering")?,
            samples_per_record: f.number(at(8, i), 8, "samples per record")?,
        };
        if sig.digital_max <= sig.digital_min {
            return Err(f.err(at(6, i), format!("signal {}: digital maximum not above minimum", sig.label)));
        }
        if sig.physical_max == sig.physical_min {
            return Err(f.err(at(4, i), format!("signal {}: physical range is empty", sig.label)));
        }
        signals.push(sig);
    }

    let mut header = EdfHeader {
        version,
        patient: f.text(8, 80, "patient")?,
        recording: f.text(88, 80, "recording")?,
        start_date: f.text(168, 8, "start date")?,
        start_time: f.text(176, 8, "start time")?,
        header_bytes,
        n_records: 0,
        record_duration,
        signals,
    };
    let record_bytes = header.record_bytes();
    if record_bytes == 0 {
        return Err(f.err(at(8, 0), "data records are empty"));
    }
    header.n_records = if n_records < 0 {
        (bytes.len() - header_bytes) / record_bytes
    } else {
        n_records as usize
    };
    Ok(header)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

/// Reads only the header (and checks the data size against it).
pub fn read_edf_header(path: &Path) -> Result<EdfHeader> {
    let bytes = read_file(path)?;
    let h = parse_header(path, &bytes)?;
    check_size(path, &h, bytes.len())?;
    Ok(h)
}

fn check_size(path: &Path, h: &EdfHeader, len: usize) -> Result<()> {
    let needed = h.header_bytes + h.n_records * h.record_bytes();
    if len < needed {
        let complete = (len - h.header_bytes) / h.record_bytes();
        return Err(Error::Edf {
            path: path.to_path_buf(),
            offset: len as u64,
            reason: format!(
                "data truncated in record {complete}: header declares {} records of {} bytes ({needed} bytes in total)",
                h.n_records,
                h.record_bytes()
            ),
        });
    }
    Ok(())
}

fn normalize(label: &str) -> String {
    let mut s = label.trim().to_ascii_uppercase();
    for prefix in ["EEG "] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest.to_string();
        }
    }
    for suffix in ["-REF", "-LE"] {
        if let Some(rest) = s.strip_suffix(suffix) {
            s = rest.to_string();
        }
    }
    s
}

/// How a requested channel is obtained from the file's signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Signal(usize),
    Difference(usize, usize),
}

fn resolve(path: &Path, h: &EdfHeader, name: &str) -> Result<Source> {
    let want = normalize(name);
    let labels: Vec<String> = h.signals.iter().map(|s| normalize(&s.label)).collect();
    if let Some(i) = labels.iter().position(|l| *l == want) {
        return Ok(Source::Signal(i));
    }
    // duplicated labels carry a numeric suffix, e.g. "T8-P8-0"
    let duplicate = labels.iter().position(|l| {
        l.strip_prefix(want.as_str())
            .and_then(|rest| rest.strip_prefix('-'))
            .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
    });
    if let Some(i) = duplicate {
        return Ok(Source::Signal(i));
    }
    if let Some((a, b)) = want.split_once('-') {
        let ia = labels.iter().position(|l| l == a);
        let ib = labels.iter().position(|l| l == b);
        if let (Some(ia), Some(ib)) = (ia, ib) {
            return Ok(Source::Difference(ia, ib));
        }
    }
    Err(Error::Edf {
        path: path.to_path_buf(),
        offset: MAIN_HEADER as u64,
        reason: format!("channel {name} is neither a signal nor derivable from referential signals; file has {:?}",
            h.signals.iter().map(|s| s.label.as_str()).collect::<Vec<_>>()),
    })
}

/// Reads an EDF file into a [`Recording`] without annotations.
///
/// `channels` selects signals by label (case-insensitive; `A-B` is derived
/// as `A - B` when only referential signals exist). `None` keeps every
/// signal. All selected signals must share one sampling rate.
pub fn read_edf(path: &Path, channels: Option<&[String]>) -> Result<Recording> {
    let bytes = read_file(path)?;
    let h = parse_header(path, &bytes)?;
    check_size(path, &h, bytes.len())?;

    let (names, sources): (Vec<String>, Vec<Source>) = match channels {
        Some(list) => list
            .iter()
            .map(|n| resolve(path, &h, n).map(|s| (n.clone(), s)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
        None => h
            .signals
            .iter()
            .enumerate()
            .map(|(i, s)| (s.label.clone(), Source::Signal(i)))
            .unzip(),
    };
    let used: Vec<usize> = sources
        .iter()
        .flat_map(|s| match *s {
            Source::Signal(i) => vec![i],
            Source::Difference(a, b) => vec![a, b],
        })
        .collect();
    let spr = h.signals[used[0]].samples_per_record;
    if let Some(&i) = used.iter().find(|&&i| h.signals[i].samples_per_record != spr) {
        return Err(Error::Edf {
            path: path.to_path_buf(),
            offset: (MAIN_HEADER + 216 * h.signals.len() + 8 * i) as u64,
            reason: format!("signal {} has a different sampling rate", h.signals[i].label),
        });
    }

    let mut offsets = Vec::with_capacity(h.signals.len());
    let mut acc = 0;
    for s in &h.signals {
        offsets.push(acc);
        acc += 2 * s.samples_per_record;
    }
    let record_bytes = h.record_bytes();
    let decode = |i: usize| -> Vec<f64> {
        let sig = &h.signals[i];
        let mut out = Vec::with_capacity(h.n_records * spr);
        for r in 0..h.n_records {
            let base = h.header_bytes + r * record_bytes + offsets[i];
            out.extend(
                bytes[base..base + 2 * spr]
                    .chunks_exact(2)
                    .map(|c| sig.to_physical(i16::from_le_bytes([c[0], c[1]]))),
            );
        }
        out
    };
    let samples = sources
        .iter()
        .map(|s| match *s {
            Source::Signal(i) => decode(i),
            Source::Difference(a, b) => decode(a).iter().zip(decode(b)).map(|(x, y)| x - y).collect(),
        })
        .collect();
    Recording::new(spr as f64 / h.record_duration, names, samples, Vec::new())
}

/// The 18-channel longitudinal bipolar montage used by CHB-MIT.
pub fn bipolar_montage() -> Vec<String> {
    [
        "FP1-F7", "F7-T7", "T7-P7", "P7-O1", "FP1-F3", "F3-C3", "C3-P3", "P3-O1", "FP2-F4", "F4-C4", "C4-P4", "P4-O2",
        "FP2-F8", "F8-T8", "T8-P8", "P8-O2", "FZ-CZ", "CZ-PZ",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn edf_path_list(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("edf")) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}
