//! Feature CSV: `t_start,t_end,label`, then `channel.feature` columns in
//! channel-major registry order.

use std::path::Path;

use hdc_core::FeatureWindow;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub channels: Vec<String>,
    pub features: Vec<String>,
    pub windows: Vec<FeatureWindow>,
}

impl FeatureTable {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t_start".to_string(), "t_end".into(), "label".into()];
        for c in &self.channels {
            for f in &self.features {
                h.push(format!("{c}.{f}"));
            }
        }
        h
    }
}

pub fn write_feature_csv(path: &Path, table: &FeatureTable) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(table.header())?;
    let width = table.channels.len() * table.features.len();
    let mut row = Vec::with_capacity(3 + width);
    for win in &table.windows {
        if win.values().len() != width {
            return Err(Error::Invalid(format!(
                "window at {} s has {} values, table has {width} columns",
                win.t_start,
                win.values().len()
            )));
        }
        row.clear();
        row.push(win.t_start.to_string());
        row.push(win.t_end.to_string());
        row.push(win.label.to_string());
        row.extend(win.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_feature_csv(path: &Path) -> Result<FeatureTable> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 4 || &header[0] != "t_start" || &header[1] != "t_end" || &header[2] != "label" {
        return Err(Error::parse(path, 1, "expected header t_start,t_end,label,<channel.feature>..."));
    }
    let mut channels: Vec<String> = Vec::new();
    let mut features: Vec<String> = Vec::new();
    let mut pairs = Vec::new();
    for col in header.iter().skip(3) {
        let (c, f) = col
            .rsplit_once('.')
            .ok_or_else(|| Error::parse(path, 1, format!("column {col:?} is not channel.feature")))?;
        if !channels.iter().any(|x| x == c) {
            channels.push(c.to_string());
        }
        if !features.iter().any(|x| x == f) {
            features.push(f.to_string());
        }
        pairs.push((c.to_string(), f.to_string()));
    }
    let expected: Vec<(String, String)> = channels
        .iter()
        .flat_map(|c| features.iter().map(move |f| (c.clone(), f.clone())))
        .collect();
    if pairs != expected {
        return Err(Error::parse(path, 1, "columns are not a full channel-major channel x feature grid"));
    }
    let mut windows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("column {} is not a number: {:?}", k + 1, &rec[k])))
        };
        let label = match &rec[2] {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::parse(path, line, format!("label {other:?} is not 0 or 1"))),
        };
        let values = (3..rec.len()).map(num).collect::<Result<Vec<_>>>()?;
        windows.push(FeatureWindow::new(num(0)?, num(1)?, channels.len(), features.len(), values, label)?);
    }
    Ok(FeatureTable {
        channels,
        features,
        windows,
    })
}
