use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Mat;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
}

#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    /// `None` detects a header from a non-numeric feature cell in row one.
    pub has_header: Option<bool>,
    /// Per-feature `(min, max)`; scanned from the file when absent.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Fixed label vocabulary; labels outside it are rejected.
    pub label_names: Option<Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    /// Original label text, indexed by class id.
    pub label_names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
}

/// Reads a rectangular numeric CSV with one categorical label column. Features
/// are min-max scaled to `[0, 1]`; labels map to `0..m` in order of first
/// appearance.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<LoadedCsv> {
    let err = |line: u64, message: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(0, e.to_string()))?;

    let mut width: Option<usize> = None;
    let mut raw: Vec<f64> = Vec::new();
    let mut label_text: Vec<String> = Vec::new();
    let mut row_lines: Vec<u64> = Vec::new();
    let mut first = true;

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if w < 2 {
            return Err(err(line, "need at least one feature and a label".into()));
        }
        if record.len() != w {
            return Err(err(
                line,
                format!("expected {w} fields, found {}", record.len()),
            ));
        }
        let label_idx = match options.label_column {
            LabelColumn::Last => w - 1,
            LabelColumn::Index(i) if i < w => i,
            LabelColumn::Index(i) => {
                return Err(err(
                    line,
                    format!("label column {i} out of range for {w} fields"),
                ))
            }
        };
        let is_header = first
            && match options.has_header {
                Some(h) => h,
                None => record
                    .iter()
                    .enumerate()
                    .any(|(i, c)| i != label_idx && c.parse::<f64>().is_err()),
            };
        first = false;
        if is_header {
            continue;
        }
        row_lines.push(line);
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                label_text.push(cell.to_string());
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| err(line, format!("non-numeric value {cell:?} in column {i}")))?;
            if !v.is_finite() {
                return Err(err(line, format!("non-finite value in column {i}")));
            }
            raw.push(v);
        }
    }

    let n = width.map_or(0, |w| w - 1);
    let rows = label_text.len();
    if rows == 0 {
        return Err(err(0, "no data rows".into()));
    }

    let bounds = match &options.bounds {
        Some(b) if b.len() != n => {
            return Err(Error::Config(format!(
                "{} normalization bounds for {n} features",
                b.len()
            )))
        }
        Some(b) => b.clone(),
        None => scan_bounds(&raw, n),
    };
    let data: Vec<f64> = raw
        .iter()
        .enumerate()
        .map(|(i, &v)| scale(v, bounds[i % n]))
        .collect();

    let (labels, label_names) = map_labels(&label_text, options.label_names.as_deref())
        .map_err(|(row, name)| err(row_lines[row], format!("unknown label {name:?}")))?;
    Ok(LoadedCsv {
        dataset: Dataset {
            features: Mat::from_vec(rows, n, data)?,
            labels,
            classes: label_names.len(),
        },
        label_names,
        bounds,
    })
}

fn scan_bounds(raw: &[f64], n: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); n];
    for (i, &v) in raw.iter().enumerate() {
        let e = &mut b[i % n];
        e.0 = e.0.min(v);
        e.1 = e.1.max(v);
    }
    b
}

/// Min-max scaling clamped to `[0, 1]`; a zero-width range maps to 0.
fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    let range = hi - lo;
    if range <= 0.0 {
        0.0
    } else {
        ((v - lo) / range).clamp(0.0, 1.0)
    }
}

fn map_labels(
    text: &[String],
    fixed: Option<&[String]>,
) -> std::result::Result<(Vec<usize>, Vec<String>), (usize, String)> {
    let mut names: Vec<String> = fixed.map(<[String]>::to_vec).unwrap_or_default();
    let mut index: HashMap<String, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let mut labels = Vec::with_capacity(text.len());
    for (row, t) in text.iter().enumerate() {
        let id = match index.get(t) {
            Some(&id) => id,
            None if fixed.is_some() => return Err((row, t.clone())),
            None => {
                names.push(t.clone());
                index.insert(t.clone(), names.len() - 1);
                names.len() - 1
            }
        };
        labels.push(id);
    }
    Ok((labels, names))
}

/// Writes `f1,…,fn,label` with a header row; values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=data.input_dim()).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(csv_write_error)?;
    let mut record: Vec<String> = Vec::with_capacity(data.input_dim() + 1);
    for (row, label) in data.features.iter_rows().zip(&data.labels) {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(label.to_string());
        w.write_record(&record).map_err(csv_write_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_write_error(e: csv::Error) -> Error {
    Error::Csv {
        path: PathBuf::from("<output>"),
        line: 0,
        message: e.to_string(),
    }
}
