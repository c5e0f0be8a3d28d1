//! CSV reading and writing for point datasets.
//!
//! The dialect is deliberately plain: comma-separated, no quoting, an
//! optional header row (detected by failing to parse as numbers), and an
//! optional label column marked by a trailing header field named `label`.
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces values bit-exactly.

use std::path::Path;

use anyhow::{bail, Context, Result};
use augseq::point::DataPoint;

/// A parsed point dataset: feature vectors plus optional verbatim labels.
#[derive(Debug, Clone)]
pub struct PointSet {
    pub points: Vec<DataPoint>,
    /// Label strings, exactly as read; present iff the header ends in `label`.
    pub labels: Option<Vec<String>>,
    /// The header line, if the file had one.
    pub header: Option<String>,
}

impl PointSet {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, DataPoint::dim)
    }
}

fn is_numeric_row(fields: &[&str]) -> bool {
    fields.iter().all(|f| f.trim().parse::<f64>().is_ok())
}

/// Reads a CSV of points. The last column is treated as labels when the
/// header names it `label`; otherwise every column must be numeric.
pub fn read_points(path: &Path) -> Result<PointSet> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("failed to read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();

    let mut header = None;
    let mut labeled = false;
    if let Some(first) = lines.peek() {
        let fields: Vec<&str> = first.split(',').collect();
        if !is_numeric_row(&fields) {
            labeled = fields.last().is_some_and(|f| f.trim() == "label");
            header = Some(first.trim_end_matches('\r').to_string());
            lines.next();
        }
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (i, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        let mut fields: Vec<&str> = line.split(',').collect();
        let label = if labeled {
            Some(fields.pop().unwrap_or_default().to_string())
        } else {
            None
        };
        let values: Vec<f64> = fields
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}: non-numeric field in data row {}", path.display(), i + 1))?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                bail!(
                    "{}: row {} has {} columns, expected {}",
                    path.display(),
                    i + 1,
                    values.len(),
                    d
                );
            }
            _ => {}
        }
        points.push(DataPoint::new(values));
        if let Some(l) = label {
            labels.push(l);
        }
    }
    if points.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(PointSet {
        points,
        labels: labeled.then_some(labels),
        header,
    })
}

/// Formats one CSV row: features with shortest round-trip formatting, then
/// the verbatim label if any.
pub fn format_row(values: &[f64], label: Option<&str>) -> String {
    let mut fields: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    if let Some(l) = label {
        fields.push(l.to_string());
    }
    fields.join(",")
}

/// Default header for an unlabeled point file: `x0,x1,...`.
pub fn feature_header(dim: usize) -> String {
    (0..dim)
        .map(|i| format!("x{i}"))
        .collect::<Vec<_>>()
        .join(",")
}
