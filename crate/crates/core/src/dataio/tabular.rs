use std::collections::BTreeMap;
use std::path::Path;

use csv::ReaderBuilder;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Load a delimited text file as a classification dataset. Every column
/// except the label column must be numeric. Distinct label strings become
/// class indices in lexicographic order, and the sorted strings are kept as
/// label names, so the mapping depends only on the set of labels, never on
/// row order.
///
/// With a header row, `label_col` names the label column; without one it is
/// the 0-based column index.
pub fn load_csv(path: impl AsRef<Path>, label_col: &str, has_header: bool) -> Result<Dataset<f64>> {
    let path = path.as_ref();
    let mut reader = ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let label_idx = if has_header {
        let headers = reader.headers()?;
        headers.iter().position(|h| h == label_col).ok_or_else(|| {
            Error::Data(format!(
                "label column \"{label_col}\" not found; file has: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?
    } else {
        label_col.parse::<usize>().map_err(|_| {
            Error::Data(format!(
                "file has no header; label column must be a 0-based index, got \"{label_col}\""
            ))
        })?
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut n_features = None;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if label_idx >= record.len() {
            return Err(Error::Data(format!(
                "row {line} has {} columns, label column is {label_idx}",
                record.len()
            )));
        }
        let mut features = Vec::with_capacity(record.len() - 1);
        for (col, field) in record.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                Error::Data(format!(
                    "row {line}, column {col}: \"{field}\" is not numeric \
                     (categorical features need one-hot encoding first)"
                ))
            })?;
            features.push(value);
        }
        match n_features {
            None => n_features = Some(features.len()),
            Some(w) if w != features.len() => {
                return Err(Error::Data(format!(
                    "row {line} has {} feature columns, expected {w}",
                    features.len()
                )));
            }
            _ => {}
        }
        rows.push(features);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "{} contains no data rows",
            path.display()
        )));
    }

    let names: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let labels: Vec<usize> = raw_labels.iter().map(|l| index[l.as_str()]).collect();

    let width = n_features.unwrap_or(0);
    let features = Matrix::new(rows.len(), width, rows.into_iter().flatten().collect())?;
    let n_classes = names.len();
    Dataset::new(features, labels, n_classes, Some(names))
}
