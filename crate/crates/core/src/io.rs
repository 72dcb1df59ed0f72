//! CSV ingestion.

use std::path::Path;

use nalgebra::DMatrix;

use crate::data::{DataMatrix, Group};
use crate::error::{Error, Result};

/// Read observations (rows) by variables (columns) from a comma-separated file.
///
/// Row and column numbers in errors are 1-based and count the header line.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, group: Group) -> Result<DataMatrix> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = std::fs::File::open(path)?;
    read_csv(file, &shown, has_header, group)
}

/// Same as [`load_csv`] for any reader; `source` labels errors.
pub fn read_csv<R: std::io::Read>(reader: R, source: &str, has_header: bool, group: Group) -> Result<DataMatrix> {
    let fail = |row: usize, column: usize, message: String| Error::Ingestion {
        path: source.to_string(),
        row,
        column,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| fail(line, 0, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if has_header && names.is_none() && rows.is_empty() {
            names = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(fail(line, record.len().min(expected) + 1, format!(
                "expected {expected} fields, found {}",
                record.len()
            )));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(fail(line, c + 1, format!("'{cell}' is not a finite number"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let d = width.unwrap_or(0);
    if n < 2 || d < 2 {
        return Err(fail(n + usize::from(has_header), 0, format!(
            "need at least 2 observations and 2 variables, found {n}x{d}"
        )));
    }
    let data = DataMatrix::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]), group)?;
    match names {
        Some(names) => data.with_names(names),
        None => Ok(data),
    }
}
