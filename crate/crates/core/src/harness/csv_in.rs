use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::LabelVector;

/// Reads a numeric CSV. `label_column` (0-based) is split off and its
/// values are renamed `0, 1, …` in order of first appearance. Positions in
/// errors are 1-based and count the header line.
pub fn ingest_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<usize>,
) -> Result<(Matrix, Option<LabelVector>)> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_csv(&text, has_header, label_column)
}

pub fn parse_csv(
    text: &str,
    has_header: bool,
    label_column: Option<usize>,
) -> Result<(Matrix, Option<LabelVector>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for (idx, rec) in reader.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            col: 0,
            message: e.to_string(),
        })?;
        if idx == 0 && has_header {
            width = Some(rec.len());
            continue;
        }
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Parse {
                    row,
                    col: rec.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", rec.len()),
                })
            }
            _ => {}
        }
        if let Some(lc) = label_column {
            if lc >= rec.len() {
                return Err(Error::Parse {
                    row,
                    col: lc + 1,
                    message: format!("label column {lc} beyond {} fields", rec.len()),
                });
            }
        }
        for (c, field) in rec.iter().enumerate() {
            if Some(c) == label_column {
                let next = names.len();
                labels.push(*names.entry(field.to_string()).or_insert(next));
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                col: c + 1,
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    col: c + 1,
                    message: format!("'{field}' is not finite"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            row: 0,
            col: 0,
            message: "no data rows".into(),
        });
    }
    let cols = data.len() / rows;
    if cols == 0 {
        return Err(Error::Parse {
            row: 1,
            col: 0,
            message: "no numeric columns".into(),
        });
    }
    let y = Matrix::from_vec(rows, cols, data)?;
    Ok((y, label_column.map(|_| labels)))
}
