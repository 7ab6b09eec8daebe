//! CSV loading into a `Sample`.

use std::io::Read;
use std::path::{Path, PathBuf};

use irdd_core::Sample;
use serde::Serialize;

use crate::error::{CliError, Result, RowProblem};

/// Column names to read. `d` is optional unless `d_required` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub x: String,
    pub y: String,
    pub d: String,
    pub d_required: bool,
}

impl Default for Columns {
    fn default() -> Self {
        Columns {
            x: "x".into(),
            y: "y".into(),
            d: "d".into(),
            d_required: false,
        }
    }
}

/// Row counts and data diagnostics reported alongside every estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub path: PathBuf,
    pub x_column: String,
    pub y_column: String,
    pub d_column: Option<String>,
    pub rows_read: usize,
    pub rows_used: usize,
    /// File line numbers of rows skipped with `--drop-invalid`.
    pub dropped_lines: Vec<u64>,
    pub distinct_x: usize,
    pub tied_rows: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub sample: Sample,
    pub summary: IngestSummary,
}

pub fn ingest_csv(path: &Path, columns: &Columns, drop_invalid: bool) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(file, path, columns, drop_invalid)
}

fn parse_field(raw: &str, name: &str) -> std::result::Result<f64, String> {
    if raw.is_empty() {
        return Err(format!("missing value in column `{name}`"));
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("cannot parse `{raw}` in column `{name}` as a number"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value `{raw}` in column `{name}`"));
    }
    Ok(v)
}

/// Parse CSV from any reader; `path` labels errors and the summary.
pub fn ingest_reader<R: Read>(reader: R, path: &Path, columns: &Columns, drop_invalid: bool) -> Result<Ingested> {
    let csv_err = |e: csv::Error| CliError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let missing = |name: &str| CliError::MissingColumn {
        path: path.to_path_buf(),
        name: name.to_string(),
        available: headers.iter().collect::<Vec<_>>().join(", "),
    };
    let ix = find(&columns.x).ok_or_else(|| missing(&columns.x))?;
    let iy = find(&columns.y).ok_or_else(|| missing(&columns.y))?;
    let id = match find(&columns.d) {
        Some(i) => Some(i),
        None if columns.d_required => return Err(missing(&columns.d)),
        None => None,
    };

    let (mut x, mut y, mut d) = (Vec::new(), Vec::new(), Vec::new());
    let mut problems = Vec::new();
    let mut rows_read = 0;
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        rows_read += 1;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or("");
        let parsed = (|| {
            let xv = parse_field(get(ix), &columns.x)?;
            let yv = parse_field(get(iy), &columns.y)?;
            let dv = match id {
                Some(i) => {
                    let v = parse_field(get(i), &columns.d)?;
                    if v != 0.0 && v != 1.0 {
                        return Err(format!("treatment `{}` must be 0 or 1", get(i)));
                    }
                    Some(v)
                }
                None => None,
            };
            Ok((xv, yv, dv))
        })();
        match parsed {
            Ok((xv, yv, dv)) => {
                x.push(xv);
                y.push(yv);
                if let Some(v) = dv {
                    d.push(v);
                }
            }
            Err(reason) => problems.push(RowProblem { line, reason }),
        }
    }
    if !problems.is_empty() && !drop_invalid {
        return Err(CliError::InvalidRows {
            path: path.to_path_buf(),
            problems,
        });
    }
    if x.is_empty() {
        return Err(CliError::NoRows {
            path: path.to_path_buf(),
        });
    }
    let sample = match id {
        Some(_) => Sample::with_treatment(x, y, d)?,
        None => Sample::new(x, y)?,
    };
    let summary = IngestSummary {
        path: path.to_path_buf(),
        x_column: columns.x.clone(),
        y_column: columns.y.clone(),
        d_column: id.map(|_| columns.d.clone()),
        rows_read,
        rows_used: sample.len(),
        dropped_lines: problems.iter().map(|p| p.line).collect(),
        distinct_x: sample.distinct_x(),
        tied_rows: sample.tied_rows(),
    };
    Ok(Ingested { sample, summary })
}
