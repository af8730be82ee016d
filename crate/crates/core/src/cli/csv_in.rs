use std::fs::File;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Which column of the input table is the response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResponseColumn {
    /// Zero-based column position.
    Index(usize),
    /// Header name. A name that matches no header but parses as an integer
    /// is taken as a zero-based position.
    Name(String),
}

impl Default for ResponseColumn {
    fn default() -> Self {
        ResponseColumn::Index(0)
    }
}

impl ResponseColumn {
    fn resolve(&self, headers: &[String]) -> Result<usize> {
        match self {
            ResponseColumn::Index(i) if *i < headers.len() => Ok(*i),
            ResponseColumn::Index(i) => Err(Error::MissingColumn(format!("#{i}"))),
            ResponseColumn::Name(name) => {
                if let Some(i) = headers.iter().position(|h| h == name) {
                    return Ok(i);
                }
                match name.parse::<usize>() {
                    Ok(i) if i < headers.len() => Ok(i),
                    _ => Err(Error::MissingColumn(name.clone())),
                }
            }
        }
    }
}

/// Reads a comma-separated table with a header row and splits off the
/// response. The remaining headers become the feature names.
///
/// Rows and columns in errors are 1-based; row 1 is the header.
pub fn load_csv(path: &Path, response: &ResponseColumn) -> Result<Dataset> {
    let file = File::open(path)?;
    load_csv_from_reader(file, response)
}

pub fn load_csv_from_reader<R: Read>(reader: R, response: &ResponseColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.len() < 2 {
        return Err(Error::Parse {
            row: 1,
            column: headers.len().max(1),
            message: "need a response column and at least one covariate".into(),
        });
    }
    let target = response.resolve(&headers)?;

    let p = headers.len() - 1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| csv_error(e, row))?;
        for (j, cell) in record.iter().enumerate() {
            let column = j + 1;
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(Error::Parse {
                    row,
                    column,
                    message: format!("empty cell in column {:?}", headers[j]),
                });
            }
            let value = match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                _ => {
                    return Err(Error::NonNumericCell {
                        row,
                        column,
                        value: cell.to_string(),
                    })
                }
            };
            if j == target {
                y.push(value);
            } else {
                x.push(value);
            }
        }
    }
    if y.is_empty() {
        return Err(Error::Parse {
            row: 2,
            column: 1,
            message: "no data rows".into(),
        });
    }

    let names = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::with_names(
        DMatrix::from_row_slice(y.len(), p, &x),
        DVector::from_vec(y),
        Some(names),
    )
}

fn csv_error(err: csv::Error, fallback_row: usize) -> Error {
    let row = err
        .position()
        .map(|pos| pos.line() as usize)
        .unwrap_or(fallback_row);
    match err.kind() {
        csv::ErrorKind::Io(_) => Error::Parse {
            row,
            column: 0,
            message: err.to_string(),
        },
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Parse {
            row,
            column: (*len).min(*expected_len) as usize + 1,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => Error::Parse {
            row,
            column: 0,
            message: err.to_string(),
        },
    }
}
