//! Comma-separated files with a mandatory header row.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::table::{DataMatrix, Role};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Which header names are process and which are quality variables. Columns
/// not listed are ignored; the loaded table keeps schema order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub process: Vec<String>,
    pub quality: Vec<String>,
}

impl CsvSchema {
    pub fn new<S: Into<String>>(
        process: impl IntoIterator<Item = S>,
        quality: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            process: process.into_iter().map(Into::into).collect(),
            quality: quality.into_iter().map(Into::into).collect(),
        }
    }

    pub fn of(data: &DataMatrix) -> Self {
        Self {
            process: data.process_names(),
            quality: data.quality_names(),
        }
    }

    fn columns(&self) -> Result<Vec<(String, Role)>> {
        if self.process.is_empty() {
            return Err(Error::Schema("schema lists no process columns".into()));
        }
        let cols: Vec<(String, Role)> = self
            .process
            .iter()
            .map(|n| (n.clone(), Role::Process))
            .chain(self.quality.iter().map(|n| (n.clone(), Role::Quality)))
            .collect();
        for (i, (name, _)) in cols.iter().enumerate() {
            if cols[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Schema(format!("column `{name}` listed twice")));
            }
        }
        Ok(cols)
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, schema)
}

/// Parses CSV text. Parse errors report the 1-based line number in the file.
pub fn parse_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<DataMatrix> {
    let columns = schema.columns()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut positions = Vec::with_capacity(columns.len());
    for (name, _) in &columns {
        let pos = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))?;
        positions.push(pos);
    }

    let mut data = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(rows + 2, |p| p.line() as usize);
        for (&pos, (name, _)) in positions.iter().zip(&columns) {
            let cell = &record[pos];
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: name.clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: name.clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    let values = Matrix::from_vec(rows, columns.len(), data)?;
    let (names, roles) = columns.into_iter().unzip();
    DataMatrix::new(values, names, roles)
}

fn csv_error(err: csv::Error) -> Error {
    match err.kind() {
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => Error::Format(format!(
            "line {} has {len} fields, expected {expected_len}",
            pos.as_ref().map_or(0, |p| p.line())
        )),
        _ => Error::Format(err.to_string()),
    }
}

/// Writes the table with its header; values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_csv(path: impl AsRef<Path>, data: &DataMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&data.names().join(","));
    out.push('\n');
    for row in data.values().row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}
