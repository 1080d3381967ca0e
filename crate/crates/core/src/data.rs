//! Named numeric columns and CSV ingestion.

use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Rectangular table of finite numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    source: Option<PathBuf>,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if names.is_empty() {
            return Err(Error::InvalidInput("dataset has no columns".into()));
        }
        let n = columns[0].len();
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "column '{name}' has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column '{name}'")));
            }
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidInput(format!("duplicate column name '{name}'")));
            }
        }
        Ok(Dataset {
            names,
            columns,
            source: None,
        })
    }

    pub fn from_columns<S: Into<String>>(cols: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let (names, columns) = cols.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        Dataset::new(names, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::InvalidInput(format!("unknown variable '{name}'")))
    }

    /// Min-max rescales the named columns to [-1, 1]. Constant columns are
    /// left alone.
    pub fn rescale_unit(&mut self, names: &[String]) -> Result<()> {
        for name in names {
            let i = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown variable '{name}'")))?;
            let col = &mut self.columns[i];
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                for v in col.iter_mut() {
                    *v = 2.0 * (*v - lo) / (hi - lo) - 1.0;
                }
            }
        }
        Ok(())
    }
}

/// Reads a comma-separated file with a header row. Every cell must parse as
/// a finite number; ragged rows and blanks are rejected with their line.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let label = path.display().to_string();
    let mut ds = read_csv(file, &label)?;
    ds.source = Some(path.to_path_buf());
    Ok(ds)
}

pub fn read_csv<R: std::io::Read>(reader: R, label: &str) -> Result<Dataset> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        file: label.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(parse_err(1, "empty file or missing header row".into()));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(
                    line,
                    format!("column '{}': cannot parse '{cell}' as a number", headers[j]),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column '{}': non-finite value", headers[j])));
            }
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    if columns[0].len() < 2 {
        return Err(parse_err(2, "need at least two observations".into()));
    }
    Dataset::new(headers, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_small_table() {
        let ds = read_csv("x,y\n1,2\n3,4\n".as_bytes(), "mem").unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.n_cols(), 2);
        assert_eq!(ds.column("y").unwrap(), &[2.0, 4.0]);
    }

    #[test]
    fn ragged_row_names_line() {
        let err = read_csv("x,y\n1,2\n3\n4,5\n".as_bytes(), "mem").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_column() {
        let err = read_csv("x,y\n1,2\n3,abc\n".as_bytes(), "mem").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3:") && msg.contains("'y'"), "{msg}");
    }

    #[test]
    fn empty_input_rejected() {
        assert!(read_csv("".as_bytes(), "mem").is_err());
        assert!(read_csv("x,y\n".as_bytes(), "mem").is_err());
    }

    #[test]
    fn rescale_maps_to_unit_interval() {
        let mut ds = Dataset::from_columns(vec![("a", vec![0.0, 5.0, 10.0])]).unwrap();
        ds.rescale_unit(&["a".to_string()]).unwrap();
        assert_eq!(ds.column("a").unwrap(), &[-1.0, 0.0, 1.0]);
    }
}
