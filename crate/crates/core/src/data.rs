//! Observation matrices and CSV ingestion.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `n × p` observation matrix: rows are observations, columns are
/// variables (network nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl DataMatrix {
    /// Validates finiteness, label count and label uniqueness. Row count is
    /// checked by the operations that need it.
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(Error::InvalidData("data has no columns".into()));
        }
        if labels.len() != values.ncols() {
            return Err(Error::InvalidData(format!("{} labels for {} columns", labels.len(), values.ncols())));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidData(format!("duplicate label {label:?}")));
            }
        }
        for row in 0..values.nrows() {
            for col in 0..values.ncols() {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFiniteValue { row, col });
                }
            }
        }
        Ok(Self { values, labels })
    }

    /// Builds a matrix with labels `X1..Xp`.
    pub fn unlabeled(values: DMatrix<f64>) -> Result<Self> {
        let labels = default_labels(values.ncols());
        Self::new(values, labels)
    }

    /// Row-major construction, mostly for tests and the C ABI.
    pub fn from_row_slice(n: usize, p: usize, data: &[f64], labels: Vec<String>) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::InvalidData(format!("buffer of {} values for a {n}x{p} matrix", data.len())));
        }
        Self::new(DMatrix::from_row_slice(n, p, data), labels)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of variables.
    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub(crate) fn into_parts(self) -> (DMatrix<f64>, Vec<String>) {
        (self.values, self.labels)
    }

    /// Returns a copy with columns reordered so that output column `k` is
    /// input column `order[k]`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.p() {
            return Err(Error::InvalidParameter("permutation length differs from p".into()));
        }
        let values = DMatrix::from_fn(self.n(), self.p(), |r, c| self.values[(r, order[c])]);
        let labels = order.iter().map(|&c| self.labels[c].clone()).collect();
        Self::new(values, labels)
    }

    /// Reads a CSV whose first record holds node labels and every later
    /// record holds one numeric observation. Empty cells are rejected.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let labels: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let p = labels.len();
        let mut data = Vec::new();
        let mut n = 0;
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != p {
                return Err(Error::InvalidData(format!("row {row} has {} fields, expected {p}", record.len())));
            }
            for (col, field) in record.iter().enumerate() {
                let field = field.trim();
                let value: f64 = field
                    .parse()
                    .map_err(|_| Error::InvalidData(format!("row {row}, column {col}: cannot parse {field:?}")))?;
                if !value.is_finite() {
                    return Err(Error::NonFiniteValue { row, col });
                }
                data.push(value);
            }
            n += 1;
        }
        Self::from_row_slice(n, p, &data, labels)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Writes the matrix in the same layout [`DataMatrix::read_csv`] accepts.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.labels)?;
        for row in self.values.row_iter() {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn default_labels(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("X{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_labels_and_rows() {
        let csv = "a,b\n1,2\n3,4.5\n";
        let d = DataMatrix::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(d.labels(), &["a", "b"]);
        assert_eq!(d.n(), 2);
        assert_eq!(d.values()[(1, 1)], 4.5);
    }

    #[test]
    fn rejects_missing_values() {
        let csv = "a,b\n1,\n3,4\n";
        assert!(matches!(DataMatrix::read_csv(csv.as_bytes()), Err(Error::InvalidData(_))));
    }

    #[test]
    fn rejects_nan() {
        let csv = "a,b\n1,NaN\n";
        assert!(matches!(DataMatrix::read_csv(csv.as_bytes()), Err(Error::NonFiniteValue { row: 0, col: 1 })));
    }

    #[test]
    fn rejects_duplicate_labels() {
        let csv = "a,a\n1,2\n";
        assert!(DataMatrix::read_csv(csv.as_bytes()).is_err());
    }

    #[test]
    fn quoted_labels_survive() {
        let csv = "\"ACME, Inc\",b\n1,2\n";
        let d = DataMatrix::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(d.labels()[0], "ACME, Inc");
    }

    #[test]
    fn csv_round_trip() {
        let d = DataMatrix::from_row_slice(2, 2, &[0.1, -2.0, 1e-17, 3.0], default_labels(2)).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(DataMatrix::read_csv(buf.as_slice()).unwrap(), d);
    }
}
