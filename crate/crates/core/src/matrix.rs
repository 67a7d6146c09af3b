use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::default_labels;
use crate::error::{Error, Result};

/// Relative tolerance for the symmetry invariant.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Covariance,
    Correlation,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixKind::Covariance => f.write_str("covariance"),
            MatrixKind::Correlation => f.write_str("correlation"),
        }
    }
}

/// A labelled symmetric `p × p` matrix tagged as covariance or correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    entries: DMatrix<f64>,
    kind: MatrixKind,
    labels: Vec<String>,
}

impl SymMatrix {
    pub fn new(entries: DMatrix<f64>, kind: MatrixKind, labels: Vec<String>) -> Result<Self> {
        let p = entries.nrows();
        if p == 0 || entries.ncols() != p {
            return Err(Error::InvalidMatrix(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if labels.len() != p {
            return Err(Error::InvalidMatrix(format!("{} labels for dimension {p}", labels.len())));
        }
        let scale = entries.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        for i in 0..p {
            for j in 0..p {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidMatrix(format!("non-finite entry at ({i}, {j})")));
                }
                if j > i && (v - entries[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        match kind {
            MatrixKind::Correlation => {
                for i in 0..p {
                    if entries[(i, i)] != 1.0 {
                        return Err(Error::InvalidMatrix(format!(
                            "correlation diagonal at {i} is {}",
                            entries[(i, i)]
                        )));
                    }
                }
                if entries.iter().any(|v| v.abs() > 1.0) {
                    return Err(Error::InvalidMatrix("correlation entry outside [-1, 1]".into()));
                }
            }
            MatrixKind::Covariance => {
                if let Some(i) = (0..p).find(|&i| entries[(i, i)] < 0.0) {
                    return Err(Error::InvalidMatrix(format!("negative variance at {i}")));
                }
            }
        }
        Ok(Self { entries, kind, labels })
    }

    pub fn unlabeled(entries: DMatrix<f64>, kind: MatrixKind) -> Result<Self> {
        let labels = default_labels(entries.nrows());
        Self::new(entries, kind, labels)
    }

    pub fn identity(p: usize, kind: MatrixKind) -> Self {
        Self { entries: DMatrix::identity(p, p), kind, labels: default_labels(p) }
    }

    /// Trusted constructor for matrices symmetric by construction.
    pub(crate) fn from_parts(entries: DMatrix<f64>, kind: MatrixKind, labels: Vec<String>) -> Self {
        debug_assert_eq!(entries.nrows(), labels.len());
        Self { entries, kind, labels }
    }

    /// Reads a labelled square matrix: header row of labels then `p` rows.
    pub fn read_csv<R: std::io::Read>(reader: R, kind: MatrixKind) -> Result<Self> {
        let d = crate::data::DataMatrix::read_csv(reader)?;
        let (values, labels) = d.into_parts();
        Self::new(values, kind, labels)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.labels)?;
        for row in self.entries.row_iter() {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().sum()
    }

    /// Off-diagonal upper-triangle entries in row-major order.
    pub fn upper_off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let p = self.dim();
        (0..p).flat_map(move |i| ((i + 1)..p).map(move |j| (i, j, self.entries[(i, j)])))
    }

    /// Eigenvalues (descending) and matching unit eigenvectors as columns.
    pub fn eigh(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        eigh_desc(&self.entries)
    }

    /// Columns permuted by `order`; entry `(a, b)` of the result is entry
    /// `(order[a], order[b])` of `self`.
    pub fn permute(&self, order: &[usize]) -> Self {
        let p = self.dim();
        let entries = DMatrix::from_fn(p, p, |a, b| self.entries[(order[a], order[b])]);
        let labels = order.iter().map(|&i| self.labels[i].clone()).collect();
        Self::from_parts(entries, self.kind, labels)
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
pub(crate) fn eigh_desc(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::DecompositionFailure)?;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(p, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Copies the upper triangle over the lower one.
pub(crate) fn mirror_upper(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            m[(j, i)] = m[(i, j)];
        }
    }
}

/// `(A + A') / 2`.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = (m + m.transpose()) * 0.5;
    mirror_upper(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.03, 1.0]);
        assert!(SymMatrix::unlabeled(m, MatrixKind::Covariance).is_err());
    }

    #[test]
    fn correlation_needs_unit_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.999]);
        assert!(SymMatrix::unlabeled(m.clone(), MatrixKind::Correlation).is_err());
        assert!(SymMatrix::unlabeled(m, MatrixKind::Covariance).is_ok());
    }

    #[test]
    fn correlation_off_diagonal_bounded() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.2, 1.2, 1.0]);
        assert!(SymMatrix::unlabeled(m, MatrixKind::Correlation).is_err());
    }

    #[test]
    fn covariance_rejects_negative_variance() {
        let m = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!(SymMatrix::unlabeled(m, MatrixKind::Covariance).is_err());
    }

    #[test]
    fn eigh_is_descending_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 3.0]);
        let (vals, vecs) = eigh_desc(&m).unwrap();
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let back = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((back - m).abs().max() < 1e-12);
    }
}
