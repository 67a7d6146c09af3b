//! Sample covariance, correlation and log-return transforms.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::matrix::{MatrixKind, SymMatrix};

/// `out[t][j] = ln(prices[t+1][j]) - ln(prices[t][j])`.
pub fn log_returns(prices: &DataMatrix) -> Result<DataMatrix> {
    let n = prices.n();
    if n < 3 {
        return Err(Error::TooFewRows { required: 3, actual: n });
    }
    let v = prices.values();
    for col in 0..prices.p() {
        for row in 0..n {
            let value = v[(row, col)];
            if value <= 0.0 {
                return Err(Error::NonPositivePrice { row, col, value });
            }
        }
    }
    let out = DMatrix::from_fn(n - 1, prices.p(), |t, j| v[(t + 1, j)].ln() - v[(t, j)].ln());
    DataMatrix::new(out, prices.labels().to_vec())
}

/// Column-demeaned copy of the observations.
pub(crate) fn centered(d: &DataMatrix) -> DMatrix<f64> {
    let v = d.values();
    let n = d.n() as f64;
    let mut out = v.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let mean = v.column(j).sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

/// `(1/(n-1)) X'X` for already-centered `x`, computed on the upper triangle
/// with a fixed per-pair summation order and mirrored.
pub(crate) fn cross_product(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let denom = (n - 1) as f64;
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let ci = x.column(i);
            (i..p)
                .map(|j| {
                    let cj = x.column(j);
                    let mut acc = 0.0;
                    for t in 0..n {
                        acc += ci[t] * cj[t];
                    }
                    acc / denom
                })
                .collect()
        })
        .collect();
    let mut s = DMatrix::zeros(p, p);
    for (i, row) in rows.into_iter().enumerate() {
        for (k, value) in row.into_iter().enumerate() {
            s[(i, i + k)] = value;
            s[(i + k, i)] = value;
        }
    }
    s
}

/// Unbiased sample covariance (divisor `n - 1`).
pub fn sample_covariance(d: &DataMatrix) -> Result<SymMatrix> {
    if d.n() < 2 {
        return Err(Error::TooFewRows { required: 2, actual: d.n() });
    }
    let s = cross_product(&centered(d));
    Ok(SymMatrix::from_parts(s, MatrixKind::Covariance, d.labels().to_vec()))
}

/// `R[i][j] = S[i][j] / sqrt(S[i][i] S[j][j])` with an exact unit diagonal.
pub fn to_correlation(s: &SymMatrix) -> Result<SymMatrix> {
    let p = s.dim();
    let m = s.entries();
    if let Some(index) = (0..p).find(|&i| m[(i, i)] <= 0.0) {
        return Err(Error::ZeroVarianceNode { index });
    }
    let sd: Vec<f64> = (0..p).map(|i| m[(i, i)].sqrt()).collect();
    let mut r = DMatrix::identity(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let v = (m[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(SymMatrix::from_parts(r, MatrixKind::Correlation, s.labels().to_vec()))
}

/// Centered observations divided by their sample standard deviations, so
/// that their `n - 1` cross product is the sample correlation matrix.
pub(crate) fn standardized(d: &DataMatrix) -> Result<DMatrix<f64>> {
    if d.n() < 2 {
        return Err(Error::TooFewRows { required: 2, actual: d.n() });
    }
    let mut x = centered(d);
    let denom = (d.n() - 1) as f64;
    for (index, mut col) in x.column_iter_mut().enumerate() {
        let var = col.norm_squared() / denom;
        if var <= 0.0 {
            return Err(Error::ZeroVarianceNode { index });
        }
        col /= var.sqrt();
    }
    Ok(x)
}
