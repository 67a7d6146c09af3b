//! Shrinkage targets for the spectral filter.
//!
//! [`ledoit_wolf`] is the one-parameter linear shrinkage `a1·I + a2·S` with
//! plug-in weights:
//!
//! ```text
//! <A, B> = tr(AB') / p
//! m      = <S, I>
//! d²     = ‖S - mI‖²
//! b̄²     = min(d², n⁻² Σ_t ‖x_t x_t' - S‖²)     (x_t centred rows)
//! a²     = d² - b̄²
//! a1     = (b̄² / d²) m,   a2 = a² / d²
//! ```
//!
//! [`nercome`] is the split-sample alternative and [`stein_rescale`] is the
//! general eigenvalue-only map both are instances of.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{centered, cross_product, standardized};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::matrix::{eigh_desc, symmetrize, MatrixKind, SymMatrix};
use crate::sim::{split_rows, PcgStream};

/// Relative size of `d²` (against `m²`) below which `S` is treated as a
/// multiple of the identity.
const ISOTROPIC_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageResult {
    pub estimator: SymMatrix,
    /// Weight on the identity.
    pub alpha1: f64,
    /// Weight on the sample matrix.
    pub alpha2: f64,
    /// Mean sample eigenvalue, the shrinkage centre.
    pub mu: f64,
    /// `p / n`; consistency requires it to stay bounded.
    pub pn_ratio: f64,
}

/// Ledoit-Wolf shrinkage of the sample covariance of `d`.
pub fn ledoit_wolf(d: &DataMatrix) -> Result<ShrinkageResult> {
    if d.n() < 2 {
        return Err(Error::TooFewRows { required: 2, actual: d.n() });
    }
    let x = centered(d);
    let s = SymMatrix::from_parts(cross_product(&x), MatrixKind::Covariance, d.labels().to_vec());
    ledoit_wolf_from(&x, &s)
}

/// Ledoit-Wolf shrinkage of the sample correlation of `d`, computed on the
/// standardized observations so that `S` is exactly the correlation matrix.
pub fn ledoit_wolf_correlation(d: &DataMatrix) -> Result<ShrinkageResult> {
    let x = standardized(d)?;
    let r = crate::covariance::to_correlation(&crate::covariance::sample_covariance(d)?)?;
    ledoit_wolf_from(&x, &r)
}

/// Core estimator given centred observations `x` (rows) and their sample
/// matrix `s`.
pub(crate) fn ledoit_wolf_from(x: &DMatrix<f64>, s: &SymMatrix) -> Result<ShrinkageResult> {
    let (n, p) = x.shape();
    let sm = s.entries();
    let pf = p as f64;
    let mu = s.trace() / pf;
    if mu == 0.0 {
        return Err(Error::DegenerateData);
    }

    let mut dispersion = sm.clone();
    for i in 0..p {
        dispersion[(i, i)] -= mu;
    }
    let d2 = dispersion.norm_squared() / pf;
    let pn_ratio = pf / n as f64;

    if d2 <= ISOTROPIC_TOL * mu * mu {
        let estimator = finish(DMatrix::identity(p, p) * mu, s);
        return Ok(ShrinkageResult { estimator, alpha1: mu, alpha2: 0.0, mu, pn_ratio });
    }

    // ‖x x' - S‖_F² = (x'x)² - 2 x'Sx + ‖S‖_F²
    let s_norm2 = sm.norm_squared();
    let mut b_sum = 0.0;
    for t in 0..n {
        let row = x.row(t).transpose();
        let xx = row.norm_squared();
        let xsx = (sm * &row).dot(&row);
        b_sum += (xx * xx - 2.0 * xsx + s_norm2) / pf;
    }
    let b2 = (b_sum / (n as f64 * n as f64)).min(d2);
    let a2 = d2 - b2;
    let alpha1 = b2 / d2 * mu;
    let alpha2 = a2 / d2;

    let mut est = sm * alpha2;
    for i in 0..p {
        est[(i, i)] += alpha1;
    }
    Ok(ShrinkageResult { estimator: finish(est, s), alpha1, alpha2, mu, pn_ratio })
}

fn finish(mut est: DMatrix<f64>, s: &SymMatrix) -> SymMatrix {
    if s.kind() == MatrixKind::Correlation {
        // a1 + a2 = 1 up to rounding when m = 1
        est.fill_diagonal(1.0);
    }
    SymMatrix::from_parts(est, s.kind(), s.labels().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NercomeParams {
    pub split_fraction: f64,
    pub n_splits: usize,
    pub seed: u64,
}

impl Default for NercomeParams {
    fn default() -> Self {
        Self { split_fraction: 0.5, n_splits: 50, seed: 0 }
    }
}

/// Split-sample estimator: eigenvectors from one part of the rows,
/// eigenvalues from the quadratic forms of the other part's covariance,
/// averaged over `n_splits` seeded random partitions.
///
/// Split `k` uses the stream seeded with `seed + k`.
pub fn nercome(d: &DataMatrix, params: NercomeParams) -> Result<SymMatrix> {
    let NercomeParams { split_fraction, n_splits, seed } = params;
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("split fraction {split_fraction} not in (0, 1)")));
    }
    if n_splits == 0 {
        return Err(Error::InvalidParameter("n_splits must be positive".into()));
    }
    let n = d.n();
    let first = (split_fraction * n as f64).round() as usize;
    if first < 2 || n < first + 2 {
        return Err(Error::SplitTooSmall { n, fraction: split_fraction });
    }
    let p = d.p();

    let parts: Vec<DMatrix<f64>> = (0..n_splits)
        .into_par_iter()
        .map(|k| {
            let mut rng = PcgStream::new(seed.wrapping_add(k as u64));
            let (rows1, rows2) = split_rows(&mut rng, n, first);
            let s1 = cross_product(&centered_rows(d, &rows1));
            let s2 = cross_product(&centered_rows(d, &rows2));
            let (_, vecs) = eigh_desc(&s1)?;
            let quad = DVector::from_iterator(
                p,
                (0..p).map(|i| {
                    let v = vecs.column(i);
                    (&s2 * v).dot(&v)
                }),
            );
            Ok(&vecs * DMatrix::from_diagonal(&quad) * vecs.transpose())
        })
        .collect::<Result<_>>()?;

    let mut acc = DMatrix::zeros(p, p);
    for m in &parts {
        acc += m;
    }
    acc /= n_splits as f64;
    Ok(SymMatrix::from_parts(symmetrize(&acc), MatrixKind::Covariance, d.labels().to_vec()))
}

/// [`nercome`] on the standardized observations, for correlation-scale
/// filtering.
pub fn nercome_correlation(d: &DataMatrix, params: NercomeParams) -> Result<SymMatrix> {
    let z = DataMatrix::new(standardized(d)?, d.labels().to_vec())?;
    nercome(&z, params)
}

fn centered_rows(d: &DataMatrix, rows: &[usize]) -> DMatrix<f64> {
    let v = d.values();
    let sub = DMatrix::from_fn(rows.len(), d.p(), |r, c| v[(rows[r], c)]);
    let sub = DataMatrix::new(sub, d.labels().to_vec()).expect("rows of a valid matrix");
    centered(&sub)
}

/// `P diag(psi(λ)) P'` where `s = P diag(λ) P'`; eigenvectors are untouched.
pub fn stein_rescale<F: Fn(f64) -> f64>(s: &SymMatrix, psi: F) -> Result<SymMatrix> {
    let (vals, vecs) = s.eigh()?;
    let mapped = vals.map(psi);
    let out = &vecs * DMatrix::from_diagonal(&mapped) * vecs.transpose();
    Ok(SymMatrix::from_parts(symmetrize(&out), MatrixKind::Covariance, s.labels().to_vec()))
}
