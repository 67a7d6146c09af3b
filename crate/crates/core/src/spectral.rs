//! Spectra, spectral distances and Marchenko-Pastur support bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{MatrixKind, SymMatrix};

/// Eigenvalues of a symmetric matrix, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    source_kind: MatrixKind,
}

impl Spectrum {
    /// Sorts `values` descending. Rejects non-finite input.
    pub fn new(mut values: Vec<f64>, source_kind: MatrixKind) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values, source_kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source_kind(&self) -> MatrixKind {
        self.source_kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Number of eigenvalues strictly above `level`.
    pub fn count_above(&self, level: f64) -> usize {
        self.values.iter().take_while(|&&v| v > level).count()
    }
}

pub fn spectrum(m: &SymMatrix) -> Result<Spectrum> {
    let (vals, _) = m.eigh()?;
    Spectrum::new(vals.iter().copied().collect(), m.kind())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Metric {
    Minkowski { kappa: f64 },
    LInfinity,
}

impl Metric {
    pub const EUCLIDEAN: Metric = Metric::Minkowski { kappa: 2.0 };

    pub fn minkowski(kappa: f64) -> Result<Self> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("Minkowski exponent {kappa} must be >= 1")));
        }
        Ok(Metric::Minkowski { kappa })
    }
}

/// Inclusive 1-based index range over a descending spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub low: usize,
    pub high: usize,
}

impl Band {
    pub fn new(low: usize, high: usize) -> Self {
        Self { low, high }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.low >= 1 && self.low <= self.high && self.high <= p {
            Ok(())
        } else {
            Err(Error::InvalidBand { low: self.low, high: self.high, p })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub metric: Metric,
    /// `None` compares the full spectrum.
    pub band: Option<Band>,
}

impl Default for DistanceSpec {
    fn default() -> Self {
        Self { metric: Metric::EUCLIDEAN, band: None }
    }
}

impl DistanceSpec {
    pub fn new(metric: Metric, band: Option<Band>) -> Self {
        Self { metric, band }
    }
}

pub fn spectral_distance(a: &Spectrum, b: &Spectrum, spec: &DistanceSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let p = a.len();
    let (lo, hi) = match spec.band {
        Some(band) => {
            band.validate(p)?;
            (band.low - 1, band.high)
        }
        None => (0, p),
    };
    let diffs = a.values[lo..hi].iter().zip(&b.values[lo..hi]).map(|(x, y)| (x - y).abs());
    Ok(match spec.metric {
        Metric::LInfinity => diffs.fold(0.0, f64::max),
        Metric::Minkowski { kappa: 1.0 } => diffs.sum(),
        Metric::Minkowski { kappa: 2.0 } => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        Metric::Minkowski { kappa } => diffs.map(|d| d.powf(kappa)).sum::<f64>().powf(kappa.recip()),
    })
}

/// Support of the Marchenko-Pastur law for ratio `c = p/n` and scale `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpSupport {
    pub c: f64,
    pub sigma2: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn mp_support(c: f64, sigma2: f64) -> Result<MpSupport> {
    if !(c > 0.0) || !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("mp_support needs c > 0 and sigma2 > 0, got {c}, {sigma2}")));
    }
    let root = c.sqrt();
    let lower = if c <= 1.0 { sigma2 * (1.0 - root).powi(2) } else { 0.0 };
    let upper = sigma2 * (1.0 + root).powi(2);
    Ok(MpSupport { c, sigma2, lower, upper })
}

/// Band `[1, k]` where `k` counts eigenvalues of `target` above the
/// Marchenko-Pastur upper edge.
pub fn deviating_band(target: &Spectrum, support: &MpSupport) -> Result<Band> {
    let k = target.count_above(support.upper);
    if k == 0 {
        return Err(Error::NoDeviatingEigenvalues { upper: support.upper });
    }
    Ok(Band::new(1, k))
}
