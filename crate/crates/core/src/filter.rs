//! Threshold sweep with maximal and cost-tuned filter selection.
//!
//! A matrix is thresholded at every distinct level of its off-diagonal
//! magnitudes; each thresholded matrix is scored by the spectral distance of
//! its spectrum to a shrinkage target. The maximal filter minimizes the
//! distance alone; the tuned filter minimizes distance plus a cost on the
//! deleted edges.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{sample_covariance, to_correlation};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::shrinkage::{
    ledoit_wolf, ledoit_wolf_correlation, nercome, nercome_correlation, NercomeParams, ShrinkageResult,
};
use crate::spectral::{deviating_band, mp_support, spectral_distance, spectrum, Band, DistanceSpec, Spectrum};

/// Off-diagonal entries with `|m[i][j]| < eta` become zero; everything else,
/// including the diagonal, is kept verbatim.
pub fn apply_threshold(m: &SymMatrix, eta: f64) -> SymMatrix {
    let mut out = m.entries().clone();
    let p = m.dim();
    for i in 0..p {
        for j in (i + 1)..p {
            if out[(i, j)].abs() < eta {
                out[(i, j)] = 0.0;
                out[(j, i)] = 0.0;
            }
        }
    }
    SymMatrix::from_parts(out, m.kind(), m.labels().to_vec())
}

/// Undirected edges removed by thresholding at `eta`. Entries that are
/// already zero are not counted.
pub fn edges_deleted(m: &SymMatrix, eta: f64) -> usize {
    m.upper_off_diagonal().filter(|&(_, _, v)| v != 0.0 && v.abs() < eta).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CostSpec {
    /// `theta1 · y^theta2`
    Power { theta1: f64, theta2: f64 },
    /// `scale · W_removed / W_total`
    WeightRatio { scale: f64 },
}

impl CostSpec {
    pub fn power(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1 >= 0.0 && theta1.is_finite()) || !(theta2 > 1.0 && theta2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power cost needs theta1 >= 0 and theta2 > 1, got {theta1}, {theta2}"
            )));
        }
        Ok(CostSpec::Power { theta1, theta2 })
    }

    pub fn weight_ratio(scale: f64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight-ratio scale {scale} must be >= 0")));
        }
        Ok(CostSpec::WeightRatio { scale })
    }

    /// The zero cost, under which tuned and maximal filtering coincide.
    pub fn none() -> Self {
        CostSpec::Power { theta1: 0.0, theta2: 2.0 }
    }
}

impl Default for CostSpec {
    fn default() -> Self {
        Self::none()
    }
}

/// Cost of deleting `y` edges carrying weight `w_removed` out of `w_total`.
pub fn cost(y: usize, w_removed: f64, w_total: f64, cspec: &CostSpec) -> f64 {
    match *cspec {
        CostSpec::Power { theta1, theta2 } => {
            if y == 0 {
                0.0
            } else {
                theta1 * (y as f64).powf(theta2)
            }
        }
        CostSpec::WeightRatio { scale } => {
            if w_total > 0.0 {
                scale * (w_removed / w_total)
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eta: f64,
    pub y: usize,
    pub distance: f64,
    pub cost: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
    pub p: usize,
    pub total_edges: usize,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["eta", "y", "distance", "cost", "objective"])?;
        for r in &self.records {
            wtr.write_record([
                r.eta.to_string(),
                r.y.to_string(),
                r.distance.to_string(),
                r.cost.to_string(),
                r.objective.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn get(&self, eta: f64) -> Option<&SweepRecord> {
        self.records.iter().find(|r| r.eta == eta)
    }
}

/// Threshold grid: zero, the midpoint between each pair of consecutive
/// distinct non-zero magnitudes, and one level above the largest.
pub fn candidate_thresholds(m: &SymMatrix) -> Vec<f64> {
    let mut mags: Vec<f64> = m.upper_off_diagonal().map(|(_, _, v)| v.abs()).filter(|&v| v != 0.0).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let mut out = Vec::with_capacity(mags.len() + 1);
    out.push(0.0);
    for pair in mags.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = a + (b - a) / 2.0;
        // adjacent floats: `b` itself separates the classes under `<`
        out.push(if mid > a { mid } else { b });
    }
    if let Some(&top) = mags.last() {
        out.push(next_above(top));
    }
    out
}

fn next_above(x: f64) -> f64 {
    let bumped = x + x * 1e-9;
    if bumped > x {
        bumped
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// Scores every candidate threshold of `m` against `target`.
pub fn sweep(m: &SymMatrix, target: &Spectrum, dspec: &DistanceSpec, cspec: &CostSpec) -> Result<SweepTable> {
    let p = m.dim();
    if target.len() != p {
        return Err(Error::LengthMismatch { left: p, right: target.len() });
    }
    let w_total: f64 = m.upper_off_diagonal().map(|(_, _, v)| v.abs()).sum();
    let records = candidate_thresholds(m)
        .into_par_iter()
        .map(|eta| {
            let thresholded = apply_threshold(m, eta);
            let distance = spectral_distance(&spectrum(&thresholded)?, target, dspec)?;
            let (y, w_removed) = m
                .upper_off_diagonal()
                .filter(|&(_, _, v)| v != 0.0 && v.abs() < eta)
                .fold((0usize, 0.0), |(c, w), (_, _, v)| (c + 1, w + v.abs()));
            let c = cost(y, w_removed, w_total, cspec);
            Ok(SweepRecord { eta, y, distance, cost: c, objective: distance + c })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { records, p, total_edges: p * (p - 1) / 2 })
}

/// Relative gap under which two objective values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

fn argmin_by<F: Fn(&SweepRecord) -> f64>(table: &SweepTable, key: F) -> (f64, usize) {
    let best = table.records.iter().map(&key).fold(f64::INFINITY, f64::min);
    let cutoff = best + TIE_TOLERANCE * best.abs().max(1.0);
    // records are in increasing threshold order, so the first hit is the
    // smallest of the tied thresholds
    let r = table.records.iter().find(|r| key(r) <= cutoff).unwrap_or(&table.records[0]);
    (r.eta, r.y)
}

/// Threshold with the least spectral distance; ties go to the smallest
/// threshold.
pub fn maximal_filter(table: &SweepTable) -> (f64, usize) {
    argmin_by(table, |r| r.distance)
}

/// Threshold with the least distance-plus-cost; ties go to the smallest
/// threshold.
pub fn tuned_filter(table: &SweepTable) -> (f64, usize) {
    argmin_by(table, |r| r.objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Correlation,
    Covariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetChoice {
    #[default]
    LedoitWolf,
    Nercome(NercomeParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterOptions {
    pub scale: Scale,
    pub target: TargetChoice,
    /// Restrict the distance to the eigenvalues of the target above the
    /// Marchenko-Pastur edge. Overrides `DistanceSpec::band`.
    pub mp_band: bool,
}

#[derive(Debug, Clone)]
pub struct FilterResult {
    pub eta_star: f64,
    pub eta_tilde: f64,
    pub y_star: usize,
    pub y_tilde: usize,
    pub distance_star: f64,
    pub distance_tilde: f64,
    pub matrix_star: SymMatrix,
    pub matrix_tilde: SymMatrix,
    /// The unfiltered sample matrix on the chosen scale.
    pub sample: SymMatrix,
    pub target: Spectrum,
    /// Present for the Ledoit-Wolf target.
    pub shrinkage: Option<ShrinkageResult>,
    pub band: Option<Band>,
    pub table: SweepTable,
    pub n: usize,
}

impl FilterResult {
    pub fn pn_ratio(&self) -> f64 {
        self.sample.dim() as f64 / self.n as f64
    }
}

/// Sample matrix → shrinkage target → sweep → maximal and tuned filters.
pub fn run_filter(
    d: &DataMatrix,
    dspec: &DistanceSpec,
    cspec: &CostSpec,
    options: &FilterOptions,
) -> Result<FilterResult> {
    let (n, p) = (d.n(), d.p());
    if p < 2 {
        return Err(Error::InsufficientDimensions { p });
    }
    let s = sample_covariance(d)?;
    let sample = match options.scale {
        Scale::Correlation => to_correlation(&s)?,
        Scale::Covariance => s,
    };

    let (target_matrix, shrinkage) = match (options.target, options.scale) {
        (TargetChoice::LedoitWolf, Scale::Correlation) => {
            let lw = ledoit_wolf_correlation(d)?;
            (lw.estimator.clone(), Some(lw))
        }
        (TargetChoice::LedoitWolf, Scale::Covariance) => {
            let lw = ledoit_wolf(d)?;
            (lw.estimator.clone(), Some(lw))
        }
        (TargetChoice::Nercome(params), Scale::Correlation) => (nercome_correlation(d, params)?, None),
        (TargetChoice::Nercome(params), Scale::Covariance) => (nercome(d, params)?, None),
    };
    let target = spectrum(&target_matrix)?;

    let mut dspec = *dspec;
    if options.mp_band {
        let sigma2 = target.sum() / p as f64;
        let support = mp_support(p as f64 / n as f64, sigma2)?;
        dspec.band = Some(deviating_band(&target, &support)?);
    }

    let table = sweep(&sample, &target, &dspec, cspec)?;
    let (eta_star, y_star) = maximal_filter(&table);
    let (eta_tilde, y_tilde) = tuned_filter(&table);
    let distance_at = |eta: f64| table.get(eta).map(|r| r.distance).unwrap_or(f64::NAN);

    Ok(FilterResult {
        eta_star,
        eta_tilde,
        y_star,
        y_tilde,
        distance_star: distance_at(eta_star),
        distance_tilde: distance_at(eta_tilde),
        matrix_star: apply_threshold(&sample, eta_star),
        matrix_tilde: apply_threshold(&sample, eta_tilde),
        sample,
        target,
        shrinkage,
        band: dspec.band,
        table,
        n,
    })
}

/// True when every non-zero off-diagonal entry of `inner` is non-zero in
/// `outer`.
pub fn edge_subset(inner: &SymMatrix, outer: &SymMatrix) -> bool {
    inner.upper_off_diagonal().all(|(i, j, v)| v == 0.0 || outer.get(i, j) != 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixKind;
    use crate::sim::sample_gaussian;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn three() -> SymMatrix {
        SymMatrix::unlabeled(
            DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.5, 0.3, 1.0, 0.1, -0.5, 0.1, 1.0]),
            MatrixKind::Correlation,
        )
        .unwrap()
    }

    fn corr_from(v: &[f64], p: usize) -> SymMatrix {
        let a = DMatrix::from_row_slice(p + 3, p, v);
        let d = DataMatrix::unlabeled(a).unwrap();
        to_correlation(&sample_covariance(&d).unwrap()).unwrap()
    }

    #[test]
    fn threshold_examples() {
        let m = three();
        assert_eq!(apply_threshold(&m, 0.0), m);
        assert_eq!(apply_threshold(&m, 0.6).entries(), &DMatrix::identity(3, 3));
        let t = apply_threshold(&m, 0.4);
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -0.5, 0.0, 1.0, 0.0, -0.5, 0.0, 1.0]);
        assert_eq!(t.entries(), &expect);
        assert_eq!(t.kind(), MatrixKind::Correlation);
        assert_eq!(t.labels(), m.labels());
        // weak inequality keeps an entry equal to the threshold
        assert_eq!(apply_threshold(&m, 0.5).get(0, 2), -0.5);
    }

    #[test]
    fn deleted_edge_examples() {
        let m = three();
        assert_eq!(edges_deleted(&m, 0.0), 0);
        assert_eq!(edges_deleted(&m, 0.4), 2);
        let full = corr_from(&(0..130).map(|k| ((k * 37 % 101) as f64).sin()).collect::<Vec<_>>(), 10);
        assert_eq!(edges_deleted(&full, 1.5), 45);
        let t = apply_threshold(&m, 0.4);
        assert_eq!(edges_deleted(&t, 0.4), 0, "pre-existing zeros are not deletions");
    }

    #[test]
    fn cost_examples() {
        let p = CostSpec::power(2.0, 2.0).unwrap();
        let w = CostSpec::weight_ratio(1.0).unwrap();
        assert_eq!(cost(0, 0.0, 3.0, &p), 0.0);
        assert_eq!(cost(0, 0.0, 3.0, &w), 0.0);
        assert_eq!(cost(3, 1.0, 3.0, &p), 18.0);
        assert_eq!(cost(3, 3.0, 3.0, &w), 1.0);
        assert!(CostSpec::power(-1.0, 2.0).is_err());
        assert!(CostSpec::power(1.0, 1.0).is_err());
        assert!(CostSpec::weight_ratio(-0.1).is_err());
    }

    #[test]
    fn diagonal_matrix_has_single_record() {
        let m = SymMatrix::unlabeled(DMatrix::from_diagonal(&nalgebra::dvector![2.0, 1.0]), MatrixKind::Covariance)
            .unwrap();
        let target = Spectrum::new(vec![1.5, 1.5], MatrixKind::Covariance).unwrap();
        let table = sweep(&m, &target, &DistanceSpec::default(), &CostSpec::none()).unwrap();
        assert_eq!(table.records.len(), 1);
        assert_eq!(table.records[0].eta, 0.0);
        assert!((table.records[0].distance - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_wrong_target_length() {
        let target = Spectrum::new(vec![1.0; 2], MatrixKind::Correlation).unwrap();
        assert!(sweep(&three(), &target, &DistanceSpec::default(), &CostSpec::none()).is_err());
    }

    #[test]
    fn ties_go_to_smallest_eta() {
        let rec = |eta, y, d| SweepRecord { eta, y, distance: d, cost: 0.0, objective: d };
        let table = SweepTable {
            records: vec![rec(0.0, 0, 1.0), rec(0.2, 1, 0.5), rec(0.4, 2, 0.5), rec(0.6, 3, 0.7)],
            p: 3,
            total_edges: 3,
        };
        assert_eq!(maximal_filter(&table), (0.2, 1));
        assert_eq!(tuned_filter(&table), (0.2, 1));
    }

    #[test]
    fn zero_distance_at_zero_means_no_filtering() {
        let m = three();
        let target = spectrum(&m).unwrap();
        let table = sweep(&m, &target, &DistanceSpec::default(), &CostSpec::none()).unwrap();
        assert_eq!(maximal_filter(&table), (0.0, 0));
    }

    #[test]
    fn run_filter_needs_two_nodes() {
        let d = DataMatrix::unlabeled(DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 4.0])).unwrap();
        let err = run_filter(&d, &DistanceSpec::default(), &CostSpec::none(), &FilterOptions::default());
        assert!(matches!(err, Err(Error::InsufficientDimensions { p: 1 })));
    }

    #[test]
    fn zero_cost_tuned_equals_maximal() {
        let sigma = SymMatrix::identity(6, MatrixKind::Correlation);
        let d = sample_gaussian(&sigma, 30, 4).unwrap();
        let r =
            run_filter(&d, &DistanceSpec::default(), &CostSpec::power(0.0, 2.0).unwrap(), &FilterOptions::default())
                .unwrap();
        assert_eq!((r.eta_star, r.y_star), (r.eta_tilde, r.y_tilde));
        assert_eq!(r.matrix_star, r.matrix_tilde);
    }

    #[test]
    fn diagonal_sigma_filters_nearly_everything() {
        let sigma = SymMatrix::identity(10, MatrixKind::Correlation);
        let mut hits = 0;
        for seed in 0..100 {
            let d = sample_gaussian(&sigma, 1000, seed).unwrap();
            let r = run_filter(&d, &DistanceSpec::default(), &CostSpec::none(), &FilterOptions::default()).unwrap();
            if r.y_star as f64 >= 0.9 * r.table.total_edges as f64 {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}/100");
    }

    #[test]
    fn nercome_target_and_covariance_scale_run() {
        let sigma = SymMatrix::identity(5, MatrixKind::Correlation);
        let d = sample_gaussian(&sigma, 40, 8).unwrap();
        let opts = FilterOptions {
            scale: Scale::Covariance,
            target: TargetChoice::Nercome(NercomeParams { n_splits: 5, ..Default::default() }),
            mp_band: false,
        };
        let r = run_filter(&d, &DistanceSpec::default(), &CostSpec::none(), &opts).unwrap();
        assert!(r.shrinkage.is_none());
        assert_eq!(r.sample.kind(), MatrixKind::Covariance);
        assert_eq!(r.table.records.last().unwrap().y, 10);
    }

    fn arb_corr() -> impl Strategy<Value = SymMatrix> {
        (2usize..7)
            .prop_flat_map(|p| proptest::collection::vec(-1.0f64..1.0, (p + 3) * p).prop_map(move |v| corr_from(&v, p)))
    }

    proptest! {
        #[test]
        fn thresholds_nest(m in arb_corr(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(edge_subset(&apply_threshold(&m, hi), &apply_threshold(&m, lo)));
        }

        #[test]
        fn threshold_keeps_trace(m in arb_corr(), eta in 0.0f64..1.0) {
            let t = apply_threshold(&m, eta);
            prop_assert_eq!(t.trace(), m.trace());
            let (a, b) = (spectrum(&t).unwrap().sum(), spectrum(&m).unwrap().sum());
            prop_assert!((a - b).abs() < 1e-8);
        }

        #[test]
        fn sweep_table_shape(m in arb_corr(), theta1 in 0.0f64..0.5) {
            let target = Spectrum::new(vec![1.0; m.dim()], MatrixKind::Correlation).unwrap();
            let cspec = CostSpec::power(theta1, 2.0).unwrap();
            let t = sweep(&m, &target, &DistanceSpec::default(), &cspec).unwrap();
            prop_assert_eq!(t.records[0].eta, 0.0);
            prop_assert_eq!(t.records[0].y, 0);
            prop_assert_eq!(t.records.last().unwrap().y, t.total_edges);
            for w in t.records.windows(2) {
                prop_assert!(w[0].eta < w[1].eta);
                prop_assert!(w[0].y < w[1].y);
            }
            for r in &t.records {
                prop_assert_eq!(r.objective, r.distance + r.cost);
                prop_assert_eq!(r.y, edges_deleted(&m, r.eta));
            }
        }

        #[test]
        fn increasing_cost_deletes_no_more(distances in proptest::collection::vec(0.0f64..5.0, 1..30), theta1 in 1e-4f64..1.0, theta2 in 1.01f64..3.0) {
            let records: Vec<SweepRecord> = distances.iter().enumerate().map(|(k, &d)| {
                let c = cost(k, 0.0, 1.0, &CostSpec::Power { theta1, theta2 });
                SweepRecord { eta: k as f64 * 0.1, y: k, distance: d, cost: c, objective: d + c }
            }).collect();
            let table = SweepTable { p: 0, total_edges: records.len() - 1, records };
            let (eta_star, y_star) = maximal_filter(&table);
            let (eta_tilde, y_tilde) = tuned_filter(&table);
            prop_assert!(y_tilde <= y_star);
            prop_assert!(eta_tilde <= eta_star);
        }
    }
}
