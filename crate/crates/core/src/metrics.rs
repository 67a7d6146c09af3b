//! Edge-recovery diagnostics against a known ground-truth network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    /// Share of true edges retained.
    pub p_t: f64,
    /// Share of true edge weight retained, weights `|true correlation|`.
    pub p_t_weighted: f64,
    /// Share of retained edges that are not true edges; 0 when nothing is
    /// retained.
    pub p_f: f64,
    pub eta: f64,
}

pub fn recovery_metrics(
    truth: &Network,
    filtered: &Network,
    true_weights: &SymMatrix,
    eta: f64,
) -> Result<RecoveryMetrics> {
    if truth.nodes() != filtered.nodes() || true_weights.labels() != truth.nodes() {
        return Err(Error::NodeSetMismatch);
    }
    if truth.edge_count() == 0 {
        return Err(Error::EmptyTruth);
    }

    let mut kept = 0usize;
    let mut kept_weight = 0.0;
    for e in truth.edges() {
        if filtered.has_edge(e.source, e.target) {
            kept += 1;
            kept_weight += true_weights.get(e.source, e.target).abs();
        }
    }
    let total_weight: f64 = truth.edges().iter().map(|e| true_weights.get(e.source, e.target).abs()).sum();
    let false_edges = filtered.edges().iter().filter(|e| !truth.has_edge(e.source, e.target)).count();

    Ok(RecoveryMetrics {
        p_t: kept as f64 / truth.edge_count() as f64,
        p_t_weighted: if total_weight > 0.0 { kept_weight / total_weight } else { 0.0 },
        p_f: if filtered.edge_count() == 0 { 0.0 } else { false_edges as f64 / filtered.edge_count() as f64 },
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixKind;
    use crate::network::{build_network, Edge};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn sparse_truth() -> SymMatrix {
        // 15 of the 45 pairs of a 10-node graph
        let mut m = DMatrix::identity(10, 10);
        let mut k = 0;
        for i in 0..10 {
            for j in (i + 1)..10 {
                if k % 3 == 0 {
                    m[(i, j)] = 0.05 + 0.01 * k as f64;
                    m[(j, i)] = m[(i, j)];
                }
                k += 1;
            }
        }
        SymMatrix::unlabeled(m, MatrixKind::Correlation).unwrap()
    }

    #[test]
    fn perfect_recovery() {
        let sigma = sparse_truth();
        let t = build_network(&sigma);
        assert_eq!(t.edge_count(), 15);
        let m = recovery_metrics(&t, &t, &sigma, 0.0).unwrap();
        assert_eq!((m.p_t, m.p_t_weighted, m.p_f), (1.0, 1.0, 0.0));
    }

    #[test]
    fn complete_graph_against_sparse_truth() {
        let sigma = sparse_truth();
        let t = build_network(&sigma);
        let full = SymMatrix::unlabeled(
            DMatrix::from_fn(10, 10, |i, j| if i == j { 1.0 } else { 0.2 }),
            MatrixKind::Correlation,
        )
        .unwrap();
        let m = recovery_metrics(&t, &build_network(&full), &sigma, 0.0).unwrap();
        assert_eq!(m.p_t, 1.0);
        assert_eq!(m.p_t_weighted, 1.0);
        assert_eq!(m.p_f, 30.0 / 45.0);
    }

    #[test]
    fn empty_filtered_network_has_no_false_positives() {
        let sigma = sparse_truth();
        let t = build_network(&sigma);
        let none = build_network(&SymMatrix::identity(10, MatrixKind::Correlation));
        let m = recovery_metrics(&t, &none, &sigma, 1.0).unwrap();
        assert_eq!((m.p_t, m.p_t_weighted, m.p_f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn errors() {
        let sigma = sparse_truth();
        let t = build_network(&sigma);
        let other = Network::new((0..10).map(|i| format!("N{i}")).collect(), vec![]).unwrap();
        assert!(matches!(recovery_metrics(&t, &other, &sigma, 0.0), Err(Error::NodeSetMismatch)));
        let empty = build_network(&SymMatrix::identity(10, MatrixKind::Correlation));
        assert!(matches!(recovery_metrics(&empty, &t, &sigma, 0.0), Err(Error::EmptyTruth)));
    }

    #[test]
    fn dropping_weakest_true_edge_hurts_count_more_than_weight() {
        let sigma = sparse_truth();
        let t = build_network(&sigma);
        let weakest = t.edges().iter().min_by(|a, b| a.weight.abs().total_cmp(&b.weight.abs())).copied().unwrap();
        let rest: Vec<Edge> = t.edges().iter().copied().filter(|e| *e != weakest).collect();
        let filtered = Network::new(t.nodes().to_vec(), rest).unwrap();
        let m = recovery_metrics(&t, &filtered, &sigma, 0.0).unwrap();
        assert!(1.0 - m.p_t > 1.0 - m.p_t_weighted);
    }

    proptest! {
        #[test]
        fn subsets_of_truth_have_no_false_positives(mask in proptest::collection::vec(any::<bool>(), 15)) {
            let sigma = sparse_truth();
            let t = build_network(&sigma);
            let kept: Vec<Edge> = t.edges().iter().zip(&mask).filter(|(_, &k)| k).map(|(e, _)| *e).collect();
            let filtered = Network::new(t.nodes().to_vec(), kept).unwrap();
            let m = recovery_metrics(&t, &filtered, &sigma, 0.0).unwrap();
            prop_assert_eq!(m.p_f, 0.0);
            prop_assert!((0.0..=1.0).contains(&m.p_t) && (0.0..=1.0).contains(&m.p_t_weighted));
        }
    }
}
