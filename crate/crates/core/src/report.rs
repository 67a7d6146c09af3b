//! JSON run report written by `sparfilter filter`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::filter::{CostSpec, FilterResult, Scale};
use crate::network::Network;
use crate::spectral::{Band, Metric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub n: usize,
    pub p: usize,
    pub pn_ratio: f64,
    pub returns: String,
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub kind: String,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub mu: Option<f64>,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub eta: f64,
    pub deleted_edges: usize,
    pub retained_edges: usize,
    pub distance: f64,
    pub components: usize,
    pub component_sizes: Vec<usize>,
}

impl FilterSummary {
    fn new(eta: f64, deleted_edges: usize, distance: f64, net: &Network) -> Self {
        Self {
            eta,
            deleted_edges,
            retained_edges: net.edge_count(),
            distance,
            components: net.component_count(),
            component_sizes: net.component_sizes(),
        }
    }
}

/// Every field that is a deterministic function of the inputs and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub input: InputSummary,
    pub target: TargetSummary,
    pub metric: Metric,
    pub band: Option<Band>,
    pub cost: CostSpec,
    pub seed: u64,
    pub total_edges: usize,
    pub maximal: FilterSummary,
    pub tuned: FilterSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub summary: RunSummary,
    /// SHA-256 of the serialized summary; excludes `timing`.
    pub digest: String,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(summary: RunSummary, elapsed_ms: f64) -> Self {
        let digest = summary_digest(&summary);
        Self { summary, digest, timing: Timing { elapsed_ms } }
    }
}

pub fn summary_digest(summary: &RunSummary) -> String {
    let bytes = serde_json::to_vec(summary).expect("summary serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[allow(clippy::too_many_arguments)]
pub fn summarize(
    result: &FilterResult,
    returns: &str,
    scale: Scale,
    target_kind: &str,
    metric: Metric,
    cost: CostSpec,
    seed: u64,
    maximal: &Network,
    tuned: &Network,
) -> RunSummary {
    let lw = result.shrinkage.as_ref();
    RunSummary {
        input: InputSummary {
            n: result.n,
            p: result.sample.dim(),
            pn_ratio: result.pn_ratio(),
            returns: returns.to_string(),
            scale,
        },
        target: TargetSummary {
            kind: target_kind.to_string(),
            alpha1: lw.map(|s| s.alpha1),
            alpha2: lw.map(|s| s.alpha2),
            mu: lw.map(|s| s.mu),
            spectrum: result.target.values().to_vec(),
        },
        metric,
        band: result.band,
        cost,
        seed,
        total_edges: result.table.total_edges,
        maximal: FilterSummary::new(result.eta_star, result.y_star, result.distance_star, maximal),
        tuned: FilterSummary::new(result.eta_tilde, result.y_tilde, result.distance_tilde, tuned),
    }
}
