//! Undirected weighted networks built from (filtered) matrices, plus export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Edge between node indices `source < target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<String>,
    edges: Vec<Edge>,
}

impl Network {
    /// Edges are normalized to `source < target` and sorted. Self-loops,
    /// duplicate pairs, zero weights and unknown indices are rejected.
    pub fn new(nodes: Vec<String>, mut edges: Vec<Edge>) -> Result<Self> {
        for e in edges.iter_mut() {
            if e.source > e.target {
                std::mem::swap(&mut e.source, &mut e.target);
            }
            if e.source == e.target {
                return Err(Error::InvalidData(format!("self-loop on node {}", e.source)));
            }
            if e.target >= nodes.len() {
                return Err(Error::InvalidData(format!("edge references node {}", e.target)));
            }
            if e.weight == 0.0 || !e.weight.is_finite() {
                return Err(Error::InvalidData(format!("edge ({}, {}) has weight {}", e.source, e.target, e.weight)));
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        if edges.windows(2).any(|w| (w[0].source, w[0].target) == (w[1].source, w[1].target)) {
            return Err(Error::InvalidData("duplicate edge".into()));
        }
        Ok(Self { nodes, edges })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search_by_key(&key, |e| (e.source, e.target)).is_ok()
    }

    /// Edges of `self` that are also edges of `other` (same node list).
    pub fn is_subgraph_of(&self, other: &Network) -> bool {
        self.nodes == other.nodes && self.edges.iter().all(|e| other.has_edge(e.source, e.target))
    }

    /// Number of connected components, isolated nodes included.
    pub fn component_count(&self) -> usize {
        self.component_sizes().len()
    }

    /// Component sizes, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut uf = UnionFind::<usize>::new(self.nodes.len());
        for e in &self.edges {
            uf.union(e.source, e.target);
        }
        let mut sizes: HashMap<usize, usize> = HashMap::new();
        for i in 0..self.nodes.len() {
            *sizes.entry(uf.find(i)).or_default() += 1;
        }
        let mut out: Vec<usize> = sizes.into_values().collect();
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }

    pub fn export<W: Write>(&self, format: ExportFormat, writer: W) -> Result<()> {
        match format {
            ExportFormat::EdgeCsv => self.write_edge_csv(writer),
            ExportFormat::GraphJson => {
                serde_json::to_writer_pretty(writer, &self.to_graph_json())?;
                Ok(())
            }
            ExportFormat::GraphMl => self.write_graphml(writer),
        }
    }

    fn write_edge_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["source", "target", "weight"])?;
        for e in &self.edges {
            wtr.write_record([&self.nodes[e.source], &self.nodes[e.target], &e.weight.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    fn write_graphml<W: Write>(&self, mut writer: W) -> Result<()> {
        let mut doc = String::new();
        doc.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        doc.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
        doc.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
        doc.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
        for node in &self.nodes {
            let _ = writeln!(doc, "    <node id=\"{}\"/>", xml_escape(node));
        }
        for e in &self.edges {
            let _ = writeln!(
                doc,
                "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{}</data></edge>",
                xml_escape(&self.nodes[e.source]),
                xml_escape(&self.nodes[e.target]),
                e.weight
            );
        }
        doc.push_str("  </graph>\n</graphml>\n");
        writer.write_all(doc.as_bytes())?;
        Ok(())
    }

    pub fn to_graph_json(&self) -> GraphJson {
        GraphJson {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| JsonEdge {
                    source: self.nodes[e.source].clone(),
                    target: self.nodes[e.target].clone(),
                    weight: e.weight,
                })
                .collect(),
        }
    }

    pub fn from_graph_json(g: &GraphJson) -> Result<Self> {
        let index: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        if index.len() != g.nodes.len() {
            return Err(Error::InvalidData("duplicate node label".into()));
        }
        let lookup = |label: &str| {
            index
                .get(label)
                .copied()
                .ok_or_else(|| Error::InvalidData(format!("edge references unknown node {label:?}")))
        };
        let edges = g
            .edges
            .iter()
            .map(|e| Ok(Edge { source: lookup(&e.source)?, target: lookup(&e.target)?, weight: e.weight }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(g.nodes.clone(), edges)
    }

    pub fn read_graph_json<R: std::io::Read>(reader: R) -> Result<Self> {
        let g: GraphJson = serde_json::from_reader(reader)?;
        Self::from_graph_json(&g)
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<String>,
    pub edges: Vec<JsonEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExportFormat {
    EdgeCsv,
    GraphJson,
    GraphMl,
}

impl ExportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ExportFormat::EdgeCsv => "csv",
            ExportFormat::GraphJson => "json",
            ExportFormat::GraphMl => "graphml",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge_csv" => Ok(ExportFormat::EdgeCsv),
            "graph_json" => Ok(ExportFormat::GraphJson),
            "graphml" => Ok(ExportFormat::GraphMl),
            other => Err(Error::InvalidParameter(format!("unknown export format {other:?}"))),
        }
    }
}

/// One edge per non-zero upper-triangle off-diagonal entry.
pub fn build_network(m: &SymMatrix) -> Network {
    let edges = m
        .upper_off_diagonal()
        .filter(|&(_, _, w)| w != 0.0)
        .map(|(source, target, weight)| Edge { source, target, weight })
        .collect();
    Network { nodes: m.labels().to_vec(), edges }
}

/// Replaces each correlation weight `ρ` by the distance `sqrt(2(1 - ρ))`.
/// A perfectly correlated pair maps to 0 and is dropped, since edges carry
/// non-zero weights.
pub fn metric_weights(net: &Network) -> Result<Network> {
    let mut edges = Vec::with_capacity(net.edges.len());
    for e in &net.edges {
        if !(-1.0..=1.0).contains(&e.weight) {
            return Err(Error::WeightOutOfRange {
                source_label: net.nodes[e.source].clone(),
                target_label: net.nodes[e.target].clone(),
                weight: e.weight,
            });
        }
        let gamma = correlation_distance(e.weight);
        if gamma != 0.0 {
            edges.push(Edge { weight: gamma, ..*e });
        }
    }
    Ok(Network { nodes: net.nodes.clone(), edges })
}

pub fn correlation_distance(rho: f64) -> f64 {
    (2.0 * (1.0 - rho)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixKind;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn labels(p: usize) -> Vec<String> {
        (0..p).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
    }

    fn export_string(net: &Network, format: ExportFormat) -> String {
        let mut buf = Vec::new();
        net.export(format, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn identity_has_no_edges() {
        assert_eq!(build_network(&SymMatrix::identity(4, MatrixKind::Correlation)).edge_count(), 0);
    }

    #[test]
    fn complete_graph_edge_count() {
        let m = SymMatrix::unlabeled(
            DMatrix::from_fn(10, 10, |i, j| if i == j { 1.0 } else { 0.1 }),
            MatrixKind::Correlation,
        )
        .unwrap();
        let net = build_network(&m);
        assert_eq!(net.edge_count(), 45);
        assert_eq!(net.component_count(), 1);
    }

    #[test]
    fn thresholded_example_has_one_edge() {
        let m = SymMatrix::unlabeled(
            DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.5, 0.3, 1.0, 0.1, -0.5, 0.1, 1.0]),
            MatrixKind::Correlation,
        )
        .unwrap();
        let net = build_network(&crate::filter::apply_threshold(&m, 0.4));
        assert_eq!(net.edges(), &[Edge { source: 0, target: 2, weight: -0.5 }]);
        assert_eq!(net.component_sizes(), vec![2, 1]);
    }

    #[test]
    fn metric_weight_examples() {
        assert_eq!(correlation_distance(1.0), 0.0);
        assert_eq!(correlation_distance(-1.0), 2.0);
        assert_eq!(correlation_distance(0.5), 1.0);
        let net = Network::new(
            labels(3),
            vec![Edge { source: 0, target: 1, weight: 0.5 }, Edge { source: 1, target: 2, weight: -1.0 }],
        )
        .unwrap();
        let m = metric_weights(&net).unwrap();
        assert_eq!(m.edges()[0].weight, 1.0);
        assert_eq!(m.edges()[1].weight, 2.0);
        let bad = Network::new(labels(2), vec![Edge { source: 0, target: 1, weight: 1.5 }]).unwrap();
        assert!(matches!(metric_weights(&bad), Err(Error::WeightOutOfRange { .. })));
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(Network::new(labels(2), vec![Edge { source: 1, target: 1, weight: 1.0 }]).is_err());
        assert!(Network::new(labels(2), vec![Edge { source: 0, target: 1, weight: 0.0 }]).is_err());
        assert!(Network::new(
            labels(2),
            vec![Edge { source: 0, target: 1, weight: 1.0 }, Edge { source: 1, target: 0, weight: 2.0 }]
        )
        .is_err());
    }

    #[test]
    fn empty_network_csv_is_header_only() {
        let net = Network::new(labels(3), vec![]).unwrap();
        assert_eq!(export_string(&net, ExportFormat::EdgeCsv), "source,target,weight\n");
    }

    #[test]
    fn one_edge_csv() {
        let net = Network::new(labels(2), vec![Edge { source: 0, target: 1, weight: 0.5 }]).unwrap();
        assert_eq!(export_string(&net, ExportFormat::EdgeCsv), "source,target,weight\nA,B,0.5\n");
    }

    #[test]
    fn csv_quotes_awkward_labels() {
        let net = Network::new(vec!["a,b".into(), "c\"d".into()], vec![Edge { source: 0, target: 1, weight: -0.25 }])
            .unwrap();
        assert_eq!(export_string(&net, ExportFormat::EdgeCsv), "source,target,weight\n\"a,b\",\"c\"\"d\",-0.25\n");
    }

    #[test]
    fn graphml_document() {
        let net =
            Network::new(vec!["A&B".into(), "C".into()], vec![Edge { source: 0, target: 1, weight: 0.5 }]).unwrap();
        let doc = export_string(&net, ExportFormat::GraphMl);
        assert!(doc.contains("edgedefault=\"undirected\""));
        assert!(doc.contains("<node id=\"A&amp;B\"/>"));
        assert!(doc.contains("<edge source=\"A&amp;B\" target=\"C\"><data key=\"weight\">0.5</data></edge>"));
    }

    #[test]
    fn json_shape() {
        let net = Network::new(labels(2), vec![Edge { source: 0, target: 1, weight: 0.1 }]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&export_string(&net, ExportFormat::GraphJson)).unwrap();
        assert_eq!(v["nodes"], serde_json::json!(["A", "B"]));
        assert_eq!(v["edges"][0], serde_json::json!({"source": "A", "target": "B", "weight": 0.1}));
    }

    #[test]
    fn json_rejects_unknown_nodes() {
        let g = GraphJson {
            nodes: labels(2),
            edges: vec![JsonEdge { source: "A".into(), target: "Z".into(), weight: 1.0 }],
        };
        assert!(Network::from_graph_json(&g).is_err());
    }

    fn arb_network() -> impl Strategy<Value = Network> {
        (2usize..8).prop_flat_map(|p| {
            proptest::collection::vec(
                prop_oneof![Just(0.0), -1.0f64..1.0, any::<f64>().prop_filter("finite", |x| x.is_finite())],
                p * (p - 1) / 2,
            )
            .prop_map(move |w| {
                let mut edges = Vec::new();
                let mut k = 0;
                for i in 0..p {
                    for j in (i + 1)..p {
                        if w[k] != 0.0 {
                            edges.push(Edge { source: i, target: j, weight: w[k] });
                        }
                        k += 1;
                    }
                }
                Network::new(labels(p), edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn graph_json_round_trips(net in arb_network()) {
            let mut buf = Vec::new();
            net.export(ExportFormat::GraphJson, &mut buf).unwrap();
            prop_assert_eq!(Network::read_graph_json(buf.as_slice()).unwrap(), net);
        }

        #[test]
        fn metric_weight_decreases_in_rho(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(correlation_distance(lo) > correlation_distance(hi));
            prop_assert!((0.0..=2.0).contains(&correlation_distance(lo)));
        }
    }
}
