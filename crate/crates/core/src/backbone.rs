//! Backbone extraction: maximum spanning forest plus above-threshold edges,
//! with node metadata overlays and GraphML/DOT/JSON export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::FieldClassification;
use crate::space::ProximityMatrix;
use crate::states::{ActivityState, StateMatrix};

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            self.parent[x] = self.find(self.parent[x]);
        }
        self.parent[x]
    }

    /// Merges the two sets, returning false when already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Maximum spanning forest by Kruskal's rule: edges considered in descending
/// weight, ties broken by ascending `(i, j)`, cycle-closing edges skipped.
/// Returns the chosen edges sorted by `(i, j)`.
pub fn max_spanning_tree(n_nodes: usize, edges: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| {
        edges[b]
            .2
            .total_cmp(&edges[a].2)
            .then(edges[a].0.cmp(&edges[b].0))
            .then(edges[a].1.cmp(&edges[b].1))
    });
    let mut uf = UnionFind::new(n_nodes);
    let mut chosen: Vec<(usize, usize, f64)> = order
        .into_iter()
        .map(|k| edges[k])
        .filter(|&(i, j, _)| uf.union(i, j))
        .collect();
    chosen.sort_by_key(|e| (e.0, e.1));
    chosen
}

/// How an edge earned its place in the backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOrigin {
    Mst,
    Threshold,
    Both,
}

impl EdgeOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeOrigin::Mst => "mst",
            EdgeOrigin::Threshold => "threshold",
            EdgeOrigin::Both => "both",
        }
    }
}

impl fmt::Display for EdgeOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn ser_state<S: serde::Serializer>(
    state: &Option<ActivityState>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match state {
        Some(st) => s.serialize_str(st.as_str()),
        None => s.serialize_none(),
    }
}

fn ser_origin<S: serde::Serializer>(
    origin: &EdgeOrigin,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(origin.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackboneNode {
    pub id: String,
    pub name: String,
    pub area: String,
    pub size: f64,
    #[serde(serialize_with = "ser_state")]
    pub state: Option<ActivityState>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackboneEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
    #[serde(serialize_with = "ser_origin")]
    pub origin: EdgeOrigin,
}

/// Backbone of a proximity matrix: every field as a node, the maximum
/// spanning forest united with all edges strictly above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackboneGraph {
    pub nodes: Vec<BackboneNode>,
    pub edges: Vec<BackboneEdge>,
    /// Node ids with no backbone edge, kept out of the serialized exports.
    #[serde(skip)]
    pub isolated: Vec<String>,
}

/// Extracts the backbone from a symmetrized matrix. Node display names and
/// areas come from the classification when given, sizes from `node_sizes`
/// (missing entries render as zero). Threshold retention is strict:
/// `weight > tau`.
pub fn build_backbone(
    phi: &ProximityMatrix,
    tau: f64,
    node_sizes: &BTreeMap<String, f64>,
    classification: Option<&FieldClassification>,
) -> Result<BackboneGraph> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidInput(format!(
            "threshold must be finite and non-negative, got {tau}"
        )));
    }
    if !phi.is_symmetric() {
        return Err(Error::InvalidInput(
            "backbone extraction needs a symmetrized matrix".into(),
        ));
    }
    let n = phi.n_fields();
    let mut candidates = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = phi.get(i, j);
            if w > 0.0 {
                candidates.push((i, j, w));
            }
        }
    }
    let forest: BTreeSet<(usize, usize)> = max_spanning_tree(n, &candidates)
        .into_iter()
        .map(|(i, j, _)| (i, j))
        .collect();

    let fields = phi.fields();
    let mut edges = Vec::new();
    let mut degree = vec![0usize; n];
    for (i, j, w) in candidates {
        let origin = match (forest.contains(&(i, j)), w > tau) {
            (true, true) => EdgeOrigin::Both,
            (true, false) => EdgeOrigin::Mst,
            (false, true) => EdgeOrigin::Threshold,
            (false, false) => continue,
        };
        degree[i] += 1;
        degree[j] += 1;
        edges.push(BackboneEdge {
            source: fields.id(i).to_string(),
            target: fields.id(j).to_string(),
            weight: w,
            origin,
        });
    }

    let nodes: Vec<BackboneNode> = (0..n)
        .map(|i| {
            let id = fields.id(i);
            let meta = classification.and_then(|c| c.field_meta(id));
            BackboneNode {
                id: id.to_string(),
                name: meta.map(|m| m.name.clone()).unwrap_or_else(|| id.to_string()),
                area: meta.map(|m| m.area_name.clone()).unwrap_or_default(),
                size: node_sizes.get(id).copied().unwrap_or(0.0),
                state: None,
            }
        })
        .collect();
    let isolated = (0..n)
        .filter(|&i| degree[i] == 0)
        .map(|i| fields.id(i).to_string())
        .collect();
    Ok(BackboneGraph {
        nodes,
        edges,
        isolated,
    })
}

/// Colors every node with one entity's activity state. Fields the entity has
/// no recorded band for are inactive by definition, so every node ends up
/// with a state.
pub fn overlay_states(
    mut graph: BackboneGraph,
    states: &StateMatrix,
    entity_id: &str,
) -> Result<BackboneGraph> {
    for node in &mut graph.nodes {
        let f = states.fields().position(&node.id).ok_or_else(|| {
            Error::FieldIndexMismatch(format!(
                "backbone node `{}` is missing from the state matrix",
                node.id
            ))
        })?;
        let state = states
            .state(entity_id, f)
            .ok_or_else(|| Error::UnknownEntity(entity_id.to_string()))?;
        node.state = Some(state);
    }
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Graphml,
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graphml" => Ok(ExportFormat::Graphml),
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidInput(format!(
                "unknown export format `{other}`; expected graphml, dot, or json"
            ))),
        }
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
            _ => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn export_graphml(graph: &BackboneGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"area\" for=\"node\" attr.name=\"area\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"size\" for=\"node\" attr.name=\"size\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"state\" for=\"node\" attr.name=\"state\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"origin\" for=\"edge\" attr.name=\"origin\" attr.type=\"string\"/>\n");
    out.push_str("  <graph id=\"backbone\" edgedefault=\"undirected\">\n");
    for node in &graph.nodes {
        out.push_str(&format!("    <node id=\"{}\">\n", xml_escape(&node.id)));
        out.push_str(&format!(
            "      <data key=\"name\">{}</data>\n",
            xml_escape(&node.name)
        ));
        out.push_str(&format!(
            "      <data key=\"area\">{}</data>\n",
            xml_escape(&node.area)
        ));
        out.push_str(&format!("      <data key=\"size\">{}</data>\n", node.size));
        if let Some(state) = node.state {
            out.push_str(&format!(
                "      <data key=\"state\">{}</data>\n",
                state.as_str()
            ));
        }
        out.push_str("    </node>\n");
    }
    for edge in &graph.edges {
        out.push_str(&format!(
            "    <edge source=\"{}\" target=\"{}\">\n",
            xml_escape(&edge.source),
            xml_escape(&edge.target)
        ));
        out.push_str(&format!(
            "      <data key=\"weight\">{}</data>\n",
            edge.weight
        ));
        out.push_str(&format!(
            "      <data key=\"origin\">{}</data>\n",
            edge.origin
        ));
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n");
    out.push_str("</graphml>\n");
    out
}

fn export_dot(graph: &BackboneGraph) -> String {
    let mut out = String::new();
    out.push_str("graph backbone {\n");
    for node in &graph.nodes {
        let mut attrs = vec![
            format!("label=\"{}\"", dot_escape(&node.name)),
            format!("area=\"{}\"", dot_escape(&node.area)),
            format!("size={}", node.size),
        ];
        if let Some(state) = node.state {
            attrs.push(format!("state=\"{}\"", state.as_str()));
        }
        out.push_str(&format!(
            "  \"{}\" [{}];\n",
            dot_escape(&node.id),
            attrs.join(", ")
        ));
    }
    for edge in &graph.edges {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\" [weight={}, origin=\"{}\"];\n",
            dot_escape(&edge.source),
            dot_escape(&edge.target),
            edge.weight,
            edge.origin
        ));
    }
    out.push_str("}\n");
    out
}

/// Serializes the graph. JSON is compact `{"nodes":[...],"edges":[...]}`,
/// GraphML declares the name/area/size/state node keys and weight/origin
/// edge keys, DOT quotes and escapes all identifiers.
pub fn export_graph(graph: &BackboneGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Graphml => export_graphml(graph),
        ExportFormat::Dot => export_dot(graph),
        ExportFormat::Json => {
            serde_json::to_string(graph).expect("backbone graph serializes infallibly")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AggregationLevel, FieldIndex, MapKind, YearWindow};

    fn index(n: usize) -> FieldIndex {
        FieldIndex::from_ids((0..n).map(|i| format!("f{i}")))
    }

    fn symmetric(n: usize, entries: &[(usize, usize, f64)]) -> ProximityMatrix {
        let mut values = vec![0.0; n * n];
        for &(i, j, w) in entries {
            values[i * n + j] = w;
            values[j * n + i] = w;
        }
        ProximityMatrix::from_dense(index(n), values, MapKind::ResearchSpace).unwrap()
    }

    fn weights(graph: &BackboneGraph) -> Vec<f64> {
        graph.edges.iter().map(|e| e.weight).collect()
    }

    #[test]
    fn triangle_keeps_the_two_strong_edges() {
        let phi = symmetric(3, &[(0, 1, 0.9), (1, 2, 0.5), (0, 2, 0.1)]);
        let graph = build_backbone(&phi, 0.212, &BTreeMap::new(), None).unwrap();
        assert_eq!(weights(&graph), vec![0.9, 0.5]);
        assert!(graph.edges.iter().all(|e| e.origin == EdgeOrigin::Both));
        assert!(graph.isolated.is_empty());
    }

    #[test]
    fn threshold_is_strictly_greater() {
        let phi = symmetric(2, &[(0, 1, 0.212)]);
        let graph = build_backbone(&phi, 0.212, &BTreeMap::new(), None).unwrap();
        // The edge survives only through the spanning forest.
        assert_eq!(graph.edges.len(), 1);
        assert_eq!(graph.edges[0].origin, EdgeOrigin::Mst);
    }

    #[test]
    fn tau_extremes() {
        let phi = symmetric(3, &[(0, 1, 0.9), (1, 2, 0.5), (0, 2, 0.1)]);
        let tree_only = build_backbone(&phi, 1.0, &BTreeMap::new(), None).unwrap();
        assert_eq!(weights(&tree_only), vec![0.9, 0.5]);
        assert!(tree_only.edges.iter().all(|e| e.origin == EdgeOrigin::Mst));

        let everything = build_backbone(&phi, 0.0, &BTreeMap::new(), None).unwrap();
        assert_eq!(weights(&everything), vec![0.9, 0.1, 0.5]);
        let origin_of = |i: &str, j: &str| {
            everything
                .edges
                .iter()
                .find(|e| e.source == i && e.target == j)
                .unwrap()
                .origin
        };
        assert_eq!(origin_of("f0", "f1"), EdgeOrigin::Both);
        assert_eq!(origin_of("f1", "f2"), EdgeOrigin::Both);
        assert_eq!(origin_of("f0", "f2"), EdgeOrigin::Threshold);
    }

    #[test]
    fn forest_spans_each_component() {
        let phi = symmetric(
            6,
            &[(0, 1, 0.4), (1, 2, 0.3), (0, 2, 0.2), (3, 4, 0.9)],
        );
        let graph = build_backbone(&phi, 1.0, &BTreeMap::new(), None).unwrap();
        // Six nodes in three components: the forest has exactly three edges.
        assert_eq!(graph.edges.len(), 3);
        assert_eq!(graph.isolated, vec!["f5".to_string()]);
        assert_eq!(graph.nodes.len(), 6);
    }

    #[test]
    fn equal_weights_break_ties_by_position() {
        let edges = [(0, 1, 0.5), (0, 2, 0.5), (1, 2, 0.5)];
        let forest = max_spanning_tree(3, &edges);
        assert_eq!(forest, vec![(0, 1, 0.5), (0, 2, 0.5)]);
    }

    #[test]
    fn node_metadata_and_sizes_flow_through() {
        let phi = symmetric(2, &[(0, 1, 0.6)]);
        let sizes: BTreeMap<String, f64> = [("f0".to_string(), 12.5)].into();
        let graph = build_backbone(&phi, 0.212, &sizes, None).unwrap();
        assert_eq!(graph.nodes[0].size, 12.5);
        assert_eq!(graph.nodes[1].size, 0.0);
        assert_eq!(graph.nodes[0].name, "f0");
        assert_eq!(graph.nodes[0].area, "");
    }

    fn toy_states(rows: &[(&str, &[(usize, ActivityState)])]) -> StateMatrix {
        let map: std::collections::BTreeMap<String, std::collections::BTreeMap<usize, ActivityState>> =
            rows.iter()
                .map(|(e, cells)| (e.to_string(), cells.iter().copied().collect()))
                .collect();
        StateMatrix::new(
            AggregationLevel::Author,
            YearWindow::new(2008, 2011).unwrap(),
            index(2),
            map,
        )
        .unwrap()
    }

    #[test]
    fn overlay_colors_every_node() {
        let phi = symmetric(2, &[(0, 1, 0.6)]);
        let graph = build_backbone(&phi, 0.212, &BTreeMap::new(), None).unwrap();
        let states = toy_states(&[("a", &[(0, ActivityState::Developed)])]);
        let colored = overlay_states(graph.clone(), &states, "a").unwrap();
        assert_eq!(colored.nodes[0].state, Some(ActivityState::Developed));
        assert_eq!(colored.nodes[1].state, Some(ActivityState::Inactive));

        // A known entity with no active cells is inactive everywhere.
        let empty = toy_states(&[("b", &[])]);
        let colored = overlay_states(graph, &empty, "b").unwrap();
        assert!(colored
            .nodes
            .iter()
            .all(|n| n.state == Some(ActivityState::Inactive)));
    }

    #[test]
    fn overlay_rejects_unknown_entity() {
        let phi = symmetric(2, &[(0, 1, 0.6)]);
        let graph = build_backbone(&phi, 0.212, &BTreeMap::new(), None).unwrap();
        let states = toy_states(&[("a", &[])]);
        assert!(matches!(
            overlay_states(graph, &states, "nobody"),
            Err(Error::UnknownEntity(_))
        ));
    }

    #[test]
    fn empty_graph_serializes_exactly() {
        let graph = BackboneGraph {
            nodes: vec![],
            edges: vec![],
            isolated: vec![],
        };
        assert_eq!(
            export_graph(&graph, ExportFormat::Json),
            "{\"nodes\":[],\"edges\":[]}"
        );
    }

    #[test]
    fn exports_are_deterministic() {
        let phi = symmetric(3, &[(0, 1, 0.9), (1, 2, 0.5), (0, 2, 0.1)]);
        let a = build_backbone(&phi, 0.212, &BTreeMap::new(), None).unwrap();
        let b = build_backbone(&phi, 0.212, &BTreeMap::new(), None).unwrap();
        for fmt in [ExportFormat::Graphml, ExportFormat::Dot, ExportFormat::Json] {
            assert_eq!(export_graph(&a, fmt), export_graph(&b, fmt));
        }
        let gml = export_graph(&a, ExportFormat::Graphml);
        assert!(gml.contains("attr.name=\"weight\""));
        assert!(gml.contains("<edge source=\"f0\" target=\"f1\">"));
        let dot = export_graph(&a, ExportFormat::Dot);
        assert!(dot.contains("\"f0\" -- \"f1\" [weight=0.9, origin=\"both\"]"));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let phi = symmetric(2, &[(0, 1, 0.6)]);
        assert!(build_backbone(&phi, -0.1, &BTreeMap::new(), None).is_err());
        assert!(build_backbone(&phi, f64::NAN, &BTreeMap::new(), None).is_err());
        let asym = ProximityMatrix::from_dense(
            index(2),
            vec![0.0, 0.5, 0.4, 0.0],
            MapKind::ResearchSpace,
        )
        .unwrap();
        assert!(build_backbone(&asym, 0.212, &BTreeMap::new(), None).is_err());
    }

    #[test]
    fn format_parsing() {
        assert_eq!("graphml".parse::<ExportFormat>().unwrap(), ExportFormat::Graphml);
        assert_eq!("dot".parse::<ExportFormat>().unwrap(), ExportFormat::Dot);
        assert_eq!("json".parse::<ExportFormat>().unwrap(), ExportFormat::Json);
        assert!("gexf".parse::<ExportFormat>().is_err());
    }
}
