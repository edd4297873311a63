//! Text-attributed graphs: nodes carrying raw text, undirected edges and
//! optional class labels.

mod io;
mod split;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{escape_field, load_graph, unescape_field, write_graph, GraphFiles};
pub use split::{kfold_nodes, split_links, LinkSplit, NodeSplit};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("edge or label references unknown node `{0}`")]
    MissingNode(String),
    #[error("node `{0}` has empty raw text")]
    EmptyText(String),
    #[error("node id `{0}` appears more than once")]
    DuplicateNodeId(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("hop must be at least 1")]
    InvalidHop,
    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),
    #[error("{labeled} labeled nodes cannot fill {k} folds")]
    TooFewLabeledNodes { labeled: usize, k: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub node_id: String,
    pub raw_text: String,
    pub label: Option<String>,
}

impl NodeRecord {
    pub fn new(node_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Self {
            node_id: node_id.into(),
            raw_text: raw_text.into(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Undirected edge stored with its endpoints in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(String, String);

impl Edge {
    /// Returns `None` for a self-loop.
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Option<Self> {
        let (a, b) = (a.into(), b.into());
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Edge(a, b)),
            std::cmp::Ordering::Greater => Some(Edge(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn endpoints(&self) -> (&str, &str) {
        (&self.0, &self.1)
    }

    pub fn touches(&self, node: &str) -> bool {
        self.0 == node || self.1 == node
    }

    /// The endpoint opposite `node`, if `node` is an endpoint.
    pub fn other(&self, node: &str) -> Option<&str> {
        if self.0 == node {
            Some(&self.1)
        } else if self.1 == node {
            Some(&self.0)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.0, self.1)
    }
}

/// Immutable text-attributed graph.
#[derive(Clone, Debug, PartialEq)]
pub struct TextAttributedGraph {
    graph_id: String,
    domain_tag: String,
    nodes: Vec<NodeRecord>,
    edges: BTreeSet<Edge>,
    index: HashMap<String, usize>,
    // neighbor indices per node, sorted by neighbor id
    adjacency: Vec<Vec<usize>>,
}

impl TextAttributedGraph {
    /// Validates and builds a graph. Duplicate edges (in either direction)
    /// collapse into one.
    pub fn new<I, A, B>(
        graph_id: impl Into<String>,
        domain_tag: impl Into<String>,
        nodes: Vec<NodeRecord>,
        edges: I,
    ) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.raw_text.is_empty() {
                return Err(GraphError::EmptyText(node.node_id.clone()));
            }
            if index.insert(node.node_id.clone(), i).is_some() {
                return Err(GraphError::DuplicateNodeId(node.node_id.clone()));
            }
        }
        let mut edge_set = BTreeSet::new();
        for (a, b) in edges {
            let (a, b) = (a.into(), b.into());
            for end in [&a, &b] {
                if !index.contains_key(end) {
                    return Err(GraphError::MissingNode(end.clone()));
                }
            }
            let edge = Edge::new(a.clone(), b).ok_or(GraphError::SelfLoop(a))?;
            edge_set.insert(edge);
        }
        Ok(Self::assemble(graph_id.into(), domain_tag.into(), nodes, index, edge_set))
    }

    fn assemble(
        graph_id: String,
        domain_tag: String,
        nodes: Vec<NodeRecord>,
        index: HashMap<String, usize>,
        edges: BTreeSet<Edge>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for Edge(a, b) in &edges {
            let (ia, ib) = (index[a], index[b]);
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        for list in &mut adjacency {
            list.sort_by(|&x, &y| nodes[x].node_id.cmp(&nodes[y].node_id));
        }
        Self {
            graph_id,
            domain_tag,
            nodes,
            edges,
            index,
            adjacency,
        }
    }

    /// Same nodes, restricted to a subset of the edges (e.g. the training
    /// side of a link split).
    pub fn with_edges(&self, edges: &BTreeSet<Edge>) -> Result<Self, GraphError> {
        if let Some(edge) = edges.iter().find(|e| !self.edges.contains(*e)) {
            return Err(GraphError::InvalidParameter(format!(
                "edge ({}) is not part of graph {}",
                edge, self.graph_id
            )));
        }
        Ok(Self::assemble(
            self.graph_id.clone(),
            self.domain_tag.clone(),
            self.nodes.clone(),
            self.index.clone(),
            edges.clone(),
        ))
    }

    pub fn graph_id(&self) -> &str {
        &self.graph_id
    }

    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    /// Nodes in file order.
    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, node_id: &str) -> Result<&NodeRecord, GraphError> {
        self.index
            .get(node_id)
            .map(|&i| &self.nodes[i])
            .ok_or_else(|| GraphError::UnknownNode(node_id.to_owned()))
    }

    pub fn contains(&self, node_id: &str) -> bool {
        self.index.contains_key(node_id)
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        Edge::new(a, b).is_some_and(|e| self.edges.contains(&e))
    }

    pub fn degree(&self, node_id: &str) -> Result<usize, GraphError> {
        Ok(self.adjacency[self.ix(node_id)?].len())
    }

    /// Direct neighbors in ascending id order.
    pub fn adjacent(&self, node_id: &str) -> Result<Vec<&str>, GraphError> {
        Ok(self.adjacency[self.ix(node_id)?]
            .iter()
            .map(|&j| self.nodes[j].node_id.as_str())
            .collect())
    }

    /// Nodes at shortest-path distance exactly `hop` from `node_id`.
    pub fn neighbors(&self, node_id: &str, hop: usize) -> Result<BTreeSet<&str>, GraphError> {
        if hop == 0 {
            return Err(GraphError::InvalidHop);
        }
        let start = self.ix(node_id)?;
        let mut seen = vec![false; self.nodes.len()];
        seen[start] = true;
        let mut frontier = vec![start];
        for _ in 0..hop {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        next.push(v);
                    }
                }
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        Ok(frontier
            .into_iter()
            .map(|i| self.nodes[i].node_id.as_str())
            .collect())
    }

    /// Labeled nodes in file order.
    pub fn labeled_nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter().filter(|n| n.label.is_some())
    }

    /// Distinct class names in ascending order.
    pub fn classes(&self) -> BTreeSet<&str> {
        self.nodes.iter().filter_map(|n| n.label.as_deref()).collect()
    }

    fn ix(&self, node_id: &str) -> Result<usize, GraphError> {
        self.index
            .get(node_id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(node_id.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> TextAttributedGraph {
        let nodes = ["a", "b", "c"].iter().map(|id| NodeRecord::new(*id, *id)).collect();
        TextAttributedGraph::new("p", "test", nodes, [("a", "b"), ("b", "c")]).unwrap()
    }

    #[test]
    fn duplicate_edges_collapse() {
        let nodes = ["a", "b", "c"].iter().map(|id| NodeRecord::new(*id, "t")).collect();
        let g = TextAttributedGraph::new("g", "x", nodes, [("a", "b"), ("b", "a"), ("b", "c")])
            .unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn validation_errors() {
        let nodes = || vec![NodeRecord::new("a", "t"), NodeRecord::new("b", "t")];
        assert!(matches!(
            TextAttributedGraph::new("g", "x", nodes(), [("a", "z")]),
            Err(GraphError::MissingNode(id)) if id == "z"
        ));
        assert!(matches!(
            TextAttributedGraph::new("g", "x", nodes(), [("a", "a")]),
            Err(GraphError::SelfLoop(_))
        ));
        let dup = vec![NodeRecord::new("a", "t"), NodeRecord::new("a", "u")];
        assert!(matches!(
            TextAttributedGraph::new("g", "x", dup, Vec::<(String, String)>::new()),
            Err(GraphError::DuplicateNodeId(_))
        ));
        let empty = vec![NodeRecord::new("a", "")];
        assert!(matches!(
            TextAttributedGraph::new("g", "x", empty, Vec::<(String, String)>::new()),
            Err(GraphError::EmptyText(_))
        ));
    }

    #[test]
    fn hop_frontiers_on_path() {
        let g = path_graph();
        assert_eq!(g.neighbors("b", 1).unwrap(), BTreeSet::from(["a", "c"]));
        assert_eq!(g.neighbors("a", 2).unwrap(), BTreeSet::from(["c"]));
        assert!(g.neighbors("a", 3).unwrap().is_empty());
        assert!(matches!(g.neighbors("q", 1), Err(GraphError::UnknownNode(_))));
        assert!(matches!(g.neighbors("a", 0), Err(GraphError::InvalidHop)));
    }

    #[test]
    fn restricted_edges_keep_nodes() {
        let g = path_graph();
        let keep: BTreeSet<Edge> = [Edge::new("a", "b").unwrap()].into();
        let h = g.with_edges(&keep).unwrap();
        assert_eq!(h.node_count(), 3);
        assert_eq!(h.degree("c").unwrap(), 0);
        let foreign: BTreeSet<Edge> = [Edge::new("a", "c").unwrap()].into();
        assert!(g.with_edges(&foreign).is_err());
    }
}
