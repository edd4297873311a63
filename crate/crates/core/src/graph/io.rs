use std::fs;
use std::path::{Path, PathBuf};

use super::{GraphError, NodeRecord, TextAttributedGraph};
use crate::fsutil::write_atomic;

/// Paths of the tab-separated files describing one graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphFiles {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub labels: Option<PathBuf>,
}

impl GraphFiles {
    /// Conventional layout: `nodes.tsv`, `edges.tsv` and `labels.tsv` in `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            nodes: dir.join("nodes.tsv"),
            edges: dir.join("edges.tsv"),
            labels: Some(dir.join("labels.tsv")),
        }
    }
}

/// Escape tabs, newlines and backslashes so a text fits on one TSV line.
pub fn escape_field(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn read(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_owned(),
        source,
    })
}

fn pairs(path: &Path) -> Result<Vec<(String, String)>, GraphError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line.split_once('\t').ok_or_else(|| GraphError::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: "expected two tab-separated fields".into(),
        })?;
        out.push((a.to_owned(), b.to_owned()));
    }
    Ok(out)
}

/// Load a graph from node, edge and optional label files. Node order
/// follows the node file.
pub fn load_graph(
    graph_id: &str,
    files: &GraphFiles,
    domain_tag: &str,
) -> Result<TextAttributedGraph, GraphError> {
    let mut nodes: Vec<NodeRecord> = pairs(&files.nodes)?
        .into_iter()
        .map(|(id, text)| NodeRecord::new(id, unescape_field(&text)))
        .collect();
    let edges = pairs(&files.edges)?;
    if let Some(label_path) = &files.labels {
        let position: std::collections::HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.node_id.as_str(), i))
            .collect();
        let mut assigned = Vec::new();
        for (id, class) in pairs(label_path)? {
            let i = *position.get(id.as_str()).ok_or(GraphError::MissingNode(id))?;
            assigned.push((i, class));
        }
        for (i, class) in assigned {
            nodes[i].label = Some(class);
        }
    }
    TextAttributedGraph::new(graph_id, domain_tag, nodes, edges)
}

/// Write the graph as TSV files. Returns the paths written.
pub fn write_graph(graph: &TextAttributedGraph, dir: &Path) -> std::io::Result<GraphFiles> {
    fs::create_dir_all(dir)?;
    let files = GraphFiles::in_dir(dir);
    let mut nodes = String::new();
    let mut labels = String::new();
    for n in graph.nodes() {
        nodes.push_str(&format!("{}\t{}\n", n.node_id, escape_field(&n.raw_text)));
        if let Some(label) = &n.label {
            labels.push_str(&format!("{}\t{}\n", n.node_id, label));
        }
    }
    let edges: String = graph.edges().iter().map(|e| format!("{e}\n")).collect();
    write_atomic(&files.nodes, nodes.as_bytes())?;
    write_atomic(&files.edges, edges.as_bytes())?;
    write_atomic(files.labels.as_ref().expect("in_dir sets labels"), labels.as_bytes())?;
    Ok(files)
}
