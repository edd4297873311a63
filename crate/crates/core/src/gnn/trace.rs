use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GnnError, GnnTrace, LayerState};
use crate::fsutil::write_atomic;

/// One line of a trace file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub node_id: String,
    pub layer: usize,
    pub text: String,
    pub neighbor_ids: Vec<String>,
}

impl GnnTrace {
    /// Records ordered by (node id, layer).
    pub fn records(&self) -> Vec<TraceRecord> {
        let mut out = Vec::new();
        let nodes = self.states.first().map(|s| s.reprs.keys()).into_iter().flatten();
        for node in nodes {
            for state in &self.states {
                out.push(TraceRecord {
                    node_id: node.clone(),
                    layer: state.layer,
                    text: state.reprs[node].clone(),
                    neighbor_ids: state.provenance.get(node).cloned().unwrap_or_default(),
                });
            }
        }
        out
    }

    pub fn from_records(graph_id: impl Into<String>, records: Vec<TraceRecord>) -> Result<Self, GnnError> {
        let mut by_layer: BTreeMap<usize, LayerState> = BTreeMap::new();
        for r in records {
            let state = by_layer.entry(r.layer).or_insert_with(|| LayerState {
                layer: r.layer,
                reprs: BTreeMap::new(),
                provenance: BTreeMap::new(),
            });
            if state.reprs.insert(r.node_id.clone(), r.text).is_some() {
                return Err(GnnError::TraceFormat(format!(
                    "duplicate record for node `{}` at layer {}",
                    r.node_id, r.layer
                )));
            }
            state.provenance.insert(r.node_id, r.neighbor_ids);
        }
        let states: Vec<LayerState> = by_layer.into_values().collect();
        if states.is_empty() {
            return Err(GnnError::TraceFormat("trace is empty".into()));
        }
        for (i, s) in states.iter().enumerate() {
            if s.layer != i {
                return Err(GnnError::TraceFormat(format!("layer {i} is missing")));
            }
            if s.reprs.len() != states[0].reprs.len() || !s.reprs.keys().eq(states[0].reprs.keys()) {
                return Err(GnnError::TraceFormat(format!("layer {i} covers a different node set")));
            }
        }
        Ok(GnnTrace {
            graph_id: graph_id.into(),
            states,
        })
    }
}

pub fn write_trace(trace: &GnnTrace, path: &Path) -> std::io::Result<()> {
    let mut out = String::new();
    for record in trace.records() {
        out.push_str(&serde_json::to_string(&record).map_err(std::io::Error::other)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_trace(graph_id: &str, path: &Path) -> Result<GnnTrace, GnnError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GnnError::TraceFormat(format!("{}: {e}", path.display())))?;
    let records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| GnnError::TraceFormat(format!("line {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<TraceRecord>, _>>()?;
    GnnTrace::from_records(graph_id, records)
}
