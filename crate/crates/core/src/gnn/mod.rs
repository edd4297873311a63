//! Prompt-based message passing over text-attributed graphs.
//!
//! Node representations are texts. Layer 0 summarizes each node's raw
//! text; layer `l` asks the language model to aggregate the layer `l-1`
//! texts of a node and its sampled neighbors. Updates are synchronous and
//! the final representation is the last layer's text.

mod config;
mod prompts;
mod run;
mod sampling;
mod trace;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphError;

pub use config::{GnnConfig, SampleRatio};
pub use prompts::{
    build_agg_prompt_with, InitTemplate, TemplateRegistry, AGGREGATE_TEMPLATE, CONTRASTIVE_CLAUSE,
    GENERIC_TEMPLATE, PAPER_TEMPLATE, PAPER_TITLE_ONLY_TEMPLATE, PRODUCT_TEMPLATE,
};
pub use run::{GnnTrace, Permutation, PromptGnn};
pub use sampling::{sample_neighbors, sample_size};
pub use trace::{read_trace, write_trace, TraceRecord};

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("layer {layer} state has no representation for node `{node_id}`")]
    IncompleteState { layer: usize, node_id: String },
    #[error("layer {layer}: {} node(s) failed, first: {}", failures.len(), failures.first().map(|f| f.reason.as_str()).unwrap_or(""))]
    LayerFailed { layer: usize, failures: Vec<NodeFailure> },
    #[error("trace file: {0}")]
    TraceFormat(String),
}

impl GnnError {
    pub fn budget_exceeded(&self) -> bool {
        matches!(self, GnnError::LayerFailed { failures, .. } if failures.iter().any(|f| f.budget_exceeded))
    }
}

/// A node whose completion could not be obtained. Successful completions
/// of the same layer are cached, so rerunning only retries these.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeFailure {
    pub node_id: String,
    pub reason: String,
    pub budget_exceeded: bool,
}

/// Representations of every node after one layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerState {
    pub layer: usize,
    pub reprs: BTreeMap<String, String>,
    /// Neighbors aggregated by each node at this layer (empty at layer 0).
    pub provenance: BTreeMap<String, Vec<String>>,
}
