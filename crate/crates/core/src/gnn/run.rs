use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_neighbors, GnnConfig, GnnError, LayerState, NodeFailure, TemplateRegistry};
use crate::gateway::{CompletionRequest, Gateway, GatewayError};
use crate::graph::TextAttributedGraph;
use crate::seed::rng_for;

/// How neighbor lists are perturbed before prompt assembly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Permutation {
    None,
    /// Shuffle each neighbor list.
    ShuffleNodes { seed: u64 },
    /// Prefix each neighbor with a `<p{k}>` position token, then shuffle.
    ShuffleTokens { seed: u64 },
}

/// All layer states `0..=L` of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnTrace {
    pub graph_id: String,
    pub states: Vec<LayerState>,
}

impl GnnTrace {
    /// Final textual representations.
    pub fn final_reprs(&self) -> &BTreeMap<String, String> {
        &self.states.last().expect("trace holds at least the initial state").reprs
    }

    pub fn layers(&self) -> usize {
        self.states.len() - 1
    }

    /// Representations of one node, layer 0 first.
    pub fn history(&self, node_id: &str) -> Vec<&str> {
        self.states
            .iter()
            .filter_map(|s| s.reprs.get(node_id).map(String::as_str))
            .collect()
    }
}

/// Replays the sample/aggregate/update loop of a GNN with a language
/// model as the update operator.
pub struct PromptGnn<'a> {
    gateway: &'a Gateway,
    templates: &'a TemplateRegistry,
    config: &'a GnnConfig,
    model_id: String,
}

type NodeOutcome = (String, Result<(String, Vec<String>), NodeFailure>);

fn failure(node_id: &str, error: GatewayError) -> NodeFailure {
    NodeFailure {
        node_id: node_id.to_owned(),
        budget_exceeded: matches!(error, GatewayError::BudgetExceeded { .. }),
        reason: error.to_string(),
    }
}

impl<'a> PromptGnn<'a> {
    pub fn new(
        gateway: &'a Gateway,
        templates: &'a TemplateRegistry,
        config: &'a GnnConfig,
        model_id: impl Into<String>,
    ) -> Result<Self, GnnError> {
        config.validate()?;
        Ok(Self {
            gateway,
            templates,
            config,
            model_id: model_id.into(),
        })
    }

    fn finish(
        &self,
        layer: usize,
        results: Vec<NodeOutcome>,
    ) -> Result<LayerState, GnnError> {
        let mut state = LayerState {
            layer,
            reprs: BTreeMap::new(),
            provenance: BTreeMap::new(),
        };
        let mut failures = Vec::new();
        for (node, result) in results {
            match result {
                Ok((text, nbrs)) => {
                    state.reprs.insert(node.clone(), text);
                    state.provenance.insert(node, nbrs);
                }
                Err(f) => failures.push(f),
            }
        }
        if failures.is_empty() {
            Ok(state)
        } else {
            Err(GnnError::LayerFailed { layer, failures })
        }
    }

    fn complete_within(&self, node_id: &str, prompt: String, budget: usize, tag: &str) -> Result<String, NodeFailure> {
        let request = CompletionRequest::new(self.model_id.clone(), prompt, budget, tag)
            .map_err(|e| failure(node_id, e))?;
        let text = self.gateway.complete(&request).map_err(|e| failure(node_id, e))?;
        let tokenizer = self.gateway.tokenizer();
        let kept = tokenizer.truncate(text.trim(), budget).trim();
        if tokenizer.count(kept) == 0 {
            return Err(NodeFailure {
                node_id: node_id.to_owned(),
                reason: "completion has no tokens".into(),
                budget_exceeded: false,
            });
        }
        Ok(kept.to_owned())
    }

    /// Layer 0: summarize each node's raw text.
    pub fn initialize_features(&self, graph: &TextAttributedGraph) -> Result<LayerState, GnnError> {
        let template = self.templates.init_for(graph.domain_tag());
        let tokenizer = self.gateway.tokenizer();
        let window = self.gateway.config().context_window;
        let results = graph
            .nodes()
            .par_iter()
            .map(|node| {
                let prompt = template.render(&node.raw_text, tokenizer, window);
                let outcome = self
                    .complete_within(&node.node_id, prompt, self.config.init_budget_tokens, "init")
                    .map(|text| (text, Vec::new()));
                (node.node_id.clone(), outcome)
            })
            .collect();
        self.finish(0, results)
    }

    /// One synchronous layer: every prompt reads only `prev`.
    pub fn run_layer(&self, graph: &TextAttributedGraph, prev: &LayerState) -> Result<LayerState, GnnError> {
        self.run_layer_permuted(graph, prev, Permutation::None)
    }

    pub fn run_layer_permuted(
        &self,
        graph: &TextAttributedGraph,
        prev: &LayerState,
        permutation: Permutation,
    ) -> Result<LayerState, GnnError> {
        let layer = prev.layer + 1;
        if layer > self.config.layers {
            return Err(GnnError::InvalidConfig(format!(
                "layer {layer} exceeds configured depth {}",
                self.config.layers
            )));
        }
        if let Some(missing) = graph.nodes().iter().find(|n| !prev.reprs.contains_key(&n.node_id)) {
            return Err(GnnError::IncompleteState {
                layer: prev.layer,
                node_id: missing.node_id.clone(),
            });
        }
        let budget = self.config.layer_budget(layer);
        let tag = format!("layer{layer}");
        let results = graph
            .nodes()
            .par_iter()
            .map(|node| {
                let id = node.node_id.as_str();
                let outcome = sample_neighbors(graph, id, self.config, layer)
                    .map_err(|e| NodeFailure {
                        node_id: id.to_owned(),
                        reason: e.to_string(),
                        budget_exceeded: false,
                    })
                    .and_then(|sampled| {
                        let texts = neighbor_texts(graph.graph_id(), id, layer, &sampled, prev, permutation);
                        let prompt = self.templates.build_agg_prompt(&prev.reprs[id], &texts, budget);
                        let text = self.complete_within(id, prompt, budget, &tag)?;
                        Ok((text, sampled.into_iter().map(str::to_owned).collect()))
                    });
                (id.to_owned(), outcome)
            })
            .collect();
        self.finish(layer, results)
    }

    /// Full run: initialization followed by `config.layers` layers.
    pub fn run(&self, graph: &TextAttributedGraph) -> Result<GnnTrace, GnnError> {
        self.permuted_run(graph, Permutation::None)
    }

    pub fn permuted_run(&self, graph: &TextAttributedGraph, permutation: Permutation) -> Result<GnnTrace, GnnError> {
        let mut states = vec![self.initialize_features(graph)?];
        for _ in 0..self.config.layers {
            let next = self.run_layer_permuted(graph, states.last().expect("non-empty"), permutation)?;
            states.push(next);
        }
        Ok(GnnTrace {
            graph_id: graph.graph_id().to_owned(),
            states,
        })
    }
}

fn neighbor_texts(
    graph_id: &str,
    node: &str,
    layer: usize,
    sampled: &[&str],
    prev: &LayerState,
    permutation: Permutation,
) -> Vec<String> {
    let mut texts: Vec<String> = sampled.iter().map(|n| prev.reprs[*n].clone()).collect();
    let layer_tag = layer.to_string();
    match permutation {
        Permutation::None => {}
        Permutation::ShuffleNodes { seed } => {
            texts.shuffle(&mut rng_for(seed, &["shuffle_nodes", graph_id, node, &layer_tag]));
        }
        Permutation::ShuffleTokens { seed } => {
            for (k, text) in texts.iter_mut().enumerate() {
                *text = format!("<p{}>{}", k + 1, text);
            }
            texts.shuffle(&mut rng_for(seed, &["shuffle_tokens", graph_id, node, &layer_tag]));
        }
    }
    texts
}
