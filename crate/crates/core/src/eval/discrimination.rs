use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::gnn::GnnTrace;
use crate::graph::TextAttributedGraph;
use crate::scalar::RealScalar;
use crate::seed::rng_for;
use crate::text::Tokenizer;

/// Graphs up to this size compare against every disconnected pair.
pub const FULL_ENUMERATION_MAX_NODES: usize = 20;

pub trait Embedder<S> {
    fn embed(&self, text: &str) -> Vec<S>;
}

/// Token-indicator vectors over a fixed token index.
pub struct BagOfTokens {
    tokenizer: Arc<dyn Tokenizer>,
    index: BTreeMap<String, usize>,
}

impl BagOfTokens {
    /// Index every token appearing in `texts`.
    pub fn fit<'a>(texts: impl IntoIterator<Item = &'a str>, tokenizer: Arc<dyn Tokenizer>) -> Self {
        let tokens: BTreeSet<String> = texts.into_iter().flat_map(|t| tokenizer.tokenize(t)).collect();
        let index = tokens.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
        Self { tokenizer, index }
    }

    /// Index every representation of every layer of `trace`.
    pub fn fit_trace(trace: &GnnTrace, tokenizer: Arc<dyn Tokenizer>) -> Self {
        Self::fit(
            trace.states.iter().flat_map(|s| s.reprs.values().map(String::as_str)),
            tokenizer,
        )
    }

    pub fn dimension(&self) -> usize {
        self.index.len()
    }
}

impl<S: RealScalar> Embedder<S> for BagOfTokens {
    fn embed(&self, text: &str) -> Vec<S> {
        let mut v = vec![S::zero(); self.index.len()];
        for t in self.tokenizer.tokenize(text) {
            if let Some(&i) = self.index.get(&t) {
                v[i] = S::one();
            }
        }
        v
    }
}

/// Cosine similarity; `None` when either vector is zero.
pub fn cosine<S: RealScalar>(a: &[S], b: &[S]) -> Option<S> {
    let dot: S = a.iter().zip(b).map(|(x, y)| *x * *y).sum();
    let na: S = a.iter().map(|x| *x * *x).sum::<S>().sqrt();
    let nb: S = b.iter().map(|x| *x * *x).sum::<S>().sqrt();
    (na > S::zero() && nb > S::zero()).then(|| dot / (na * nb))
}

pub type NodePairs = Vec<(String, String)>;

/// Connected pairs (every edge) and disconnected pairs: all of them on
/// small graphs, otherwise a seeded sample the size of the edge set.
pub fn pair_sets(graph: &TextAttributedGraph, seed: u64) -> (NodePairs, NodePairs) {
    let connected: Vec<(String, String)> = graph
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = e.endpoints();
            (a.to_owned(), b.to_owned())
        })
        .collect();
    let ids: Vec<&str> = graph.nodes().iter().map(|n| n.node_id.as_str()).collect();
    let n = ids.len();
    let available = n * n.saturating_sub(1) / 2 - connected.len();
    let mut disconnected = BTreeSet::new();
    if n <= FULL_ENUMERATION_MAX_NODES || available <= connected.len() {
        for i in 0..n {
            for j in i + 1..n {
                if !graph.has_edge(ids[i], ids[j]) {
                    disconnected.insert(ordered(ids[i], ids[j]));
                }
            }
        }
    } else {
        let mut rng = rng_for(seed, &["disconnected_pairs", graph.graph_id()]);
        while disconnected.len() < connected.len() {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j && !graph.has_edge(ids[i], ids[j]) {
                disconnected.insert(ordered(ids[i], ids[j]));
            }
        }
    }
    (connected, disconnected.into_iter().collect())
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationRow<S> {
    pub layer: usize,
    pub mean_sim_connected: S,
    pub mean_sim_disconnected: S,
    pub margin: S,
    pub connected_pairs: usize,
    pub disconnected_pairs: usize,
}

/// Mean cosine similarity of connected and disconnected pairs at every
/// layer of `trace`, computed on that layer's representations.
pub fn discrimination_report<S: RealScalar>(
    trace: &GnnTrace,
    connected: &[(String, String)],
    disconnected: &[(String, String)],
    embedder: &dyn Embedder<S>,
) -> Result<Vec<DiscriminationRow<S>>, EvalError> {
    if connected.is_empty() {
        return Err(EvalError::EmptyPairSet("connected"));
    }
    if disconnected.is_empty() {
        return Err(EvalError::EmptyPairSet("disconnected"));
    }
    let mut rows = Vec::with_capacity(trace.states.len());
    for state in &trace.states {
        let mut vectors: BTreeMap<String, Vec<S>> = BTreeMap::new();
        let mut mean = |pairs: &[(String, String)]| -> Result<S, EvalError> {
            let mut total = S::zero();
            for (a, b) in pairs {
                for node in [a, b] {
                    if !vectors.contains_key(node.as_str()) {
                        let text = state.reprs.get(node).ok_or_else(|| EvalError::DegenerateEmbedding {
                            node: node.clone(),
                            layer: state.layer,
                        })?;
                        vectors.insert(node.clone(), embedder.embed(text));
                    }
                }
                let sim = cosine(&vectors[a.as_str()], &vectors[b.as_str()]).ok_or_else(|| {
                    let zero = if vectors[a.as_str()].iter().all(|x| *x == S::zero()) { a } else { b };
                    EvalError::DegenerateEmbedding {
                        node: zero.clone(),
                        layer: state.layer,
                    }
                })?;
                total = total + sim;
            }
            Ok(total / S::from_count(pairs.len()))
        };
        let c = mean(connected)?;
        let d = mean(disconnected)?;
        rows.push(DiscriminationRow {
            layer: state.layer,
            mean_sim_connected: c,
            mean_sim_disconnected: d,
            margin: c - d,
            connected_pairs: connected.len(),
            disconnected_pairs: disconnected.len(),
        });
    }
    Ok(rows)
}
