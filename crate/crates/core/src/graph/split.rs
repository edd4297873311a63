use std::collections::{BTreeSet, HashMap};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Edge, GraphError, TextAttributedGraph};
use crate::seed::rng_for;

/// Transductive link split: every node touched by a test edge keeps at
/// least one training edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSplit {
    pub train_edges: BTreeSet<Edge>,
    pub test_edges: BTreeSet<Edge>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSplit {
    pub folds: Vec<BTreeSet<String>>,
    pub seed: u64,
}

impl NodeSplit {
    /// Training nodes for fold `i`: every fold except the `i`-th.
    pub fn train_for(&self, i: usize) -> BTreeSet<&str> {
        self.folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().map(String::as_str))
            .collect()
    }
}

/// Hold out `round(test_fraction * |E|)` edges.
pub fn split_links(
    graph: &TextAttributedGraph,
    test_fraction: Ratio<u64>,
    seed: u64,
) -> Result<LinkSplit, GraphError> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    if test_fraction <= zero || test_fraction >= one {
        return Err(GraphError::InvalidParameter(format!(
            "test fraction {test_fraction} is outside (0, 1)"
        )));
    }
    if graph.edge_count() < 2 {
        return Err(GraphError::DegenerateGraph(format!(
            "{} edges cannot be split",
            graph.edge_count()
        )));
    }
    let target = (test_fraction * graph.edge_count() as u64).round().to_integer() as usize;

    let mut order: Vec<&Edge> = graph.edges().iter().collect();
    order.shuffle(&mut rng_for(seed, &["split_links", graph.graph_id()]));

    let mut degree: HashMap<&str, usize> = HashMap::new();
    for e in graph.edges() {
        let (a, b) = e.endpoints();
        *degree.entry(a).or_default() += 1;
        *degree.entry(b).or_default() += 1;
    }
    let mut test_edges = BTreeSet::new();
    for edge in order {
        if test_edges.len() == target {
            break;
        }
        let (a, b) = edge.endpoints();
        if degree[a] > 1 && degree[b] > 1 {
            *degree.get_mut(a).unwrap() -= 1;
            *degree.get_mut(b).unwrap() -= 1;
            test_edges.insert(edge.clone());
        }
    }
    if test_edges.len() < target {
        return Err(GraphError::DegenerateGraph(format!(
            "only {} of {} test edges can be held out while keeping their endpoints connected",
            test_edges.len(),
            target
        )));
    }
    let train_edges = graph.edges().difference(&test_edges).cloned().collect();
    Ok(LinkSplit {
        train_edges,
        test_edges,
        seed,
    })
}

/// Partition the labeled nodes into `k` folds whose sizes differ by at most one.
pub fn kfold_nodes(graph: &TextAttributedGraph, k: usize, seed: u64) -> Result<NodeSplit, GraphError> {
    if k < 2 {
        return Err(GraphError::InvalidParameter(format!("k = {k}, need at least 2 folds")));
    }
    let mut labeled: Vec<&str> = graph.labeled_nodes().map(|n| n.node_id.as_str()).collect();
    if labeled.len() < k {
        return Err(GraphError::TooFewLabeledNodes {
            labeled: labeled.len(),
            k,
        });
    }
    labeled.shuffle(&mut rng_for(seed, &["kfold", graph.graph_id()]));
    let mut folds = vec![BTreeSet::new(); k];
    for (i, id) in labeled.into_iter().enumerate() {
        folds[i % k].insert(id.to_owned());
    }
    Ok(NodeSplit { folds, seed })
}
