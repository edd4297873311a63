use std::collections::BTreeMap;

use crate::graph::TextAttributedGraph;
use crate::scalar::{RealScalar, Scalar};

use super::{NodeRef, Vocabulary};

/// Fraction of the nodes of `graphs` that have an ID. Zero when the graphs
/// have no nodes.
pub fn coverage<S: Scalar>(vocab: &Vocabulary, graphs: &[&TextAttributedGraph]) -> S {
    let mut total = 0usize;
    let mut covered = 0usize;
    for g in graphs {
        for node in g.nodes() {
            total += 1;
            if vocab.get(&NodeRef::new(g.graph_id(), node.node_id.clone())).is_some() {
                covered += 1;
            }
        }
    }
    if total == 0 {
        S::zero()
    } else {
        S::from_count(covered) / S::from_count(total)
    }
}

/// Occurrences of each token over all IDs.
pub fn token_counts(vocab: &Vocabulary) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for id in vocab.entries().values() {
        for t in id.tokens() {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

/// Shannon entropy in bits of a count distribution.
pub(crate) fn entropy_of_counts<S: RealScalar>(counts: impl IntoIterator<Item = usize>) -> S {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return S::zero();
    }
    let n = S::from_count(total);
    let weighted: S = counts
        .into_iter()
        .map(|c| {
            let c = S::from_count(c);
            c * c.log2()
        })
        .sum();
    let h = n.log2() - weighted / n;
    // -0.0 for a single token type
    h.max(S::zero())
}

/// Entropy in bits of the token distribution over all IDs.
pub fn entropy<S: RealScalar>(vocab: &Vocabulary) -> S {
    entropy_of_counts(token_counts(vocab).into_values())
}
