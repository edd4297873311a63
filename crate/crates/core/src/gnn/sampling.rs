use rand::seq::index;

use super::{GnnConfig, GnnError, SampleRatio};
use crate::graph::TextAttributedGraph;
use crate::seed::rng_for;

/// `min(cap, max(1, ceil(ratio * degree)))` for non-isolated nodes, 0 otherwise.
pub fn sample_size(degree: usize, ratio: SampleRatio, cap: usize) -> usize {
    if degree == 0 {
        return 0;
    }
    let scaled = (ratio.ratio() * degree as u64).ceil().to_integer() as usize;
    scaled.max(1).min(cap).min(degree)
}

/// Neighbors aggregated by `node` at `layer`, sampled without replacement
/// and returned in ascending id order. Deterministic in
/// `(config.seed, graph id, node, layer)`.
pub fn sample_neighbors<'g>(
    graph: &'g TextAttributedGraph,
    node: &str,
    config: &GnnConfig,
    layer: usize,
) -> Result<Vec<&'g str>, GnnError> {
    let adjacent = graph.adjacent(node)?;
    let k = sample_size(adjacent.len(), config.sample_ratio, config.neighbor_cap);
    if k == adjacent.len() {
        return Ok(adjacent);
    }
    let layer_tag = layer.to_string();
    let mut rng = rng_for(config.seed, &["sample_neighbors", graph.graph_id(), node, &layer_tag]);
    let mut picked = index::sample(&mut rng, adjacent.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| adjacent[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeRecord;

    fn star(leaves: usize) -> TextAttributedGraph {
        let mut nodes = vec![NodeRecord::new("hub", "h")];
        nodes.extend((0..leaves).map(|i| NodeRecord::new(format!("l{i:03}"), "x")));
        let edges: Vec<_> = (0..leaves).map(|i| ("hub".to_owned(), format!("l{i:03}"))).collect();
        TextAttributedGraph::new("star", "t", nodes, edges).unwrap()
    }

    fn ratio(s: &str) -> SampleRatio {
        s.parse().unwrap()
    }

    #[test]
    fn size_law_examples() {
        assert_eq!(sample_size(10, ratio("0.6"), 20), 6);
        assert_eq!(sample_size(50, ratio("1.0"), 20), 20);
        assert_eq!(sample_size(0, ratio("0.6"), 20), 0);
        assert_eq!(sample_size(1, ratio("0.3"), 20), 1);
        assert_eq!(sample_size(10, ratio("0.3"), 20), 3);
    }

    #[test]
    fn sampled_lists_are_sorted_unique_and_stable() {
        let g = star(50);
        let config = GnnConfig { sample_ratio: ratio("0.6"), ..GnnConfig::default() };
        let a = sample_neighbors(&g, "hub", &config, 1).unwrap();
        assert_eq!(a.len(), 20);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a, sample_neighbors(&g, "hub", &config, 1).unwrap());
        assert_ne!(a, sample_neighbors(&g, "hub", &config, 2).unwrap(), "resampled per layer");
        assert_eq!(sample_neighbors(&g, "l000", &config, 1).unwrap(), ["hub"]);
        assert!(matches!(sample_neighbors(&g, "nope", &config, 1), Err(GnnError::Graph(_))));
    }
}
