mod common;

use std::collections::{BTreeSet, VecDeque};

use num_rational::Ratio;
use tagflow::graph::{kfold_nodes, split_links, Edge, LinkSplit};

fn bfs_frontier(edges: &BTreeSet<Edge>, start: &str, hop: usize) -> BTreeSet<String> {
    let mut dist = std::collections::BTreeMap::from([(start.to_owned(), 0usize)]);
    let mut queue = VecDeque::from([start.to_owned()]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for e in edges {
            if let Some(w) = e.other(&v) {
                if !dist.contains_key(w) {
                    dist.insert(w.to_owned(), d + 1);
                    queue.push_back(w.to_owned());
                }
            }
        }
    }
    dist.into_iter().filter(|(_, d)| *d == hop).map(|(v, _)| v).collect()
}

#[test]
fn toy_fixture_shape() {
    let g = common::toy();
    assert_eq!(g.node_count(), 12);
    assert_eq!(g.edge_count(), 16, "the reversed duplicate collapses");
    assert_eq!(g.classes().len(), 3);
    assert_eq!(g.degree("n12").unwrap(), 0);
    assert!(g.node("n1").unwrap().raw_text.contains('\n'));
}

#[test]
fn toy_neighbors_match_bfs() {
    let g = common::toy();
    for n in g.nodes() {
        for hop in [1, 2] {
            let got: BTreeSet<String> = g.neighbors(&n.node_id, hop).unwrap().into_iter().map(str::to_owned).collect();
            assert_eq!(got, bfs_frontier(g.edges(), &n.node_id, hop), "{} hop {hop}", n.node_id);
        }
    }
    let n3: Vec<&str> = g.neighbors("n3", 2).unwrap().into_iter().collect();
    assert_eq!(n3, ["n10", "n5"]);
}

#[test]
fn toy_link_split_matches_golden() {
    let g = common::toy();
    let split = split_links(&g, Ratio::new(1, 4), 1).unwrap();
    assert_eq!(split.test_edges.len(), 4);
    assert!(split.train_edges.is_disjoint(&split.test_edges));
    let union: BTreeSet<Edge> = split.train_edges.union(&split.test_edges).cloned().collect();
    assert_eq!(&union, g.edges());
    for e in &split.test_edges {
        let (a, b) = e.endpoints();
        assert!(split.train_edges.iter().any(|t| t.touches(a)), "{a} lost every training edge");
        assert!(split.train_edges.iter().any(|t| t.touches(b)), "{b} lost every training edge");
    }
    let path = common::manifest_dir().join("goldens/splits/toy_quarter_seed1.json");
    if std::env::var_os("TAGFLOW_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&split).unwrap() + "\n").unwrap();
    }
    let golden: LinkSplit = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(split, golden);
    assert_eq!(split_links(&g, Ratio::new(1, 4), 1).unwrap(), split);
}

#[test]
fn toy_kfold_partitions_labeled_nodes() {
    let g = common::toy();
    let split = kfold_nodes(&g, 3, 5).unwrap();
    assert_eq!(split.folds.len(), 3);
    let mut seen = BTreeSet::new();
    for f in &split.folds {
        assert_eq!(f.len(), 4);
        for n in f {
            assert!(seen.insert(n.clone()), "{n} is in two folds");
        }
    }
    let labeled: BTreeSet<String> = g.labeled_nodes().map(|n| n.node_id.clone()).collect();
    assert_eq!(seen, labeled);
    assert_eq!(kfold_nodes(&g, 3, 5).unwrap(), split);
}
