#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tagflow::gnn::{InitTemplate, TemplateRegistry};
use tagflow::graph::{load_graph, GraphFiles, NodeRecord, TextAttributedGraph};
use tagflow::instruct::{adaptive_prefix, Forge, PromptPool, TaskKind};
use tagflow::text::WordTokenizer;
use tagflow::vocab::{build_vocabulary, Vocabulary};

pub fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

pub fn toy_dir() -> PathBuf {
    manifest_dir().join("fixtures/toy")
}

pub fn toy() -> TextAttributedGraph {
    load_graph("toy", &GraphFiles::in_dir(toy_dir()), "computer-science").unwrap()
}

pub fn golden(name: &str) -> String {
    let path = manifest_dir().join("goldens/prompts").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// a-b-c-d-e path with f hanging off c; one word per node.
pub fn greek() -> (TextAttributedGraph, Vocabulary) {
    let words = [
        ("a", "alpha", "x"),
        ("b", "beta", "x"),
        ("c", "gamma", "y"),
        ("d", "delta", "y"),
        ("e", "epsilon", "z"),
        ("f", "zeta", "z"),
    ];
    let nodes: Vec<NodeRecord> = words.iter().map(|(id, w, l)| NodeRecord::new(*id, *w).with_label(*l)).collect();
    let edges = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("c", "f")];
    let g = TextAttributedGraph::new("greek", "computer-science", nodes, edges).unwrap();
    let reprs: BTreeMap<String, String> = words.iter().map(|(id, w, _)| (id.to_string(), w.to_string())).collect();
    let v = build_vocabulary(&reprs, &WordTokenizer, 10, "greek").unwrap();
    (g, v)
}

/// (golden file, freshly rendered prompt) for every prompt kind.
pub fn rendered_prompts() -> Vec<(&'static str, String)> {
    let registry = TemplateRegistry::default();
    let paper = InitTemplate::paper();
    let tok = WordTokenizer;
    let (g, v) = greek();
    let pool = PromptPool::default();
    let forge = Forge::new(&g, &v, &pool).with_variant(Some(0));
    vec![
        (
            "init_paper.txt",
            paper.render(
                "Attention layers for sequence models\nNeural attention replaces recurrence for translation",
                &tok,
                128_000,
            ),
        ),
        ("init_title_only.txt", paper.render("Attention layers for sequence models", &tok, 128_000)),
        ("agg_2nbr.txt", registry.build_agg_prompt("x", &["a".into(), "b".into()], 60)),
        ("agg_empty.txt", registry.build_agg_prompt("x", &[], 12)),
        ("nc_canonical.txt", forge.node_classification("c", 3).unwrap().text),
        ("glp_canonical.txt", forge.generative_lp("c", "d", 3).unwrap().text),
        ("dlp_canonical.txt", forge.discriminative_lp("c", "d", "a", 3).unwrap().text),
        ("nd_canonical.txt", forge.make_nd(3).unwrap().text),
        ("ld_canonical.txt", forge.make_ld(3).unwrap().text),
        (
            "adaptive_prefix.txt",
            adaptive_prefix("e-commerce", "biomedical", &[TaskKind::NodeClassification, TaskKind::GenerativeLp])
                .unwrap(),
        ),
    ]
}
