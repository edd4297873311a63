//! One line per acceptance criterion, each with an independent oracle.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use tagflow::decoder::{
    decode_beam_counted, decode_greedy, decode_greedy_counted, BeamOptions, FnScorer, PrefixTree,
};
use tagflow::eval::{accuracy, hr_at_1, macro_f1, permutation_report, PredictionRecord};
use tagflow::gateway::{Gateway, GatewayConfig, ResponseCache};
use tagflow::gnn::{sample_neighbors, sample_size, GnnConfig, Permutation, PromptGnn, SampleRatio, TemplateRegistry};
use tagflow::graph::{write_graph, NodeRecord, TextAttributedGraph};
use tagflow::instruct::{read_corpus, CorpusRecord, PromptPool, TaskKind};
use tagflow::pipeline::{
    cmd_decode, cmd_eval, cmd_instruct, cmd_understand, cmd_vocab, GraphSplit, Overrides, PipelineConfig, Workspace,
};
use tagflow::text::WordTokenizer;
use tagflow::vocab::{build_vocabulary, coverage, deserialize, entropy, merge, token_counts, NodeRef, Vocabulary};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn words(rng: &mut ChaCha8Rng, alphabet: usize, min: usize, max: usize) -> Vec<String> {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| format!("w{}", rng.gen_range(0..alphabet))).collect()
}

/// Candidate IDs over a small alphabet so that prefixes nest often.
fn random_candidates(rng: &mut ChaCha8Rng, n: usize) -> Vec<(NodeRef, Vec<String>)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let id = words(rng, 4, 1, 4);
        if seen.insert(id.clone()) {
            out.push((NodeRef::new("g", format!("n{}", out.len())), id));
        }
    }
    out
}

fn hashed_score(salt: u64, prefix: &[&str], token: &str) -> f64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    (salt, prefix, token).hash(&mut h);
    -((h.finish() % 10_000) as f64) / 1000.0
}

fn decoder_soundness() -> Check {
    let mut r = rng(11);
    let mut hallucinations = 0;
    for trial in 0..1000u64 {
        let n = r.gen_range(1..=40);
        let cands = random_candidates(&mut r, n);
        let tree = PrefixTree::from_candidates(WordTokenizer::ID, cands.clone()).map_err(|e| e.to_string())?;
        let scorer = FnScorer(move |p: &[&str], allowed: &[&str]| {
            allowed.iter().map(|t| hashed_score(trial, p, t)).collect::<Vec<f64>>()
        });
        let out = decode_greedy(&tree, &scorer).map_err(|e| e.to_string())?;
        let member = cands.iter().any(|(node, toks)| *node == out.node && toks.as_slice() == out.id_tokens());
        if !member {
            hallucinations += 1;
        }
    }
    ensure!(hallucinations == 0, "{hallucinations} outputs outside the candidate set");
    Ok("1000 decodes, 0 outside the candidate set".into())
}

fn decoder_work_bound() -> Check {
    let mut r = rng(12);
    let mut worst_greedy = 0.0f64;
    let mut worst_beam = 0.0f64;
    for trial in 0..100u64 {
        let n = r.gen_range(1..=30);
        let cands = random_candidates(&mut r, n);
        let tree = PrefixTree::from_candidates(WordTokenizer::ID, cands).map_err(|e| e.to_string())?;
        // longest root-to-leaf path, computed independently of max_depth()
        let mut l_max = 0;
        let mut stack = vec![(PrefixTree::ROOT, 0usize)];
        while let Some((at, depth)) = stack.pop() {
            let node = tree.node(at);
            l_max = l_max.max(depth);
            stack.extend(node.children.values().map(|&c| (c, depth + 1)));
        }
        let scorer = FnScorer(move |p: &[&str], allowed: &[&str]| {
            allowed.iter().map(|t| hashed_score(trial, p, t)).collect::<Vec<f64>>()
        });
        let (_, g) = decode_greedy_counted(&tree, &scorer).map_err(|e| e.to_string())?;
        ensure!(g.scorer_calls <= l_max, "greedy used {} calls, L_max {l_max}", g.scorer_calls);
        let (results, b) = decode_beam_counted(&tree, &scorer, BeamOptions::new(n)).map_err(|e| e.to_string())?;
        ensure!(results.len() == n, "full beam returned {} of {n}", results.len());
        ensure!(
            b.child_evaluations <= n * l_max,
            "beam evaluated {} children, bound {}",
            b.child_evaluations,
            n * l_max
        );
        worst_greedy = worst_greedy.max(g.scorer_calls as f64 / l_max as f64);
        worst_beam = worst_beam.max(b.child_evaluations as f64 / (n * l_max) as f64);
    }
    Ok(format!(
        "100 tries, max calls/L_max {worst_greedy:.2}, max evals/(N*L_max) {worst_beam:.2}"
    ))
}

fn mock_gateway(templates: &TemplateRegistry) -> Gateway {
    Gateway::new(
        Arc::new(templates.mock_completer()),
        ResponseCache::in_memory(),
        Arc::new(WordTokenizer),
        GatewayConfig::default(),
    )
}

fn random_graph(r: &mut ChaCha8Rng, id: &str, max_nodes: usize) -> TextAttributedGraph {
    let n = r.gen_range(1..=max_nodes);
    let nodes: Vec<NodeRecord> = (0..n)
        .map(|i| NodeRecord::new(format!("v{i:02}"), words(r, 15, 1, 4).join(" ")))
        .collect();
    let p = r.gen_range(0.05..0.4);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(p) {
                edges.push((format!("v{i:02}"), format!("v{j:02}")));
            }
        }
    }
    TextAttributedGraph::new(id, "misc", nodes, edges).unwrap()
}

fn take_sorted(set: &BTreeSet<String>, budget: usize) -> BTreeSet<String> {
    set.iter().take(budget).cloned().collect()
}

/// Brute-force set propagation: token sets per node after each layer.
fn propagate(g: &TextAttributedGraph, cfg: &GnnConfig) -> BTreeMap<String, BTreeSet<String>> {
    let mut sets: BTreeMap<String, BTreeSet<String>> = g
        .nodes()
        .iter()
        .map(|n| {
            let init: BTreeSet<String> = n
                .raw_text
                .split_whitespace()
                .take(cfg.init_budget_tokens)
                .map(str::to_owned)
                .collect();
            (n.node_id.clone(), init)
        })
        .collect();
    for layer in 1..=cfg.layers {
        let mut next = BTreeMap::new();
        for n in g.nodes() {
            let mut u = sets[&n.node_id].clone();
            for m in sample_neighbors(g, &n.node_id, cfg, layer).unwrap() {
                u.extend(sets[m].iter().cloned());
            }
            next.insert(n.node_id.clone(), take_sorted(&u, cfg.layer_budget(layer)));
        }
        sets = next;
    }
    sets
}

/// Nodes within `hops` of `start`.
fn ball<'g>(g: &'g TextAttributedGraph, start: &'g str, hops: usize) -> BTreeSet<&'g str> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([(start, 0)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == hops {
            continue;
        }
        for e in g.edges() {
            if let Some(w) = e.other(v) {
                if seen.insert(w) {
                    queue.push_back((w, d + 1));
                }
            }
        }
    }
    seen
}

fn mock_gnn_oracle() -> Check {
    let mut r = rng(13);
    let templates = TemplateRegistry::default();
    let ratios = ["1/3", "1/2", "3/5", "1"];
    let mut nodes_checked = 0;
    for trial in 0..50 {
        let g = random_graph(&mut r, &format!("rand{trial}"), 30);
        let layers = r.gen_range(1..=3);
        let unbounded = trial % 2 == 0;
        let cfg = if unbounded {
            GnnConfig {
                layers,
                sample_ratio: SampleRatio::FULL,
                neighbor_cap: 30,
                seed: trial,
                init_budget_tokens: 50,
                layer_budget_tokens: vec![50; layers],
                final_id_max_tokens: 10,
            }
        } else {
            let mut budgets: Vec<usize> = (0..layers).map(|_| r.gen_range(1..=8)).collect();
            budgets.sort_unstable_by(|a, b| b.cmp(a));
            GnnConfig {
                layers,
                sample_ratio: ratios[r.gen_range(0..ratios.len())].parse().unwrap(),
                neighbor_cap: r.gen_range(1..=5),
                seed: trial,
                init_budget_tokens: r.gen_range(1..=4),
                layer_budget_tokens: budgets,
                final_id_max_tokens: 10,
            }
        };
        let gateway = mock_gateway(&templates);
        let gnn = PromptGnn::new(&gateway, &templates, &cfg, "mock").map_err(|e| e.to_string())?;
        let trace = gnn.run(&g).map_err(|e| e.to_string())?;
        let expected = propagate(&g, &cfg);
        for (node, text) in trace.final_reprs() {
            let want = expected[node].iter().cloned().collect::<Vec<_>>().join(" ");
            ensure!(*text == want, "graph {trial} node {node}: got `{text}`, oracle `{want}`");
            if unbounded {
                let mut all = BTreeSet::new();
                for m in ball(&g, node, layers) {
                    all.extend(g.node(m).unwrap().raw_text.split_whitespace().map(str::to_owned));
                }
                let got: BTreeSet<String> = text.split(' ').map(str::to_owned).collect();
                ensure!(got == all, "graph {trial} node {node}: token set differs from the {layers}-hop ball");
            }
            nodes_checked += 1;
        }
    }
    Ok(format!("50 graphs, {nodes_checked} nodes match the set-propagation oracle"))
}

fn permutation_invariance() -> Check {
    let templates = TemplateRegistry::default();
    let mut r = rng(14);
    let mut graphs = vec![common::toy()];
    graphs.extend((0..4).map(|i| random_graph(&mut r, &format!("perm{i}"), 20)));
    let seeds = [1u64, 2, 3];
    let mut runs = 0;
    for g in &graphs {
        let cfg = GnnConfig::default();
        let gateway = mock_gateway(&templates);
        let gnn = PromptGnn::new(&gateway, &templates, &cfg, "mock").map_err(|e| e.to_string())?;
        let base = gnn.run(g).map_err(|e| e.to_string())?;
        for &seed in &seeds {
            for p in [Permutation::ShuffleNodes { seed }, Permutation::ShuffleTokens { seed }] {
                let run = gnn.permuted_run(g, p).map_err(|e| e.to_string())?;
                for (node, text) in base.final_reprs() {
                    let other = &run.final_reprs()[node];
                    ensure!(
                        text.as_bytes() == other.as_bytes(),
                        "{} {node} under {p:?}: `{text}` vs `{other}`",
                        g.graph_id()
                    );
                }
                runs += 1;
            }
        }
        let rows = permutation_report(&gnn, g, &seeds).map_err(|e| e.to_string())?;
        ensure!(rows.len() == 6 && rows.iter().all(|row| row.score == 1.0), "report scores {rows:?}");
    }
    Ok(format!("{runs} permuted runs byte-identical to the baseline"))
}

fn star(degree: usize) -> TextAttributedGraph {
    let mut nodes = vec![NodeRecord::new("hub", "h")];
    nodes.extend((0..degree).map(|i| NodeRecord::new(format!("l{i:03}"), "x")));
    let edges: Vec<_> = (0..degree).map(|i| ("hub".to_owned(), format!("l{i:03}"))).collect();
    TextAttributedGraph::new("star", "misc", nodes, edges).unwrap()
}

fn sampling_law() -> Check {
    let defaults = GnnConfig::default();
    ensure!(defaults.neighbor_cap == 20, "default cap {}", defaults.neighbor_cap);
    ensure!(defaults.sample_ratio.ratio() == Ratio::new(3, 5), "default ratio {}", defaults.sample_ratio);
    let stars: Vec<TextAttributedGraph> = (0..=60).map(star).collect();
    let mut r = rng(15);
    for _ in 0..10_000 {
        let deg = r.gen_range(0..=60usize);
        let den = r.gen_range(1..=20u64);
        let num = r.gen_range(1..=den);
        let cap = r.gen_range(1..=30usize);
        let ratio = SampleRatio::new(Ratio::new(num, den)).unwrap();
        // integer ceil(num*deg/den), no floating point
        let ceil = (num as usize * deg).div_ceil(den as usize);
        let want = if deg == 0 { 0 } else { cap.min(ceil.max(1)) };
        ensure!(sample_size(deg, ratio, cap) == want, "deg {deg} ratio {num}/{den} cap {cap}");
        let cfg = GnnConfig {
            sample_ratio: ratio,
            neighbor_cap: cap,
            seed: r.gen(),
            ..GnnConfig::default()
        };
        let layer = r.gen_range(1..=3);
        let a = sample_neighbors(&stars[deg], "hub", &cfg, layer).unwrap();
        let b = sample_neighbors(&stars[deg], "hub", &cfg, layer).unwrap();
        ensure!(a == b, "sampling is not deterministic under a fixed seed");
        ensure!(a.len() == want, "sampled {} of deg {deg}, want {want}", a.len());
        let unique: BTreeSet<&str> = a.iter().copied().collect();
        ensure!(unique.len() == a.len(), "duplicate neighbors in {a:?}");
        ensure!(a.iter().all(|n| stars[deg].has_edge("hub", n)), "sampled a non-neighbor");
    }
    ensure!(sample_size(10, defaults.sample_ratio, defaults.neighbor_cap) == 6, "deg 10 under defaults");
    ensure!(sample_size(50, SampleRatio::FULL, defaults.neighbor_cap) == 20, "deg 50 at ratio 1");
    Ok("10000 triples follow min(cap, max(1, ceil(ratio*deg)))".into())
}

fn oracle_entropy(vocab: &Vocabulary) -> f64 {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    let mut total = 0.0;
    for id in vocab.entries().values() {
        for t in id.tokens() {
            *counts.entry(t.clone()).or_default() += 1.0;
            total += 1.0;
        }
    }
    counts.values().map(|c| -(c / total) * (c / total).log2()).sum::<f64>().max(0.0)
}

fn random_vocab(r: &mut ChaCha8Rng, graph: &str) -> (TextAttributedGraph, Vocabulary) {
    let g = random_graph(r, graph, 30);
    let reprs: BTreeMap<String, String> = g
        .nodes()
        .iter()
        .map(|n| (n.node_id.clone(), words(r, 12, 1, 5).join(" ")))
        .collect();
    let v = build_vocabulary(&reprs, &WordTokenizer, 4, graph).unwrap();
    (g, v)
}

fn vocabulary_metrics() -> Check {
    let mut r = rng(16);
    for i in 0..100 {
        let (g, v) = random_vocab(&mut r, &format!("g{i}"));
        ensure!(coverage::<f64>(&v, &[&g]) == 1.0, "coverage below 1 on a self-built vocabulary");
        let (h, o) = (entropy::<f64>(&v), oracle_entropy(&v));
        ensure!((h - o).abs() <= 1e-9, "entropy {h} vs oracle {o}");
    }
    for k in 1..=64usize {
        let entries = (0..k)
            .map(|i| (NodeRef::new("u", format!("n{i}")), tagflow::vocab::LanguageId::new(vec![format!("t{i}")]).unwrap()))
            .collect();
        let v = Vocabulary::from_entries(WordTokenizer::ID, vec!["u".into()], 1, entries).unwrap();
        let h = entropy::<f64>(&v);
        ensure!(h == (k as f64).log2(), "uniform over {k}: {h} bits");
    }
    for i in 0..100 {
        let parts: Vec<Vocabulary> = (0..r.gen_range(2..=4)).map(|j| random_vocab(&mut r, &format!("m{i}_{j}")).1).collect();
        let refs: Vec<&Vocabulary> = parts.iter().collect();
        let merged = merge(&refs).map_err(|e| e.to_string())?;
        let sizes: Vec<f64> = parts.iter().map(|p| token_counts(p).values().sum::<usize>() as f64).collect();
        let total: f64 = sizes.iter().sum();
        let mean: f64 = parts.iter().zip(&sizes).map(|(p, w)| w / total * oracle_entropy(p)).sum();
        let h = entropy::<f64>(&merged);
        ensure!(h + 1e-9 >= mean, "merge {i}: {h} below weighted mean {mean}");
    }
    Ok("coverage 1.0, entropy within 1e-9, uniform gives log2 k, 100 merges concave".into())
}

fn golden_prompts() -> Check {
    let rendered = common::rendered_prompts();
    for (name, text) in &rendered {
        ensure!(*text == common::golden(name), "{name} differs from its golden");
    }
    Ok(format!("{} prompts byte-match", rendered.len()))
}

fn toy_config(out: &Path) -> PipelineConfig {
    PipelineConfig::load(&common::toy_dir().join("toy.toml")).unwrap().with_overrides(&Overrides {
        out_dir: Some(out.to_owned()),
        ..Overrides::default()
    })
}

fn cache_one_time_cost() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = toy_config(dir.path());
    let first = cmd_understand(&cfg).map_err(|e| e.to_string())?;
    ensure!(first.backend_calls() > 0, "first run made no backend calls");
    cmd_vocab(&cfg).map_err(|e| e.to_string())?;
    cmd_instruct(&cfg).map_err(|e| e.to_string())?;
    let decoded = cmd_decode(&cfg).map_err(|e| e.to_string())?;
    ensure!(decoded.invalid == 0, "{} decodes outside the candidate set", decoded.invalid);
    let report = cmd_eval(&cfg).map_err(|e| e.to_string())?;
    ensure!(report.json_path.exists(), "no report written");
    let again = cmd_understand(&cfg).map_err(|e| e.to_string())?;
    ensure!(again.backend_calls() == 0, "rerun made {} backend calls", again.backend_calls());
    Ok(format!("first run {} backend calls, rerun 0", first.backend_calls()))
}

fn ids_in(record: &CorpusRecord, pool: &PromptPool) -> Result<BTreeMap<String, Vec<String>>, String> {
    let body = match record.instruction.split_once('\n') {
        Some((first, rest)) if first.starts_with("Now perform") => rest,
        _ => record.instruction.as_str(),
    };
    let template = pool.get(record.task, record.variant).ok_or("unknown variant")?;
    let fields = template
        .extract(body)
        .ok_or_else(|| format!("instruction does not match its template: {body}"))?;
    Ok(fields
        .into_iter()
        .map(|(k, v)| {
            let ids = if k.ends_with("hop") {
                v.split(", ").filter(|s| !s.is_empty()).map(str::to_owned).collect()
            } else {
                vec![v]
            };
            (k, ids)
        })
        .collect())
}

fn check_records(records: &[CorpusRecord], vocab: &Vocabulary, forbidden: Option<&str>) -> Result<usize, String> {
    let pool = PromptPool::default();
    let mut ids = 0;
    for r in records {
        if let Some(t) = forbidden {
            ensure!(r.graph != t, "record for target graph {t}");
        }
        let mut fields = ids_in(r, &pool)?;
        if let (Some(a), Some(b)) = (fields.remove("cand_a"), fields.remove("cand_b")) {
            // IDs may contain the separator word; any split where both sides resolve will do
            let sep = if r.variant == 2 { " or " } else { " and " };
            let joined = format!("{}{sep}{}", a[0], b[0]);
            let split = joined
                .match_indices(sep)
                .map(|(i, _)| (&joined[..i], &joined[i + sep.len()..]))
                .find(|(x, y)| vocab.resolve(x).is_some() && vocab.resolve(y).is_some())
                .ok_or_else(|| format!("no split of `{joined}` resolves"))?;
            fields.insert("cands".into(), vec![split.0.to_owned(), split.1.to_owned()]);
        }
        for id in fields.values().flatten() {
            let node = vocab.resolve(id).ok_or_else(|| format!("ID `{id}` does not resolve in {:?}", r.instruction))?;
            ensure!(node.graph_id == r.graph, "ID `{id}` belongs to graph {}", node.graph_id);
            ids += 1;
        }
        if r.task == TaskKind::GenerativeLp {
            ensure!(
                !fields["1hop"].contains(&r.output),
                "held-out target `{}` listed as a neighbor of {}",
                r.output,
                r.center
            );
        }
    }
    Ok(ids)
}

fn corpus_hygiene() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(17);
    let shop = {
        let g = random_graph(&mut r, "shop", 25);
        let nodes: Vec<NodeRecord> = g
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| n.clone().with_label(["toys", "tools", "books"][i % 3]))
            .collect();
        let edges = g.edges().iter().map(|e| {
            let (a, b) = e.endpoints();
            (a.to_owned(), b.to_owned())
        });
        TextAttributedGraph::new("shop", "e-commerce", nodes, edges).unwrap()
    };
    write_graph(&shop, &dir.path().join("shop")).map_err(|e| e.to_string())?;
    let toml = format!(
        r#"
seed = 3
out_dir = "out"
[[graphs]]
id = "toy"
domain = "computer-science"
dir = "{toy}"
[[graphs]]
id = "shop"
domain = "e-commerce"
dir = "shop"
[gnn]
layers = 2
layer_budget_tokens = [40, 20]
[corpus]
link_test_fraction = "0.25"
node_folds = 4
[transfer]
sources = ["shop"]
target = "toy"
mode = "pretraining"
tasks = ["node_classification", "discriminative_lp", "generative_lp", "node_discrimination", "link_discrimination"]
total = 80
"#,
        toy = common::toy_dir().display()
    );
    let cfg = PipelineConfig::from_toml(&toml, dir.path()).map_err(|e| e.to_string())?;
    cmd_understand(&cfg).map_err(|e| e.to_string())?;
    cmd_vocab(&cfg).map_err(|e| e.to_string())?;
    cmd_instruct(&cfg).map_err(|e| e.to_string())?;
    let ws = Workspace::new(&cfg.out_dir);
    let vocab = deserialize(&ws.vocab(), None).map_err(|e| e.to_string())?;
    let train = read_corpus(&ws.corpus()).map_err(|e| e.to_string())?;
    ensure!(!train.is_empty(), "empty training corpus");
    let mut ids = check_records(&train, &vocab, Some("toy"))?;
    let eval = read_corpus(&ws.eval_instructions()).map_err(|e| e.to_string())?;
    ensure!(eval.iter().all(|e| e.graph == "toy"), "evaluation records outside the target");
    ensure!(
        eval.iter().all(|e| e.instruction.starts_with("Now perform")),
        "evaluation records lack the adaptive prefix"
    );
    ids += check_records(&eval, &vocab, None)?;
    let split: GraphSplit = serde_json::from_str(
        &std::fs::read_to_string(ws.split("toy")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let glp = eval.iter().filter(|e| e.task == TaskKind::GenerativeLp).count();
    ensure!(glp == split.test_edges.len(), "{glp} eval GLP records for {} test edges", split.test_edges.len());

    // plain multi-graph config: the held-out rule applies to every corpus
    let plain = toy_config(&dir.path().join("plain"));
    cmd_understand(&plain).map_err(|e| e.to_string())?;
    cmd_vocab(&plain).map_err(|e| e.to_string())?;
    cmd_instruct(&plain).map_err(|e| e.to_string())?;
    let ws = Workspace::new(&plain.out_dir);
    let vocab = deserialize(&ws.vocab(), None).map_err(|e| e.to_string())?;
    for file in [ws.corpus(), ws.eval_instructions()] {
        ids += check_records(&read_corpus(&file).map_err(|e| e.to_string())?, &vocab, None)?;
    }
    Ok(format!("{} training records, 0 for the target, {ids} IDs resolved", train.len()))
}

fn brute_f1(pairs: &[(String, String)], classes: &BTreeSet<String>) -> f64 {
    let mut sum = 0.0;
    for c in classes {
        let tp = pairs.iter().filter(|(p, t)| p == c && t == c).count() as f64;
        let fp = pairs.iter().filter(|(p, t)| p == c && t != c).count() as f64;
        let fn_ = pairs.iter().filter(|(p, t)| p != c && t == c).count() as f64;
        let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
        sum += f1;
    }
    sum / classes.len() as f64
}

fn metric_oracles() -> Check {
    let mut r = rng(18);
    for trial in 0..100 {
        let k = r.gen_range(1..=6);
        let classes: Vec<String> = (0..k).map(|i| format!("class {i}")).collect();
        let class_set: BTreeSet<String> = classes.iter().cloned().collect();
        let n = r.gen_range(1..=60);
        let pairs: Vec<(String, String)> = (0..n)
            .map(|_| {
                let t = classes[r.gen_range(0..k)].clone();
                let p = if r.gen_bool(0.1) {
                    "unrelated answer".to_owned()
                } else {
                    classes[r.gen_range(0..k)].clone()
                };
                (p, t)
            })
            .collect();
        let records: Vec<PredictionRecord> = pairs
            .iter()
            .enumerate()
            .map(|(i, (p, t))| PredictionRecord::new(i.to_string(), p, t))
            .collect();
        let acc = accuracy::<f64>(&records).map_err(|e| e.to_string())?;
        let want = pairs.iter().filter(|(p, t)| p == t).count() as f64 / n as f64;
        ensure!((acc - want).abs() <= 1e-12, "trial {trial}: accuracy {acc} vs {want}");
        let f1 = macro_f1::<f64>(&records, &class_set).map_err(|e| e.to_string())?;
        let want = brute_f1(&pairs, &class_set);
        ensure!((f1 - want).abs() <= 1e-12, "trial {trial}: macro-F1 {f1} vs {want}");

        let mut shuffled = classes.clone();
        shuffled.shuffle(&mut r);
        let rename: BTreeMap<&String, String> =
            classes.iter().zip(&shuffled).map(|(a, b)| (a, format!("renamed {b}"))).collect();
        let relabel = |s: &String| rename.get(s).cloned().unwrap_or_else(|| s.clone());
        let renamed: Vec<PredictionRecord> = pairs
            .iter()
            .enumerate()
            .map(|(i, (p, t))| PredictionRecord::new(i.to_string(), relabel(p), relabel(t)))
            .collect();
        let renamed_set: BTreeSet<String> = classes.iter().map(relabel).collect();
        let f1_renamed = macro_f1::<f64>(&renamed, &renamed_set).map_err(|e| e.to_string())?;
        ensure!((f1 - f1_renamed).abs() <= 1e-12, "trial {trial}: relabeling moved macro-F1");

        let rankings: Vec<(Vec<String>, String)> = (0..n)
            .map(|_| {
                let ranked: Vec<String> = (0..r.gen_range(1..=5)).map(|_| format!("n{}", r.gen_range(0..6))).collect();
                (ranked, format!("n{}", r.gen_range(0..6)))
            })
            .collect();
        let hr = hr_at_1::<f64>(&rankings).map_err(|e| e.to_string())?;
        let want = rankings.iter().filter(|(ranked, t)| &ranked[0] == t).count() as f64 / n as f64;
        ensure!((hr - want).abs() <= 1e-12, "trial {trial}: HR@1 {hr} vs {want}");
    }
    Ok("100 fixtures agree with brute force, macro-F1 relabel-invariant".into())
}

type Criterion = (&'static str, fn() -> Check, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("decoder soundness", decoder_soundness, Duration::from_secs(5)),
        ("decoder work bound", decoder_work_bound, Duration::from_secs(10)),
        ("mock GNN oracle equivalence", mock_gnn_oracle, Duration::from_secs(30)),
        ("permutation invariance", permutation_invariance, Duration::from_secs(10)),
        ("sampling law", sampling_law, Duration::from_secs(5)),
        ("vocabulary metrics", vocabulary_metrics, Duration::from_secs(5)),
        ("golden prompts", golden_prompts, Duration::from_secs(1)),
        ("cache one-time cost", cache_one_time_cost, Duration::from_secs(30)),
        ("metric oracles", metric_oracles, Duration::from_secs(5)),
        ("corpus hygiene", corpus_hygiene, Duration::from_secs(10)),
    ];
    let mut failed = Vec::new();
    for (name, check, limit) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                println!("FAIL  {name}: {why} ({elapsed:.2?})");
                failed.push(name);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", 10 - failed.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
