use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{build_gateway, pipeline_tokenizer, OverlapScorer, PipelineConfig, PipelineError, Workspace};
use crate::decoder::{build_tree, decode_beam, decode_greedy, write_tree, PrefixTree};
use crate::eval::{
    accuracy, discrimination_report, efficiency_report, hr_at_1, macro_f1, pair_sets, permutation_report,
    BagOfTokens, DiscriminationRow, EfficiencyReport, PermutationRow, PermutationSummary, PredictionRecord, RunSample,
    TransferMode,
};
use crate::fsutil::write_atomic;
use crate::gateway::UsageLedger;
use crate::gnn::{read_trace, write_trace, GnnError, GnnTrace, NodeFailure, PromptGnn, TemplateRegistry};
use crate::graph::{kfold_nodes, load_graph, split_links, Edge, NodeRecord, TextAttributedGraph};
use crate::instruct::{
    adaptive_prefix, build_corpus, read_corpus, write_corpus, CorpusRecord, Forge, PromptPool, TaskKind,
};
use crate::scalar::Exact;
use crate::text::Tokenizer;
use crate::vocab::{build_vocabulary, coverage, deserialize, entropy, merge, serialize, NodeRef, Vocabulary};

fn load_graphs(config: &PipelineConfig) -> Result<Vec<TextAttributedGraph>, PipelineError> {
    config
        .graphs
        .iter()
        .map(|g| Ok(load_graph(&g.id, &g.files()?, &g.domain)?))
        .collect()
}

fn write_json<T: Serialize>(value: &T, path: &std::path::Path) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(PipelineError::io(format!("writing {}", path.display())))
}

fn write_lines<T: Serialize>(items: &[T], path: &std::path::Path) -> Result<(), PipelineError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("serializable"));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes()).map_err(PipelineError::io(format!("writing {}", path.display())))
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<Vec<T>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(PipelineError::io(format!("reading {}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| PipelineError::Config(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Ledger growth and wall time of one command step, one line of the
/// usage log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsageSample {
    pub label: String,
    pub usage: UsageLedger,
    pub wall_seconds: f64,
}

fn append_usage(ws: &Workspace, sample: UsageSample) -> Result<(), PipelineError> {
    let path = ws.usage_log();
    let mut samples: Vec<UsageSample> = if path.exists() { read_lines(&path)? } else { Vec::new() };
    samples.push(sample);
    write_lines(&samples, &path)
}

#[derive(Serialize)]
struct FailureManifest<'a> {
    graph: &'a str,
    layer: usize,
    failures: &'a [NodeFailure],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnderstandRow {
    pub graph: String,
    pub nodes: usize,
    pub trace_records: usize,
    pub completions: u64,
    pub backend_calls: u64,
    pub cache_hits: u64,
    pub tokens: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnderstandSummary {
    pub rows: Vec<UnderstandRow>,
}

impl UnderstandSummary {
    pub fn backend_calls(&self) -> u64 {
        self.rows.iter().map(|r| r.backend_calls).sum()
    }
}

impl fmt::Display for UnderstandSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(
                f,
                "{}: {} nodes, {} trace records, {} completions ({} backend calls, {} cached), {} tokens",
                r.graph, r.nodes, r.trace_records, r.completions, r.backend_calls, r.cache_hits, r.tokens
            )?;
        }
        write!(f, "new backend calls: {}", self.backend_calls())
    }
}

/// Run the prompt-based GNN on every graph and write the traces.
pub fn cmd_understand(config: &PipelineConfig) -> Result<UnderstandSummary, PipelineError> {
    config.validate()?;
    let graphs = load_graphs(config)?;
    let ws = Workspace::new(&config.out_dir);
    let (gateway, model) = build_gateway(config)?;
    let templates = TemplateRegistry::default();
    let gnn = PromptGnn::new(&gateway, &templates, &config.gnn, model)?;
    let mut rows = Vec::new();
    for g in &graphs {
        let before = gateway.export_ledger();
        let started = Instant::now();
        let outcome = gnn.run(g);
        let usage = gateway.export_ledger().since(&before);
        append_usage(
            &ws,
            UsageSample {
                label: format!("{} understand", g.graph_id()),
                usage: usage.clone(),
                wall_seconds: started.elapsed().as_secs_f64(),
            },
        )?;
        let manifest = ws.failure_manifest(g.graph_id());
        let trace = match outcome {
            Ok(t) => t,
            Err(GnnError::LayerFailed { layer, failures }) => {
                write_json(
                    &FailureManifest {
                        graph: g.graph_id(),
                        layer,
                        failures: &failures,
                    },
                    &manifest,
                )?;
                return Err(PipelineError::Understand {
                    graph: g.graph_id().to_owned(),
                    layer,
                    budget_exceeded: failures.iter().any(|f| f.budget_exceeded),
                    failures,
                    manifest,
                });
            }
            Err(e) => return Err(e.into()),
        };
        let path = ws.trace(g.graph_id());
        write_trace(&trace, &path).map_err(PipelineError::io(format!("writing {}", path.display())))?;
        if manifest.exists() {
            std::fs::remove_file(&manifest).map_err(PipelineError::io("removing stale failure manifest"))?;
        }
        let total = usage.total();
        rows.push(UnderstandRow {
            graph: g.graph_id().to_owned(),
            nodes: g.node_count(),
            trace_records: trace.records().len(),
            completions: total.calls,
            backend_calls: total.backend_calls(),
            cache_hits: total.cache_hits,
            tokens: total.total_tokens(),
        });
    }
    Ok(UnderstandSummary { rows })
}

fn load_traces(config: &PipelineConfig, ws: &Workspace) -> Result<Vec<GnnTrace>, PipelineError> {
    config
        .graphs
        .iter()
        .map(|g| {
            let path = ws.require(ws.trace(&g.id), "understand")?;
            Ok(read_trace(&g.id, &path)?)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabSummary {
    pub path: PathBuf,
    pub entries: usize,
    pub coverage: f64,
    pub entropy_bits: f64,
    pub per_graph: BTreeMap<String, usize>,
}

impl fmt::Display for VocabSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, n) in &self.per_graph {
            writeln!(f, "{g}: {n} IDs")?;
        }
        write!(
            f,
            "vocabulary: {} entries, coverage {:.4}, entropy {:.4} bits -> {}",
            self.entries,
            self.coverage,
            self.entropy_bits,
            self.path.display()
        )
    }
}

/// Build IDs from the final representations and merge them into one file.
pub fn cmd_vocab(config: &PipelineConfig) -> Result<VocabSummary, PipelineError> {
    config.validate()?;
    let ws = Workspace::new(&config.out_dir);
    let traces = load_traces(config, &ws)?;
    let graphs = load_graphs(config)?;
    let tokenizer = pipeline_tokenizer();
    let mut parts = Vec::new();
    for t in &traces {
        parts.push(build_vocabulary(t.final_reprs(), tokenizer.as_ref(), config.vocab_max_tokens(), &t.graph_id)?);
    }
    let vocab = merge(&parts.iter().collect::<Vec<_>>())?;
    let path = ws.vocab();
    serialize(&vocab, &path)?;
    let refs: Vec<&TextAttributedGraph> = graphs.iter().collect();
    Ok(VocabSummary {
        entries: vocab.len(),
        coverage: coverage::<f64>(&vocab, &refs),
        entropy_bits: entropy::<f64>(&vocab),
        per_graph: parts.iter().map(|p| (p.source_graphs()[0].clone(), p.len())).collect(),
        path,
    })
}

fn load_vocab(ws: &Workspace, tokenizer: &dyn Tokenizer) -> Result<Vocabulary, PipelineError> {
    let path = ws.require(ws.vocab(), "vocab")?;
    Ok(deserialize(&path, Some(tokenizer.tokenizer_id()))?)
}

/// Held-out edges and nodes of one graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSplit {
    pub graph: String,
    pub train_edges: BTreeSet<Edge>,
    pub test_edges: BTreeSet<Edge>,
    pub test_nodes: BTreeSet<String>,
}

fn make_split(config: &PipelineConfig, g: &TextAttributedGraph) -> Result<GraphSplit, PipelineError> {
    let links = split_links(g, config.corpus.link_test_fraction.ratio(), config.seed)?;
    let labeled = g.labeled_nodes().count();
    let test_nodes = if labeled >= config.corpus.node_folds {
        kfold_nodes(g, config.corpus.node_folds, config.seed)?.folds[config.corpus.eval_fold].clone()
    } else {
        log::warn!("{}: {labeled} labeled nodes, no node classification hold-out", g.graph_id());
        BTreeSet::new()
    };
    Ok(GraphSplit {
        graph: g.graph_id().to_owned(),
        train_edges: links.train_edges,
        test_edges: links.test_edges,
        test_nodes,
    })
}

/// Graph with `edges` and without the labels of `hidden`.
fn training_view(
    g: &TextAttributedGraph,
    edges: &BTreeSet<Edge>,
    hidden: &BTreeSet<String>,
) -> Result<TextAttributedGraph, PipelineError> {
    let nodes: Vec<NodeRecord> = g
        .nodes()
        .iter()
        .map(|n| {
            let mut n = n.clone();
            if hidden.contains(&n.node_id) {
                n.label = None;
            }
            n
        })
        .collect();
    let pairs = edges.iter().map(|e| {
        let (a, b) = e.endpoints();
        (a.to_owned(), b.to_owned())
    });
    Ok(TextAttributedGraph::new(g.graph_id(), g.domain_tag(), nodes, pairs)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructSummary {
    pub corpus: PathBuf,
    pub eval: PathBuf,
    /// (graph, task) -> training records written.
    pub train_counts: BTreeMap<String, BTreeMap<TaskKind, usize>>,
    pub eval_counts: BTreeMap<String, BTreeMap<TaskKind, usize>>,
    pub skipped: usize,
}

impl fmt::Display for InstructSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, counts) in [("train", &self.train_counts), ("eval", &self.eval_counts)] {
            for (g, tasks) in counts {
                for (t, n) in tasks {
                    writeln!(f, "{name} {g} {t}: {n}")?;
                }
            }
        }
        write!(
            f,
            "skipped {} -> {}, {}",
            self.skipped,
            self.corpus.display(),
            self.eval.display()
        )
    }
}

/// Split each graph, write the training corpus and the evaluation
/// instructions.
pub fn cmd_instruct(config: &PipelineConfig) -> Result<InstructSummary, PipelineError> {
    config.validate()?;
    let ws = Workspace::new(&config.out_dir);
    let tokenizer = pipeline_tokenizer();
    let vocab = load_vocab(&ws, tokenizer.as_ref())?;
    let graphs = load_graphs(config)?;
    let pool = PromptPool::default();
    let mut splits = Vec::new();
    let mut train_views = Vec::new();
    for g in &graphs {
        let split = make_split(config, g)?;
        write_json(&split, &ws.split(g.graph_id()))?;
        train_views.push(training_view(g, &split.train_edges, &split.test_nodes)?);
        splits.push(split);
    }
    let plan = config.corpus_plan()?;
    let refs: Vec<&TextAttributedGraph> = train_views.iter().collect();
    let (records, corpus_summary) = build_corpus(&refs, &plan, &vocab, &pool, config.seed)?;
    write_corpus(&records, &ws.corpus())?;
    let mut train_counts: BTreeMap<String, BTreeMap<TaskKind, usize>> = BTreeMap::new();
    for row in &corpus_summary.rows {
        *train_counts.entry(row.graph.clone()).or_default().entry(row.task).or_default() += row.written;
    }

    let eval_graphs: BTreeSet<&str> = match &config.transfer {
        Some(t) => [t.target.as_str()].into(),
        None => graphs.iter().map(|g| g.graph_id()).collect(),
    };
    let mut eval_records = Vec::new();
    for (g, split) in graphs.iter().zip(&splits) {
        if !eval_graphs.contains(g.graph_id()) {
            continue;
        }
        let prefix = |task: TaskKind| -> Result<String, PipelineError> {
            match &config.transfer {
                Some(t) if t.mode == TransferMode::Pretraining => {
                    let domains: BTreeSet<&str> = t
                        .sources
                        .iter()
                        .filter_map(|s| config.graphs.iter().find(|c| &c.id == s).map(|c| c.domain.as_str()))
                        .collect();
                    match domains.into_iter().collect::<Vec<_>>().as_slice() {
                        [one] => Ok(adaptive_prefix(one, g.domain_tag(), &[task]).unwrap_or_default()),
                        _ => Ok(String::new()),
                    }
                }
                _ => Ok(String::new()),
            }
        };
        let labeled_view = training_view(g, &split.train_edges, &BTreeSet::new())?;
        let forge = Forge::new(&labeled_view, &vocab, &pool)
            .with_context_cap(config.corpus.context_cap)
            .with_variant(Some(0));
        let nc_prefix = prefix(TaskKind::NodeClassification)?;
        for node in &split.test_nodes {
            let i = forge.node_classification(node, config.seed)?;
            eval_records.push(CorpusRecord::from(i.with_prefix(&nc_prefix)));
        }
        let lp_prefix = prefix(TaskKind::GenerativeLp)?;
        for edge in &split.test_edges {
            let mut with_edge = split.train_edges.clone();
            with_edge.insert(edge.clone());
            let single = g.with_edges(&with_edge)?;
            let forge = Forge::new(&single, &vocab, &pool)
                .with_context_cap(config.corpus.context_cap)
                .with_variant(Some(0));
            let (a, b) = edge.endpoints();
            let i = forge.generative_lp(a, b, config.seed)?;
            eval_records.push(CorpusRecord::from(i.with_prefix(&lp_prefix)));
        }
    }
    write_corpus(&eval_records, &ws.eval_instructions())?;
    let mut eval_counts: BTreeMap<String, BTreeMap<TaskKind, usize>> = BTreeMap::new();
    for r in &eval_records {
        *eval_counts.entry(r.graph.clone()).or_default().entry(r.task).or_default() += 1;
    }
    Ok(InstructSummary {
        corpus: ws.corpus(),
        eval: ws.eval_instructions(),
        train_counts,
        eval_counts,
        skipped: corpus_summary.skipped(),
    })
}

/// One decoded evaluation instruction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionLine {
    /// Line number in the evaluation file, from 1.
    pub reference: usize,
    pub task: TaskKind,
    pub graph: String,
    pub center: String,
    pub predicted: String,
    pub target: String,
    /// Best first.
    pub ranked: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeSummary {
    pub predictions: PathBuf,
    pub decoded: usize,
    pub invalid: usize,
    pub tries: Vec<PathBuf>,
}

impl fmt::Display for DecodeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "decoded {} instructions, {} outside the candidate set, {} tries -> {}",
            self.decoded,
            self.invalid,
            self.tries.len(),
            self.predictions.display()
        )
    }
}

fn class_tree(g: &TextAttributedGraph, tokenizer: &dyn Tokenizer) -> Result<Option<PrefixTree>, PipelineError> {
    let classes = g.classes();
    if classes.is_empty() {
        return Ok(None);
    }
    let tree = PrefixTree::from_candidates(
        tokenizer.tokenizer_id(),
        classes.into_iter().map(|c| {
            let mut tokens = tokenizer.tokenize(c);
            if tokens.is_empty() {
                tokens.push(c.to_owned());
            }
            (NodeRef::new(format!("{}:classes", g.graph_id()), c), tokens)
        }),
    )?;
    Ok(Some(tree))
}

/// Constrained decoding of every evaluation instruction with the overlap
/// baseline scorer. Writes the prefix trees alongside.
pub fn cmd_decode(config: &PipelineConfig) -> Result<DecodeSummary, PipelineError> {
    config.validate()?;
    let ws = Workspace::new(&config.out_dir);
    let tokenizer = pipeline_tokenizer();
    let vocab = load_vocab(&ws, tokenizer.as_ref())?;
    let eval_path = ws.require(ws.eval_instructions(), "instruct")?;
    let records = read_corpus(&eval_path)?;
    let graphs = load_graphs(config)?;
    let mut tries = Vec::new();
    let mut class_trees = BTreeMap::new();
    for g in &graphs {
        let ids: BTreeSet<NodeRef> = vocab.graph_entries(g.graph_id()).map(|(k, _)| k.clone()).collect();
        if !ids.is_empty() {
            let path = ws.trie(g.graph_id());
            write_tree(&build_tree(&vocab, Some(&ids))?, &path)?;
            tries.push(path);
        }
        if let Some(t) = class_tree(g, tokenizer.as_ref())? {
            let path = ws.class_trie(g.graph_id());
            write_tree(&t, &path)?;
            tries.push(path);
            class_trees.insert(g.graph_id().to_owned(), t);
        }
    }
    let mut lines = Vec::new();
    let mut invalid = 0;
    for (i, r) in records.iter().enumerate() {
        let scorer = OverlapScorer::from_text(&r.instruction, tokenizer.as_ref());
        let ranked: Vec<String> = match r.task {
            TaskKind::NodeClassification => {
                let Some(tree) = class_trees.get(&r.graph) else {
                    continue;
                };
                let result = decode_greedy::<f64>(tree, &scorer)?;
                vec![result.node.node_id]
            }
            TaskKind::GenerativeLp => {
                let candidates: BTreeSet<NodeRef> = vocab
                    .graph_entries(&r.graph)
                    .map(|(k, _)| k.clone())
                    .filter(|k| k.node_id != r.center)
                    .collect();
                let tree = build_tree(&vocab, Some(&candidates))?;
                let results = decode_beam::<f64>(&tree, &scorer, config.decode.beam_width)?;
                for res in &results {
                    if !candidates.contains(&res.node) {
                        invalid += 1;
                    }
                }
                results.iter().map(|res| res.rendered()).collect()
            }
            _ => continue,
        };
        lines.push(PredictionLine {
            reference: i + 1,
            task: r.task,
            graph: r.graph.clone(),
            center: r.center.clone(),
            predicted: ranked[0].clone(),
            target: r.output.clone(),
            ranked,
        });
    }
    let path = ws.predictions();
    write_lines(&lines, &path)?;
    Ok(DecodeSummary {
        predictions: path,
        decoded: lines.len(),
        invalid,
        tries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub records: usize,
    pub accuracy: f64,
    /// Node classification only.
    pub macro_f1: Option<f64>,
    /// Link prediction only.
    pub hr_at_1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub scores: BTreeMap<String, BTreeMap<TaskKind, TaskScores>>,
    pub vocab_entries: usize,
    pub vocab_coverage: f64,
    pub vocab_entropy_bits: f64,
    pub discrimination: BTreeMap<String, Vec<DiscriminationRow<f64>>>,
    pub efficiency: EfficiencyReport,
    pub permutation: Vec<PermutationRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub report: EvalReport,
    pub json_path: PathBuf,
    pub text_path: PathBuf,
    pub text: String,
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text)?;
        write!(f, "report -> {}", self.json_path.display())
    }
}

fn report_text(r: &EvalReport) -> String {
    use crate::eval::render_table;
    let pct = |v: Option<f64>| v.map(|x| format!("{:.2}", 100.0 * x)).unwrap_or_else(|| "-".into());
    let mut rows = Vec::new();
    for (g, tasks) in &r.scores {
        for (t, s) in tasks {
            rows.push(vec![
                g.clone(),
                t.to_string(),
                s.records.to_string(),
                pct(Some(s.accuracy)),
                pct(s.macro_f1),
                pct(s.hr_at_1),
            ]);
        }
    }
    let mut out = format!("config {}\n\n", r.config_hash);
    out.push_str(&render_table(&["graph", "task", "n", "acc%", "macro_f1%", "hr@1%"], &rows));
    out.push_str(&format!(
        "\nvocabulary: {} entries, coverage {:.2}%, entropy {:.4} bits\n\n",
        r.vocab_entries,
        100.0 * r.vocab_coverage,
        r.vocab_entropy_bits
    ));
    let mut drows = Vec::new();
    for (g, layers) in &r.discrimination {
        for l in layers {
            drows.push(vec![
                g.clone(),
                l.layer.to_string(),
                format!("{:.4}", l.mean_sim_connected),
                format!("{:.4}", l.mean_sim_disconnected),
                format!("{:.4}", l.margin),
            ]);
        }
    }
    out.push_str(&render_table(&["graph", "layer", "connected", "disconnected", "margin"], &drows));
    out.push('\n');
    out.push_str(&r.efficiency.to_text());
    if !r.permutation.is_empty() {
        out.push('\n');
        let srows: Vec<Vec<String>> = PermutationSummary::from_rows(&r.permutation)
            .into_iter()
            .map(|s| vec![s.variant, format!("{:.4} ± {:.4}", s.mean, s.std)])
            .collect();
        out.push_str(&render_table(&["variant", "probe"], &srows));
    }
    out
}

/// Score the predictions and write text and JSON reports named by the
/// configuration hash.
pub fn cmd_eval(config: &PipelineConfig) -> Result<EvalSummary, PipelineError> {
    config.validate()?;
    let ws = Workspace::new(&config.out_dir);
    let tokenizer = pipeline_tokenizer();
    let predictions_path = ws.require(ws.predictions(), "decode")?;
    let lines: Vec<PredictionLine> = read_lines(&predictions_path)?;
    let vocab = load_vocab(&ws, tokenizer.as_ref())?;
    let traces = load_traces(config, &ws)?;
    let graphs = load_graphs(config)?;

    let mut grouped: BTreeMap<(String, TaskKind), Vec<&PredictionLine>> = BTreeMap::new();
    for l in &lines {
        grouped.entry((l.graph.clone(), l.task)).or_default().push(l);
    }
    let mut scores: BTreeMap<String, BTreeMap<TaskKind, TaskScores>> = BTreeMap::new();
    for ((graph, task), ls) in grouped {
        let recs: Vec<PredictionRecord> = ls
            .iter()
            .map(|l| PredictionRecord::new(l.reference.to_string(), &l.predicted, &l.target))
            .collect();
        let acc = accuracy::<Exact>(&recs)?;
        let mut s = TaskScores {
            records: recs.len(),
            accuracy: crate::scalar::Scalar::to_f64_lossy(acc),
            macro_f1: None,
            hr_at_1: None,
        };
        match task {
            TaskKind::NodeClassification => {
                let g = graphs.iter().find(|g| g.graph_id() == graph);
                let classes: BTreeSet<String> = g
                    .map(|g| g.classes().into_iter().map(str::to_owned).collect())
                    .unwrap_or_default();
                s.macro_f1 = Some(crate::scalar::Scalar::to_f64_lossy(macro_f1::<Exact>(&recs, &classes)?));
            }
            TaskKind::GenerativeLp => {
                let rankings: Vec<(Vec<String>, String)> =
                    ls.iter().map(|l| (l.ranked.clone(), l.target.clone())).collect();
                s.hr_at_1 = Some(crate::scalar::Scalar::to_f64_lossy(hr_at_1::<Exact>(&rankings)?));
            }
            _ => {}
        }
        scores.entry(graph).or_default().insert(task, s);
    }

    let mut discrimination = BTreeMap::new();
    for (t, g) in traces.iter().zip(&graphs) {
        let (connected, disconnected) = pair_sets(g, config.seed);
        if connected.is_empty() || disconnected.is_empty() {
            continue;
        }
        let embedder = BagOfTokens::fit_trace(t, tokenizer.clone());
        discrimination.insert(
            g.graph_id().to_owned(),
            discrimination_report::<f64>(t, &connected, &disconnected, &embedder)?,
        );
    }

    let usage: Vec<UsageSample> = if ws.usage_log().exists() {
        read_lines(&ws.usage_log())?
    } else {
        Vec::new()
    };
    let mut samples: Vec<RunSample> = usage
        .into_iter()
        .map(|u| RunSample {
            label: u.label,
            usage: u.usage,
            wall: std::time::Duration::from_secs_f64(u.wall_seconds),
        })
        .collect();

    let mut permutation = Vec::new();
    if !config.eval.permutation_seeds.is_empty() {
        let (gateway, model) = build_gateway(config)?;
        let templates = TemplateRegistry::default();
        let gnn = PromptGnn::new(&gateway, &templates, &config.gnn, model)?;
        let started = Instant::now();
        for g in &graphs {
            permutation.extend(permutation_report(&gnn, g, &config.eval.permutation_seeds)?);
        }
        samples.push(RunSample {
            label: "permutation probe".into(),
            usage: gateway.export_ledger(),
            wall: started.elapsed(),
        });
    }

    let refs: Vec<&TextAttributedGraph> = graphs.iter().collect();
    let hash = config.hash();
    let report = EvalReport {
        config_hash: hash.clone(),
        scores,
        vocab_entries: vocab.len(),
        vocab_coverage: coverage::<f64>(&vocab, &refs),
        vocab_entropy_bits: entropy::<f64>(&vocab),
        discrimination,
        efficiency: efficiency_report(&samples),
        permutation,
    };
    let text = report_text(&report);
    let json_path = ws.report(&hash, "json");
    let text_path = ws.report(&hash, "txt");
    write_json(&report, &json_path)?;
    write_atomic(&text_path, text.as_bytes()).map_err(PipelineError::io("writing text report"))?;
    Ok(EvalSummary {
        report,
        json_path,
        text_path,
        text,
    })
}
