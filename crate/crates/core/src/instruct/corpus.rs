use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Forge, InstructError, Instruction, PromptPool, TaskKind};
use crate::fsutil::write_atomic;
use crate::graph::TextAttributedGraph;
use crate::seed::{derive_seed, rng_for};
use crate::vocab::Vocabulary;

/// One line of a corpus file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub instruction: String,
    pub output: String,
    pub task: TaskKind,
    pub graph: String,
    pub center: String,
    pub variant: usize,
}

impl From<Instruction> for CorpusRecord {
    fn from(i: Instruction) -> Self {
        Self {
            instruction: i.text,
            output: i.target,
            task: i.task,
            graph: i.graph_id,
            center: i.center,
            variant: i.variant,
        }
    }
}

fn default_weight() -> u32 {
    1
}

/// Tasks to draw from one graph and its share of the corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub graph: String,
    pub tasks: Vec<TaskKind>,
    #[serde(default = "default_weight")]
    pub weight: u32,
}

/// `total` records split over specs by weight, then evenly over each
/// spec's tasks. Remainders go to the largest fractional shares, earlier
/// entries first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPlan {
    pub total: usize,
    pub specs: Vec<CorpusSpec>,
}

fn largest_remainder(total: usize, weights: &[u64]) -> Vec<usize> {
    let sum: u64 = weights.iter().sum();
    let total = total as u64;
    let mut shares: Vec<usize> = weights.iter().map(|w| (total * w / sum) as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(total * weights[i] % sum), i));
    let left = total as usize - shares.iter().sum::<usize>();
    for &i in order.iter().take(left) {
        shares[i] += 1;
    }
    shares
}

impl CorpusPlan {
    /// `(graph, task, count)` in spec order.
    pub fn quotas(&self) -> Result<Vec<(String, TaskKind, usize)>, InstructError> {
        if self.specs.is_empty() {
            return Err(InstructError::InvalidPlan("no specs".into()));
        }
        for s in &self.specs {
            if s.weight == 0 || s.tasks.is_empty() {
                return Err(InstructError::InvalidPlan(format!("spec for `{}` needs tasks and a positive weight", s.graph)));
            }
        }
        let weights: Vec<u64> = self.specs.iter().map(|s| u64::from(s.weight)).collect();
        let per_spec = largest_remainder(self.total, &weights);
        let mut out = Vec::new();
        for (spec, n) in self.specs.iter().zip(per_spec) {
            let per_task = largest_remainder(n, &vec![1; spec.tasks.len()]);
            for (task, k) in spec.tasks.iter().zip(per_task) {
                out.push((spec.graph.clone(), *task, k));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub graph: String,
    pub task: TaskKind,
    pub requested: usize,
    pub written: usize,
    pub skipped: usize,
    /// First error seen for this row, if any.
    pub first_error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub rows: Vec<SummaryRow>,
}

impl CorpusSummary {
    pub fn written(&self) -> usize {
        self.rows.iter().map(|r| r.written).sum()
    }

    pub fn skipped(&self) -> usize {
        self.rows.iter().map(|r| r.skipped).sum()
    }
}

/// Generate the records of `plan`. Pure in (graphs, plan, vocab, pool, seed).
pub fn build_corpus(
    graphs: &[&TextAttributedGraph],
    plan: &CorpusPlan,
    vocab: &Vocabulary,
    pool: &PromptPool,
    seed: u64,
) -> Result<(Vec<CorpusRecord>, CorpusSummary), InstructError> {
    let mut records = Vec::new();
    let mut summary = CorpusSummary::default();
    for (graph_id, task, count) in plan.quotas()? {
        let graph = graphs
            .iter()
            .find(|g| g.graph_id() == graph_id)
            .ok_or_else(|| InstructError::UnknownGraph(graph_id.clone()))?;
        let forge = Forge::new(graph, vocab, pool);
        let made: Vec<Result<Instruction, InstructError>> = (0..count)
            .into_par_iter()
            .map(|i| forge.sample(task, derive_seed(seed, &["corpus", &graph_id, task.as_str(), &i.to_string()])))
            .collect();
        let mut row = SummaryRow {
            graph: graph_id.clone(),
            task,
            requested: count,
            written: 0,
            skipped: 0,
            first_error: None,
        };
        for r in made {
            match r {
                Ok(i) => {
                    row.written += 1;
                    records.push(CorpusRecord::from(i));
                }
                Err(e) => {
                    row.skipped += 1;
                    log::debug!("skipped {task} record on {graph_id}: {e}");
                    row.first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        summary.rows.push(row);
    }
    records.shuffle(&mut rng_for(seed, &["corpus_shuffle"]));
    Ok((records, summary))
}

/// [`build_corpus`] and write the result to `out`.
pub fn assemble_corpus(
    graphs: &[&TextAttributedGraph],
    plan: &CorpusPlan,
    vocab: &Vocabulary,
    pool: &PromptPool,
    seed: u64,
    out: &Path,
) -> Result<CorpusSummary, InstructError> {
    let (records, summary) = build_corpus(graphs, plan, vocab, pool, seed)?;
    write_corpus(&records, out)?;
    Ok(summary)
}

pub fn write_corpus(records: &[CorpusRecord], path: &Path) -> Result<(), InstructError> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>, InstructError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| InstructError::CorpusFormat {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeRecord;
    use crate::text::WordTokenizer;
    use crate::vocab::{build_vocabulary, merge};

    fn ring(id: &str, n: usize) -> (TextAttributedGraph, Vocabulary) {
        let nodes = (0..n)
            .map(|i| NodeRecord::new(format!("n{i}"), "t").with_label(if i % 2 == 0 { "even" } else { "odd" }))
            .collect();
        let edges: Vec<(String, String)> = (0..n).map(|i| (format!("n{i}"), format!("n{}", (i + 1) % n))).collect();
        let g = TextAttributedGraph::new(id, "computer-science", nodes, edges).unwrap();
        let reprs = (0..n).map(|i| (format!("n{i}"), format!("{id} node {i}"))).collect();
        let v = build_vocabulary(&reprs, &WordTokenizer, 10, id).unwrap();
        (g, v)
    }

    #[test]
    fn quota_split() {
        let plan = CorpusPlan {
            total: 40,
            specs: vec![
                CorpusSpec { graph: "a".into(), tasks: vec![TaskKind::NodeClassification, TaskKind::GenerativeLp], weight: 1 },
                CorpusSpec { graph: "b".into(), tasks: vec![TaskKind::NodeClassification, TaskKind::GenerativeLp], weight: 1 },
            ],
        };
        assert!(plan.quotas().unwrap().iter().all(|q| q.2 == 10));
        assert_eq!(largest_remainder(10, &[1, 1, 1]), [4, 3, 3]);
        assert_eq!(largest_remainder(7, &[1, 2]), [2, 5]);
        assert_eq!(largest_remainder(0, &[3]), [0]);
    }

    #[test]
    fn single_graph_nc() {
        let (g, v) = ring("a", 6);
        let plan = CorpusPlan {
            total: 5,
            specs: vec![CorpusSpec { graph: "a".into(), tasks: vec![TaskKind::NodeClassification], weight: 1 }],
        };
        let (records, summary) = build_corpus(&[&g], &plan, &v, &PromptPool::default(), 1).unwrap();
        assert_eq!(records.len(), 5);
        assert!(records.iter().all(|r| r.task == TaskKind::NodeClassification));
        assert_eq!(summary.skipped(), 0);
    }

    #[test]
    fn deterministic_and_round_trips() {
        let (a, va) = ring("a", 8);
        let (b, vb) = ring("b", 7);
        let v = merge(&[&va, &vb]).unwrap();
        let plan = CorpusPlan {
            total: 40,
            specs: vec![
                CorpusSpec { graph: "a".into(), tasks: TaskKind::ALL.to_vec(), weight: 1 },
                CorpusSpec { graph: "b".into(), tasks: TaskKind::ALL.to_vec(), weight: 1 },
            ],
        };
        let pool = PromptPool::default();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("c1.jsonl");
        let p2 = dir.path().join("c2.jsonl");
        assemble_corpus(&[&a, &b], &plan, &v, &pool, 3, &p1).unwrap();
        assemble_corpus(&[&a, &b], &plan, &v, &pool, 3, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        let back = read_corpus(&p1).unwrap();
        assert_eq!(back.len(), 40);
        let line = std::fs::read_to_string(&p1).unwrap().lines().next().unwrap().to_owned();
        let keys: Vec<String> = serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(&line)
            .unwrap()
            .keys()
            .cloned()
            .collect();
        assert_eq!(keys.len(), 6);
        let missing = CorpusPlan { total: 1, specs: vec![CorpusSpec { graph: "zz".into(), tasks: vec![TaskKind::GenerativeLp], weight: 1 }] };
        assert!(matches!(build_corpus(&[&a], &missing, &v, &pool, 0), Err(InstructError::UnknownGraph(_))));
    }
}
