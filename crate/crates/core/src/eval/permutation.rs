use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::gnn::{Permutation, PromptGnn};
use crate::graph::TextAttributedGraph;

/// One permuted run scored against the unpermuted run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationRow {
    pub variant: String,
    pub seed: u64,
    /// Fraction of nodes whose final representation equals the baseline.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationSummary {
    pub variant: String,
    pub mean: f64,
    pub std: f64,
}

fn variant_name(p: Permutation) -> &'static str {
    match p {
        Permutation::None => "none",
        Permutation::ShuffleNodes { .. } => "shuffle_nodes",
        Permutation::ShuffleTokens { .. } => "shuffle_tokens",
    }
}

/// One row per (variant, seed), nodes-then-tokens for each seed.
pub fn permutation_report(
    gnn: &PromptGnn<'_>,
    graph: &TextAttributedGraph,
    seeds: &[u64],
) -> Result<Vec<PermutationRow>, EvalError> {
    let baseline = gnn.run(graph)?;
    let base = baseline.final_reprs();
    let mut rows = Vec::new();
    for &seed in seeds {
        for p in [Permutation::ShuffleNodes { seed }, Permutation::ShuffleTokens { seed }] {
            let run = gnn.permuted_run(graph, p)?;
            let same = run.final_reprs().iter().filter(|(k, v)| base.get(*k) == Some(*v)).count();
            rows.push(PermutationRow {
                variant: variant_name(p).to_owned(),
                seed,
                score: same as f64 / base.len().max(1) as f64,
            });
        }
    }
    Ok(rows)
}

impl PermutationSummary {
    /// Mean and population standard deviation per variant.
    pub fn from_rows(rows: &[PermutationRow]) -> Vec<PermutationSummary> {
        let mut names: Vec<&str> = Vec::new();
        for r in rows {
            if !names.contains(&r.variant.as_str()) {
                names.push(&r.variant);
            }
        }
        names
            .into_iter()
            .map(|name| {
                let xs: Vec<f64> = rows.iter().filter(|r| r.variant == name).map(|r| r.score).collect();
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
                PermutationSummary {
                    variant: name.to_owned(),
                    mean,
                    std: var.sqrt(),
                }
            })
            .collect()
    }
}
