use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::instruct::{CorpusPlan, CorpusRecord, CorpusSpec, TaskKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    /// Train on the sources only; the target is unseen.
    Pretraining,
    /// Train on the sources and the target together.
    Cotraining,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub sources: Vec<String>,
    pub target: String,
    pub mode: TransferMode,
    pub tasks: Vec<TaskKind>,
    /// Training records in total.
    pub total: usize,
}

impl TransferConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.sources.is_empty() && self.mode == TransferMode::Pretraining {
            return Err(EvalError::InvalidTransfer("pretraining needs at least one source graph".into()));
        }
        if self.sources.contains(&self.target) {
            return Err(EvalError::InvalidTransfer(format!("target `{}` is also a source", self.target)));
        }
        if self.tasks.is_empty() {
            return Err(EvalError::InvalidTransfer("no tasks".into()));
        }
        Ok(())
    }

    /// Training corpus plan. Pretraining leaves the target out entirely.
    pub fn corpus_plan(&self) -> Result<CorpusPlan, EvalError> {
        self.validate()?;
        let mut graphs = self.sources.clone();
        if self.mode == TransferMode::Cotraining {
            graphs.push(self.target.clone());
        }
        Ok(CorpusPlan {
            total: self.total,
            specs: graphs
                .into_iter()
                .map(|graph| CorpusSpec {
                    graph,
                    tasks: self.tasks.clone(),
                    weight: 1,
                })
                .collect(),
        })
    }

    /// Training records that mention the target graph.
    pub fn target_records(&self, records: &[CorpusRecord]) -> usize {
        records.iter().filter(|r| r.graph == self.target).count()
    }
}
