//! Natural-language instructions built from node IDs and graph structure,
//! and multi-graph multi-task corpora made from them.

mod corpus;
mod forge;
mod pool;
mod prefix;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphError;
use crate::vocab::NodeRef;

pub use corpus::{
    assemble_corpus, build_corpus, read_corpus, write_corpus, CorpusPlan, CorpusRecord, CorpusSpec, CorpusSummary,
    SummaryRow,
};
pub use forge::{Context, Forge, DEFAULT_CONTEXT_CAP};
pub use pool::PromptPool;
pub use prefix::{adaptive_prefix, DomainRegistry};

#[derive(Debug, Error)]
pub enum InstructError {
    #[error("node `{0}` has no label")]
    MissingLabel(String),
    #[error("`{center}` and `{target}` are not connected")]
    NoHeldOutEdge { center: String, target: String },
    #[error("`{negative}` is not a valid negative for `{center}`")]
    InvalidNegative { center: String, negative: String },
    #[error("need one class with two members and another class")]
    InsufficientClasses,
    #[error("no node has two neighbors and a non-neighbor")]
    NoValidConfiguration,
    #[error("node `{0}` has no eligible configuration for this task")]
    NoCandidates(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("no ID for {0}")]
    MissingId(NodeRef),
    #[error("unknown graph `{0}`")]
    UnknownGraph(String),
    #[error("prompt pool: {0}")]
    Pool(String),
    #[error("invalid corpus plan: {0}")]
    InvalidPlan(String),
    #[error("corpus file line {line}: {message}")]
    CorpusFormat { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    NodeClassification,
    DiscriminativeLp,
    GenerativeLp,
    NodeDiscrimination,
    LinkDiscrimination,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::NodeClassification,
        TaskKind::DiscriminativeLp,
        TaskKind::GenerativeLp,
        TaskKind::NodeDiscrimination,
        TaskKind::LinkDiscrimination,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::NodeClassification => "node_classification",
            TaskKind::DiscriminativeLp => "discriminative_lp",
            TaskKind::GenerativeLp => "generative_lp",
            TaskKind::NodeDiscrimination => "node_discrimination",
            TaskKind::LinkDiscrimination => "link_discrimination",
        }
    }

    /// Placeholders every prompt variant of this task uses.
    pub fn fields(self) -> &'static [&'static str] {
        match self {
            TaskKind::NodeClassification | TaskKind::GenerativeLp => &["1hop", "2hop", "center"],
            TaskKind::DiscriminativeLp => &["1hop", "2hop", "cand_a", "cand_b", "center"],
            TaskKind::NodeDiscrimination => &["a", "b", "c"],
            TaskKind::LinkDiscrimination => &["a", "b", "c", "center"],
        }
    }

    /// Wording used in domain prefixes.
    pub fn phrase(self) -> &'static str {
        match self {
            TaskKind::NodeClassification => "node classification",
            TaskKind::DiscriminativeLp | TaskKind::GenerativeLp => "link prediction",
            TaskKind::NodeDiscrimination => "node discrimination",
            TaskKind::LinkDiscrimination => "link discrimination",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let short = match s {
            "nc" => Some(TaskKind::NodeClassification),
            "dlp" => Some(TaskKind::DiscriminativeLp),
            "glp" | "lp" => Some(TaskKind::GenerativeLp),
            "nd" => Some(TaskKind::NodeDiscrimination),
            "ld" => Some(TaskKind::LinkDiscrimination),
            _ => None,
        };
        short
            .or_else(|| TaskKind::ALL.into_iter().find(|t| t.as_str() == s))
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

/// One rendered instruction and its target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    pub target: String,
    pub task: TaskKind,
    pub graph_id: String,
    /// Center node; the odd node for node discrimination.
    pub center: String,
    pub variant: usize,
}

impl Instruction {
    /// Prepend a domain prefix on its own line; empty prefixes change nothing.
    pub fn with_prefix(mut self, prefix: &str) -> Self {
        if !prefix.is_empty() {
            self.text = format!("{prefix}\n{}", self.text);
        }
        self
    }
}
