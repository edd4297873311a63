//! End-to-end commands driven by one configuration file.

mod commands;
mod config;
mod scorer;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::decoder::DecodeError;
use crate::eval::EvalError;
use crate::gateway::{Completer, Gateway, GatewayError, RemoteCompleter, RemoteSettings, ResponseCache};
use crate::gnn::{GnnError, NodeFailure, TemplateRegistry};
use crate::graph::GraphError;
use crate::instruct::InstructError;
use crate::text::{Tokenizer, WordTokenizer};
use crate::vocab::VocabError;

pub use commands::{
    cmd_decode, cmd_eval, cmd_instruct, cmd_understand, cmd_vocab, DecodeSummary, EvalReport, EvalSummary,
    GraphSplit, InstructSummary, PredictionLine, TaskScores, UnderstandRow, UnderstandSummary, UsageSample,
    VocabSummary,
};
pub use config::{
    BackendConfig, BackendKind, CorpusConfig, DecodeConfig, EvalConfig, GraphSpec, Overrides, PipelineConfig,
    VocabConfig,
};
pub use scorer::OverlapScorer;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing {}: {hint}", path.display())]
    MissingArtifact { path: PathBuf, hint: String },
    #[error("graph `{graph}`: {} node(s) failed at layer {layer}, see {}", failures.len(), manifest.display())]
    Understand {
        graph: String,
        layer: usize,
        failures: Vec<NodeFailure>,
        manifest: PathBuf,
        budget_exceeded: bool,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Instruct(#[from] InstructError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 1 validation, 2 runtime, 3 token budget exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::MissingArtifact { .. } | PipelineError::Graph(_) => 1,
            PipelineError::Understand { budget_exceeded: true, .. } => 3,
            PipelineError::Gnn(e) if e.budget_exceeded() => 3,
            PipelineError::Gnn(GnnError::InvalidConfig(_)) => 1,
            PipelineError::Gateway(GatewayError::BudgetExceeded { .. }) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> PipelineError {
        let context = context.into();
        move |source| PipelineError::Io { context, source }
    }
}

/// File layout under the output directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.root.join("cache")
    }

    pub fn trace(&self, graph: &str) -> PathBuf {
        self.root.join("traces").join(format!("{graph}.jsonl"))
    }

    pub fn failure_manifest(&self, graph: &str) -> PathBuf {
        self.root.join("failures").join(format!("{graph}.json"))
    }

    pub fn usage_log(&self) -> PathBuf {
        self.root.join("usage.jsonl")
    }

    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.json")
    }

    pub fn split(&self, graph: &str) -> PathBuf {
        self.root.join("splits").join(format!("{graph}.json"))
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.jsonl")
    }

    pub fn eval_instructions(&self) -> PathBuf {
        self.root.join("eval.jsonl")
    }

    pub fn trie(&self, graph: &str) -> PathBuf {
        self.root.join("tries").join(format!("{graph}.bin"))
    }

    pub fn class_trie(&self, graph: &str) -> PathBuf {
        self.root.join("tries").join(format!("{graph}.classes.bin"))
    }

    pub fn predictions(&self) -> PathBuf {
        self.root.join("predictions.jsonl")
    }

    pub fn report(&self, config_hash: &str, ext: &str) -> PathBuf {
        self.root.join("reports").join(format!("report-{config_hash}.{ext}"))
    }

    pub(crate) fn require(&self, path: PathBuf, producer: &str) -> Result<PathBuf, PipelineError> {
        if path.exists() {
            Ok(path)
        } else {
            Err(PipelineError::MissingArtifact {
                path,
                hint: format!("run `tagflow {producer}` first"),
            })
        }
    }
}

pub fn pipeline_tokenizer() -> Arc<dyn Tokenizer> {
    Arc::new(WordTokenizer)
}

/// Gateway for `config`, caching on disk under the workspace.
pub fn build_gateway(config: &PipelineConfig) -> Result<(Gateway, String), PipelineError> {
    let b = &config.backend;
    let (backend, model): (Arc<dyn Completer>, String) = match b.kind {
        BackendKind::Mock => (Arc::new(TemplateRegistry::default().mock_completer()), b.model.clone()),
        BackendKind::Remote => {
            let settings = RemoteSettings::from_env()
                .ok_or_else(|| PipelineError::Config("remote backend needs LLM_ENDPOINT".into()))?;
            let model = settings.model.clone().unwrap_or_else(|| b.model.clone());
            let remote = RemoteCompleter::new(settings.endpoint.clone(), settings.api_key.clone(), b.timeout());
            (Arc::new(remote), model)
        }
    };
    let cache_dir = b
        .cache_dir
        .clone()
        .unwrap_or_else(|| Workspace::new(&config.out_dir).cache_dir());
    let gateway = Gateway::new(
        backend,
        ResponseCache::on_disk(cache_dir),
        pipeline_tokenizer(),
        b.gateway_config(),
    );
    Ok((gateway, model))
}
