use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::eval::TransferConfig;
use crate::gateway::{GatewayConfig, RetryPolicy, DEFAULT_CONTEXT_WINDOW};
use crate::gnn::{GnnConfig, SampleRatio};
use crate::graph::GraphFiles;
use crate::instruct::{CorpusPlan, CorpusSpec, TaskKind, DEFAULT_CONTEXT_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Offline deterministic backend.
    Mock,
    /// OpenAI-compatible HTTP endpoint from `LLM_ENDPOINT`.
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Overridden by `LLM_MODEL` for the remote backend.
    pub model: String,
    pub max_in_flight: usize,
    pub token_budget: Option<u64>,
    pub context_window: usize,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    /// Defaults to `<out_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            model: "mock".into(),
            max_in_flight: 8,
            token_budget: None,
            context_window: DEFAULT_CONTEXT_WINDOW,
            timeout_secs: 60,
            max_attempts: 5,
            cache_dir: None,
        }
    }
}

impl BackendConfig {
    pub fn gateway_config(&self) -> GatewayConfig {
        GatewayConfig {
            context_window: self.context_window,
            token_budget: self.token_budget,
            max_in_flight: self.max_in_flight,
            retry: RetryPolicy {
                max_attempts: self.max_attempts,
                ..RetryPolicy::default()
            },
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

/// One input graph. Either `dir` (holding nodes.tsv, edges.tsv and an
/// optional labels.tsv) or explicit file paths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub id: String,
    pub domain: String,
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub nodes: Option<PathBuf>,
    #[serde(default)]
    pub edges: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
}

impl GraphSpec {
    pub fn files(&self) -> Result<GraphFiles, PipelineError> {
        let mut files = match &self.dir {
            Some(d) => GraphFiles::in_dir(d),
            None => GraphFiles {
                nodes: self.nodes.clone().ok_or_else(|| {
                    PipelineError::Config(format!("graph `{}` needs `dir` or `nodes` and `edges`", self.id))
                })?,
                edges: self.edges.clone().ok_or_else(|| {
                    PipelineError::Config(format!("graph `{}` needs `dir` or `nodes` and `edges`", self.id))
                })?,
                labels: None,
            },
        };
        if let Some(n) = &self.nodes {
            files.nodes = n.clone();
        }
        if let Some(e) = &self.edges {
            files.edges = e.clone();
        }
        if self.labels.is_some() {
            files.labels = self.labels.clone();
        }
        if files.labels.as_ref().is_some_and(|l| !l.exists()) {
            files.labels = None;
        }
        Ok(files)
    }

    fn resolve(&mut self, base: &Path) {
        for p in [&mut self.dir, &mut self.nodes, &mut self.edges, &mut self.labels].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    /// Defaults to `gnn.final_id_max_tokens`.
    pub max_tokens: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub total: usize,
    /// Defaults to every graph with every task, equal weights.
    pub specs: Vec<CorpusSpec>,
    /// Fraction of edges held out for link-prediction evaluation.
    pub link_test_fraction: SampleRatio,
    /// Labeled nodes are split into this many folds; one is held out.
    pub node_folds: usize,
    pub eval_fold: usize,
    pub context_cap: usize,
    /// Use one prompt variant everywhere instead of seeded choices.
    pub fixed_variant: Option<usize>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            total: 100,
            specs: Vec::new(),
            link_test_fraction: "0.2".parse().expect("valid ratio"),
            node_folds: 5,
            eval_fold: 0,
            context_cap: DEFAULT_CONTEXT_CAP,
            fixed_variant: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub beam_width: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self { beam_width: 5 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Seeds for the permutation report; empty skips it.
    pub permutation_seeds: Vec<u64>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Everything one pipeline run needs, usually read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub graphs: Vec<GraphSpec>,
    #[serde(default)]
    pub gnn: GnnConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub vocab: VocabConfig,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub transfer: Option<TransferConfig>,
    #[serde(default)]
    pub decode: DecodeConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

/// Command-line values that replace config keys.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<BackendKind>,
    pub max_in_flight: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl PipelineConfig {
    /// Parse TOML. Relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        for g in &mut cfg.graphs {
            g.resolve(base);
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        if let Some(c) = &mut cfg.backend.cache_dir {
            if c.is_relative() {
                *c = base.join(&*c);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Apply overrides; the global seed also becomes the GNN seed.
    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(b) = o.backend {
            self.backend.kind = b;
        }
        if let Some(m) = o.max_in_flight {
            self.backend.max_in_flight = m;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        self.gnn.seed = self.seed;
        self
    }

    /// Checks that need no backend: settings, unique graph ids and that
    /// input files exist.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.gnn.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.graphs.is_empty() {
            return Err(PipelineError::Config("no graphs configured".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for g in &self.graphs {
            if !seen.insert(g.id.as_str()) {
                return Err(PipelineError::Config(format!("graph id `{}` is used twice", g.id)));
            }
            let files = g.files()?;
            for p in [&files.nodes, &files.edges] {
                if !p.exists() {
                    return Err(PipelineError::Config(format!("graph `{}`: {} does not exist", g.id, p.display())));
                }
            }
        }
        if self.backend.max_in_flight == 0 {
            return Err(PipelineError::Config("backend.max_in_flight must be at least 1".into()));
        }
        if self.decode.beam_width == 0 {
            return Err(PipelineError::Config("decode.beam_width must be at least 1".into()));
        }
        if self.corpus.link_test_fraction.ratio() >= num_rational::Ratio::from_integer(1) {
            return Err(PipelineError::Config("corpus.link_test_fraction must be below 1".into()));
        }
        if self.corpus.node_folds < 2 || self.corpus.eval_fold >= self.corpus.node_folds {
            return Err(PipelineError::Config("corpus.node_folds must be at least 2 and exceed eval_fold".into()));
        }
        for spec in &self.corpus.specs {
            if !seen.contains(spec.graph.as_str()) {
                return Err(PipelineError::Config(format!("corpus spec names unknown graph `{}`", spec.graph)));
            }
        }
        if let Some(t) = &self.transfer {
            t.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
            for g in t.sources.iter().chain([&t.target]) {
                if !seen.contains(g.as_str()) {
                    return Err(PipelineError::Config(format!("transfer names unknown graph `{g}`")));
                }
            }
        }
        Ok(())
    }

    pub fn vocab_max_tokens(&self) -> usize {
        self.vocab.max_tokens.unwrap_or(self.gnn.final_id_max_tokens)
    }

    /// Training corpus plan: the transfer plan when configured, else the
    /// corpus specs, else every graph with every task.
    pub fn corpus_plan(&self) -> Result<CorpusPlan, PipelineError> {
        if let Some(t) = &self.transfer {
            return t.corpus_plan().map_err(|e| PipelineError::Config(e.to_string()));
        }
        let specs = if self.corpus.specs.is_empty() {
            self.graphs
                .iter()
                .map(|g| CorpusSpec {
                    graph: g.id.clone(),
                    tasks: TaskKind::ALL.to_vec(),
                    weight: 1,
                })
                .collect()
        } else {
            self.corpus.specs.clone()
        };
        Ok(CorpusPlan {
            total: self.corpus.total,
            specs,
        })
    }

    /// Short digest of the effective configuration.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..6])
    }
}
