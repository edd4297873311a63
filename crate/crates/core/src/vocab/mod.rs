//! Language-based graph vocabulary: every node maps to a short sequence
//! of ordinary tokens taken from its final textual representation.

mod io;
mod metrics;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::Tokenizer;

pub use io::{deserialize, serialize, VOCAB_FORMAT_VERSION};
pub use metrics::{coverage, entropy, token_counts};

/// Default ID length.
pub const DEFAULT_MAX_TOKENS: usize = 10;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("node `{0}` has an empty representation")]
    EmptyRepresentation(String),
    #[error("no representations given")]
    NoRepresentations,
    #[error("tokenizer mismatch: expected `{expected}`, found `{found}`")]
    TokenizerMismatch { expected: String, found: String },
    #[error("corrupt vocabulary file: {0}")]
    CorruptFile(String),
    #[error("nothing to merge")]
    EmptyMerge,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Node identity across graphs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub graph_id: String,
    pub node_id: String,
}

impl NodeRef {
    pub fn new(graph_id: impl Into<String>, node_id: impl Into<String>) -> Self {
        Self {
            graph_id: graph_id.into(),
            node_id: node_id.into(),
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.graph_id, self.node_id)
    }
}

/// A node's ID: a non-empty token sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LanguageId {
    tokens: Vec<String>,
}

impl LanguageId {
    pub fn new(tokens: Vec<String>) -> Option<Self> {
        (!tokens.is_empty() && tokens.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)))
            .then_some(Self { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces; how the ID appears in prompts.
    pub fn rendered(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Ordinal suffix token (`#2`, `#3`, ...) used to break ID collisions.
fn is_ordinal(token: &str) -> bool {
    token
        .strip_prefix('#')
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Hands out unique rendered IDs; colliding bases get ` #k`, `k = 2, 3, ...`.
#[derive(Default)]
struct Disambiguator {
    used: HashSet<String>,
    next_ordinal: HashMap<Vec<String>, usize>,
}

impl Disambiguator {
    fn assign(&mut self, base: &[String], max_tokens: usize) -> LanguageId {
        let plain = base.join(" ");
        if !base.is_empty() && self.used.insert(plain) {
            return LanguageId { tokens: base.to_vec() };
        }
        let keep = base.len().min(max_tokens.saturating_sub(1));
        let stem = base[..keep].to_vec();
        let k = self.next_ordinal.entry(stem.clone()).or_insert(2);
        loop {
            let mut tokens = stem.clone();
            tokens.push(format!("#{k}"));
            *k += 1;
            if self.used.insert(tokens.join(" ")) {
                return LanguageId { tokens };
            }
        }
    }
}

/// Mapping from nodes to language-based IDs with unique rendered strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokenizer_id: String,
    source_graphs: Vec<String>,
    max_tokens: usize,
    entries: BTreeMap<NodeRef, LanguageId>,
    by_rendered: HashMap<String, NodeRef>,
}

impl Vocabulary {
    /// Assemble from entries that are already unique. Fails on duplicates.
    pub fn from_entries(
        tokenizer_id: impl Into<String>,
        source_graphs: Vec<String>,
        max_tokens: usize,
        entries: BTreeMap<NodeRef, LanguageId>,
    ) -> Result<Self, VocabError> {
        let mut by_rendered = HashMap::with_capacity(entries.len());
        for (node, id) in &entries {
            if id.is_empty() {
                return Err(VocabError::EmptyRepresentation(node.to_string()));
            }
            if let Some(prev) = by_rendered.insert(id.rendered(), node.clone()) {
                return Err(VocabError::CorruptFile(format!(
                    "ID `{}` is shared by {prev} and {node}",
                    id.rendered()
                )));
            }
        }
        Ok(Self {
            tokenizer_id: tokenizer_id.into(),
            source_graphs,
            max_tokens,
            entries,
            by_rendered,
        })
    }

    pub fn tokenizer_id(&self) -> &str {
        &self.tokenizer_id
    }

    pub fn source_graphs(&self) -> &[String] {
        &self.source_graphs
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<NodeRef, LanguageId> {
        &self.entries
    }

    pub fn get(&self, node: &NodeRef) -> Option<&LanguageId> {
        self.entries.get(node)
    }

    /// Rendered ID of `node_id` in `graph_id`.
    pub fn rendered(&self, graph_id: &str, node_id: &str) -> Option<String> {
        self.get(&NodeRef::new(graph_id, node_id)).map(LanguageId::rendered)
    }

    /// Reverse lookup of a rendered ID.
    pub fn resolve(&self, rendered: &str) -> Option<&NodeRef> {
        self.by_rendered.get(rendered)
    }

    /// Entries of one graph.
    pub fn graph_entries<'a>(&'a self, graph_id: &'a str) -> impl Iterator<Item = (&'a NodeRef, &'a LanguageId)> {
        self.entries.iter().filter(move |(k, _)| k.graph_id == graph_id)
    }

    /// Copy holding only the entries accepted by `keep`.
    pub fn restricted(&self, mut keep: impl FnMut(&NodeRef) -> bool) -> Self {
        let entries: BTreeMap<_, _> = self
            .entries
            .iter()
            .filter(|(k, _)| keep(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Self::from_entries(self.tokenizer_id.clone(), self.source_graphs.clone(), self.max_tokens, entries)
            .expect("subset of unique IDs is unique")
    }

    /// Tokens in any ID that `tokenizer` could not have produced.
    pub fn out_of_vocabulary<'a>(&'a self, tokenizer: &dyn Tokenizer) -> Vec<&'a str> {
        self.entries
            .values()
            .flat_map(|id| id.tokens.iter())
            .filter(|t| !tokenizer.in_alphabet(t))
            .map(String::as_str)
            .collect()
    }
}

/// Build IDs for one graph: the first `max_tokens` tokens of each final
/// representation, disambiguated in node-id order.
pub fn build_vocabulary(
    final_reprs: &BTreeMap<String, String>,
    tokenizer: &dyn Tokenizer,
    max_tokens: usize,
    graph_id: &str,
) -> Result<Vocabulary, VocabError> {
    if final_reprs.is_empty() {
        return Err(VocabError::NoRepresentations);
    }
    let max_tokens = max_tokens.max(1);
    let mut names = Disambiguator::default();
    let mut entries = BTreeMap::new();
    for (node_id, text) in final_reprs {
        let mut base = tokenizer.tokenize(text);
        if base.is_empty() {
            return Err(VocabError::EmptyRepresentation(node_id.clone()));
        }
        base.truncate(max_tokens);
        entries.insert(NodeRef::new(graph_id, node_id.clone()), names.assign(&base, max_tokens));
    }
    Vocabulary::from_entries(tokenizer.tokenizer_id(), vec![graph_id.to_owned()], max_tokens, entries)
}

/// Union of vocabularies. Earlier inputs keep their IDs; later entries
/// whose rendered ID is taken are re-suffixed.
pub fn merge(vocabs: &[&Vocabulary]) -> Result<Vocabulary, VocabError> {
    let first = vocabs.first().ok_or(VocabError::EmptyMerge)?;
    let max_tokens = vocabs.iter().map(|v| v.max_tokens).max().unwrap_or(DEFAULT_MAX_TOKENS);
    let mut names = Disambiguator::default();
    let mut entries = BTreeMap::new();
    let mut source_graphs = Vec::new();
    for v in vocabs {
        if v.tokenizer_id != first.tokenizer_id {
            return Err(VocabError::TokenizerMismatch {
                expected: first.tokenizer_id.clone(),
                found: v.tokenizer_id.clone(),
            });
        }
        source_graphs.extend(v.source_graphs.iter().cloned());
        for (node, id) in &v.entries {
            if entries.contains_key(node) {
                continue;
            }
            let assigned = if names.used.insert(id.rendered()) {
                id.clone()
            } else {
                let base: &[String] = match id.tokens.split_last() {
                    Some((last, rest)) if is_ordinal(last) && !rest.is_empty() => rest,
                    _ => &id.tokens,
                };
                names.assign(base, max_tokens)
            };
            entries.insert(node.clone(), assigned);
        }
    }
    Vocabulary::from_entries(first.tokenizer_id.clone(), source_graphs, max_tokens, entries)
}
