//! Prefix-tree constrained decoding over language-based node IDs.

mod codec;
mod search;
mod tree;

use thiserror::Error;

pub use codec::{read_tree, write_tree, TRIE_FORMAT_VERSION};
pub use search::{
    decode_beam, decode_beam_counted, decode_greedy, decode_greedy_counted, BeamOptions, DecodeResult, DecodeStats,
    FnScorer, NextTokenScorer, ScorerError,
};
pub use tree::{build_tree, step_count_bound, PrefixTree, TrieNode, END_TOKEN};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("duplicate candidate {0}")]
    DuplicateCandidate(String),
    #[error("candidate {node} uses reserved or empty token `{token}`")]
    ReservedToken { node: String, token: String },
    #[error("scorer failed: {0}")]
    ScorerFailure(String),
    #[error("beam width must be at least 1")]
    InvalidBeamWidth,
    #[error("trie file: {0}")]
    TrieFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
