use std::collections::{BTreeMap, BTreeSet};

use super::DecodeError;
use crate::vocab::{NodeRef, Vocabulary};

/// Closes an ID that is also a strict prefix of another ID. Cannot be
/// produced by the word tokenizer.
pub const END_TOKEN: &str = "</id>";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrieNode {
    pub token: String,
    pub children: BTreeMap<String, usize>,
    /// Set on leaves only.
    pub terminal: Option<NodeRef>,
}

/// Immutable token trie. Every root-to-leaf path spells one candidate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixTree {
    tokenizer_id: String,
    nodes: Vec<TrieNode>,
    candidate_count: usize,
    max_depth: usize,
}

impl PrefixTree {
    pub const ROOT: usize = 0;

    /// Build from `(node, tokens)` pairs.
    pub fn from_candidates<I>(tokenizer_id: impl Into<String>, candidates: I) -> Result<Self, DecodeError>
    where
        I: IntoIterator<Item = (NodeRef, Vec<String>)>,
    {
        let mut ends: BTreeMap<Vec<String>, NodeRef> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (node, tokens) in candidates {
            if tokens.is_empty() {
                return Err(DecodeError::ReservedToken {
                    node: node.to_string(),
                    token: String::new(),
                });
            }
            if let Some(bad) = tokens.iter().find(|t| t.is_empty() || t.as_str() == END_TOKEN) {
                return Err(DecodeError::ReservedToken {
                    node: node.to_string(),
                    token: bad.clone(),
                });
            }
            if !seen.insert(node.clone()) {
                return Err(DecodeError::DuplicateCandidate(node.to_string()));
            }
            if let Some(prev) = ends.insert(tokens.clone(), node.clone()) {
                return Err(DecodeError::DuplicateCandidate(format!("{node} (same ID as {prev})")));
            }
        }
        if ends.is_empty() {
            return Err(DecodeError::EmptyCandidateSet);
        }
        let mut tree = PrefixTree {
            tokenizer_id: tokenizer_id.into(),
            nodes: vec![TrieNode {
                token: String::new(),
                children: BTreeMap::new(),
                terminal: None,
            }],
            candidate_count: ends.len(),
            max_depth: 0,
        };
        for (tokens, node) in &ends {
            let mut at = Self::ROOT;
            for t in tokens {
                at = tree.child_or_insert(at, t);
            }
            tree.nodes[at].terminal = Some(node.clone());
        }
        tree.close_internal_terminals();
        Ok(tree)
    }

    fn child_or_insert(&mut self, at: usize, token: &str) -> usize {
        if let Some(&c) = self.nodes[at].children.get(token) {
            return c;
        }
        let idx = self.nodes.len();
        self.nodes.push(TrieNode {
            token: token.to_owned(),
            children: BTreeMap::new(),
            terminal: None,
        });
        self.nodes[at].children.insert(token.to_owned(), idx);
        idx
    }

    fn close_internal_terminals(&mut self) {
        for i in 0..self.nodes.len() {
            if !self.nodes[i].children.is_empty() {
                if let Some(node) = self.nodes[i].terminal.take() {
                    let end = self.child_or_insert(i, END_TOKEN);
                    self.nodes[end].terminal = Some(node);
                }
            }
        }
        self.max_depth = self.enumerate_paths().iter().map(|(_, p)| p.len()).max().unwrap_or(0);
        self.relayout_preorder();
    }

    /// Renumber the arena in preorder so equal trees have equal arenas.
    fn relayout_preorder(&mut self) {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![Self::ROOT];
        while let Some(at) = stack.pop() {
            order.push(at);
            stack.extend(self.nodes[at].children.values().rev());
        }
        let mut new_index = vec![0; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let mut old_nodes: Vec<Option<TrieNode>> = std::mem::take(&mut self.nodes).into_iter().map(Some).collect();
        self.nodes = order
            .iter()
            .map(|&old| {
                let mut n = old_nodes[old].take().expect("visited once");
                for c in n.children.values_mut() {
                    *c = new_index[*c];
                }
                n
            })
            .collect();
    }

    /// Rebuild from an arena, checking the structural invariants.
    pub(crate) fn from_arena(tokenizer_id: String, nodes: Vec<TrieNode>) -> Result<Self, String> {
        if nodes.is_empty() {
            return Err("no root".into());
        }
        let mut tree = PrefixTree {
            tokenizer_id,
            nodes,
            candidate_count: 0,
            max_depth: 0,
        };
        let mut reached = vec![false; tree.nodes.len()];
        let mut stack = vec![(Self::ROOT, 0usize)];
        let mut terminals = BTreeSet::new();
        while let Some((at, depth)) = stack.pop() {
            if std::mem::replace(&mut reached[at], true) {
                return Err(format!("node {at} is reachable twice"));
            }
            let n = &tree.nodes[at];
            match (&n.terminal, n.children.is_empty()) {
                (Some(t), true) => {
                    if !terminals.insert(t.clone()) {
                        return Err(format!("{t} appears twice"));
                    }
                    tree.max_depth = tree.max_depth.max(depth);
                }
                (None, false) => {}
                (Some(t), false) => return Err(format!("{t} marks an internal node")),
                (None, true) if at == Self::ROOT => return Err("empty tree".into()),
                (None, true) => return Err(format!("leaf {at} has no candidate")),
            }
            for (tok, &c) in &n.children {
                if c >= tree.nodes.len() || tree.nodes[c].token != *tok {
                    return Err(format!("bad child link {at} -> {c}"));
                }
                stack.push((c, depth + 1));
            }
        }
        if reached.iter().any(|r| !r) {
            return Err("unreachable records".into());
        }
        tree.candidate_count = terminals.len();
        Ok(tree)
    }

    pub fn tokenizer_id(&self) -> &str {
        &self.tokenizer_id
    }

    /// N.
    pub fn candidate_count(&self) -> usize {
        self.candidate_count
    }

    /// L_max: longest root-to-leaf path, counting an end token if any.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn node(&self, idx: usize) -> &TrieNode {
        &self.nodes[idx]
    }

    pub fn nodes(&self) -> &[TrieNode] {
        &self.nodes
    }

    /// Every root-to-leaf path with its candidate, end tokens included.
    pub(crate) fn enumerate_paths(&self) -> Vec<(NodeRef, Vec<String>)> {
        let mut out = Vec::new();
        let mut stack: Vec<(usize, Vec<String>)> = vec![(Self::ROOT, Vec::new())];
        while let Some((at, path)) = stack.pop() {
            let n = &self.nodes[at];
            if let Some(t) = &n.terminal {
                out.push((t.clone(), path.clone()));
            }
            for (tok, &c) in n.children.iter().rev() {
                let mut p = path.clone();
                p.push(tok.clone());
                stack.push((c, p));
            }
        }
        out
    }

    /// All candidates with their ID tokens, in token order.
    pub fn enumerate(&self) -> Vec<(NodeRef, Vec<String>)> {
        self.enumerate_paths()
            .into_iter()
            .map(|(n, mut p)| {
                if p.last().is_some_and(|t| t == END_TOKEN) {
                    p.pop();
                }
                (n, p)
            })
            .collect()
    }
}

/// Tree over the IDs in `vocab`, optionally limited to `candidates`.
pub fn build_tree(vocab: &Vocabulary, candidates: Option<&BTreeSet<NodeRef>>) -> Result<PrefixTree, DecodeError> {
    PrefixTree::from_candidates(
        vocab.tokenizer_id(),
        vocab
            .entries()
            .iter()
            .filter(|(k, _)| candidates.is_none_or(|c| c.contains(*k)))
            .map(|(k, v)| (k.clone(), v.tokens().to_vec())),
    )
}

/// N × L_max.
pub fn step_count_bound(tree: &PrefixTree) -> usize {
    tree.candidate_count() * tree.max_depth()
}
