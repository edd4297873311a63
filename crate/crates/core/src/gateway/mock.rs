use std::collections::BTreeSet;

use super::{BackendError, CompletionRequest, Completer};
use crate::text::{PromptTemplate, Tokenizer, WordTokenizer};

/// Deterministic offline backend.
///
/// Aggregation prompts answer with the lexicographically sorted union of
/// the center's and the neighbors' tokens; initialization prompts answer
/// with the tokens of the substituted fields in order. Both are cut to
/// `max_output_tokens`. Besides the registered templates, two compact
/// forms are understood: `AGG|center:<text>|nbrs:<t1>,<t2>,...` and
/// `INIT|<text>`.
#[derive(Clone, Debug, Default)]
pub struct MockCompleter {
    aggregate: Vec<PromptTemplate>,
    init: Vec<PromptTemplate>,
    tokenizer: WordTokenizer,
}

/// Remove `<p{k}>` position markers; they carry no content.
pub fn strip_position_markers(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find("<p") {
        let after = &rest[i + 2..];
        let digits = after.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 0 && after.as_bytes().get(digits) == Some(&b'>') {
            out.push_str(&rest[..i]);
            rest = &after[digits + 1..];
        } else {
            out.push_str(&rest[..i + 2]);
            rest = after;
        }
    }
    out.push_str(rest);
    out
}

impl MockCompleter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Recognize prompts rendered from these aggregation templates (fields
    /// `center` and `neighbors`) and initialization templates (any fields).
    pub fn with_templates(aggregate: Vec<PromptTemplate>, init: Vec<PromptTemplate>) -> Self {
        Self {
            aggregate,
            init,
            tokenizer: WordTokenizer,
        }
    }

    fn union(&self, parts: &[&str], budget: usize) -> String {
        let tokens: BTreeSet<String> = parts
            .iter()
            .flat_map(|p| self.tokenizer.tokenize(&strip_position_markers(p)))
            .collect();
        tokens.into_iter().take(budget).collect::<Vec<_>>().join(" ")
    }

    fn passthrough(&self, parts: &[&str], budget: usize) -> String {
        let tokens: Vec<String> = parts
            .iter()
            .flat_map(|p| self.tokenizer.tokenize(p))
            .take(budget)
            .collect();
        tokens.join(" ")
    }

    pub fn respond(&self, prompt: &str, budget: usize) -> Result<String, BackendError> {
        if let Some(rest) = prompt.strip_prefix("AGG|center:") {
            let (center, nbrs) = rest
                .split_once("|nbrs:")
                .ok_or_else(|| BackendError::UnparseablePrompt(prompt.to_owned()))?;
            let mut parts = vec![center];
            parts.extend(nbrs.split(',').filter(|s| !s.is_empty()));
            return Ok(self.union(&parts, budget));
        }
        if let Some(text) = prompt.strip_prefix("INIT|") {
            return Ok(self.passthrough(&[text], budget));
        }
        for template in &self.aggregate {
            if let Some(fields) = template.extract(prompt) {
                let center = fields.get("center").map(String::as_str).unwrap_or("");
                let nbrs = fields.get("neighbors").map(String::as_str).unwrap_or("");
                return Ok(self.union(&[center, nbrs], budget));
            }
        }
        for template in &self.init {
            if let Some(fields) = template.extract(prompt) {
                let ordered: Vec<&str> = template
                    .fields()
                    .filter_map(|f| fields.get(f).map(String::as_str))
                    .collect();
                return Ok(self.passthrough(&ordered, budget));
            }
        }
        Err(BackendError::UnparseablePrompt(prompt.chars().take(80).collect()))
    }
}

impl Completer for MockCompleter {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        self.respond(&request.prompt, request.max_output_tokens)
    }
}
