use std::collections::HashMap;

use crate::decoder::{NextTokenScorer, ScorerError};
use crate::scalar::RealScalar;
use crate::text::Tokenizer;

/// Untrained baseline: a token scores `ln(1 + n)` where `n` is how often
/// it occurs in the instruction text.
#[derive(Clone, Debug, Default)]
pub struct OverlapScorer {
    counts: HashMap<String, usize>,
}

impl OverlapScorer {
    pub fn from_text(text: &str, tokenizer: &dyn Tokenizer) -> Self {
        let mut counts = HashMap::new();
        for t in tokenizer.tokenize(text) {
            *counts.entry(t).or_insert(0) += 1;
        }
        Self { counts }
    }
}

impl<S: RealScalar> NextTokenScorer<S> for OverlapScorer {
    fn score(&self, _prefix: &[&str], allowed: &[&str]) -> Result<Vec<S>, ScorerError> {
        Ok(allowed
            .iter()
            .map(|t| S::from_count(1 + self.counts.get(*t).copied().unwrap_or(0)).ln())
            .collect())
    }
}
