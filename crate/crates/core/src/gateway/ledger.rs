use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Counters for one pipeline stage (the request tag).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageUsage {
    /// Completed `complete` calls, cached or not.
    pub calls: u64,
    pub cache_hits: u64,
    /// Prompt tokens of calls that reached the backend.
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Calls that ended in an error.
    pub failures: u64,
}

impl StageUsage {
    /// Calls answered by the backend rather than the cache.
    pub fn backend_calls(&self) -> u64 {
        self.calls - self.cache_hits
    }

    pub fn total_tokens(&self) -> u64 {
        self.input_tokens + self.output_tokens
    }

    fn add(&mut self, other: &StageUsage) {
        self.calls += other.calls;
        self.cache_hits += other.cache_hits;
        self.input_tokens += other.input_tokens;
        self.output_tokens += other.output_tokens;
        self.failures += other.failures;
    }

    fn minus(&self, earlier: &StageUsage) -> StageUsage {
        StageUsage {
            calls: self.calls.saturating_sub(earlier.calls),
            cache_hits: self.cache_hits.saturating_sub(earlier.cache_hits),
            input_tokens: self.input_tokens.saturating_sub(earlier.input_tokens),
            output_tokens: self.output_tokens.saturating_sub(earlier.output_tokens),
            failures: self.failures.saturating_sub(earlier.failures),
        }
    }
}

/// Per-stage usage counters. Token counts only; currency is left to the
/// caller (see [`UsageLedger::cost`]).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageLedger {
    pub stages: BTreeMap<String, StageUsage>,
}

impl UsageLedger {
    pub fn record_hit(&mut self, stage: &str) {
        let s = self.stages.entry(stage.to_owned()).or_default();
        s.calls += 1;
        s.cache_hits += 1;
    }

    pub fn record_call(&mut self, stage: &str, input_tokens: u64, output_tokens: u64) {
        let s = self.stages.entry(stage.to_owned()).or_default();
        s.calls += 1;
        s.input_tokens += input_tokens;
        s.output_tokens += output_tokens;
    }

    pub fn record_failure(&mut self, stage: &str) {
        self.stages.entry(stage.to_owned()).or_default().failures += 1;
    }

    pub fn stage(&self, stage: &str) -> StageUsage {
        self.stages.get(stage).copied().unwrap_or_default()
    }

    pub fn total(&self) -> StageUsage {
        let mut t = StageUsage::default();
        for s in self.stages.values() {
            t.add(s);
        }
        t
    }

    /// Usage accumulated since `earlier` was taken.
    pub fn since(&self, earlier: &UsageLedger) -> UsageLedger {
        let stages = self
            .stages
            .iter()
            .map(|(k, v)| (k.clone(), v.minus(&earlier.stage(k))))
            .collect();
        UsageLedger { stages }
    }

    /// Price the ledger with per-million-token rates.
    pub fn cost(&self, per_million_input: f64, per_million_output: f64) -> f64 {
        let t = self.total();
        (t.input_tokens as f64 * per_million_input + t.output_tokens as f64 * per_million_output)
            / 1e6
    }
}
