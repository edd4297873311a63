use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::render_table;
use crate::gateway::UsageLedger;

/// Ledger growth and wall time of one measured step.
#[derive(Clone, Debug)]
pub struct RunSample {
    pub label: String,
    pub usage: UsageLedger,
    pub wall: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub label: String,
    pub backend_calls: u64,
    pub cache_hits: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub total_tokens: u64,
    pub wall_seconds: f64,
    /// Everything came from the cache.
    pub cached: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub rows: Vec<EfficiencyRow>,
    pub cumulative: EfficiencyRow,
}

fn row(label: &str, usage: &UsageLedger, wall: Duration) -> EfficiencyRow {
    let t = usage.total();
    EfficiencyRow {
        label: label.to_owned(),
        backend_calls: t.backend_calls(),
        cache_hits: t.cache_hits,
        input_tokens: t.input_tokens,
        output_tokens: t.output_tokens,
        total_tokens: t.total_tokens(),
        wall_seconds: wall.as_secs_f64(),
        cached: t.backend_calls() == 0 && t.cache_hits > 0,
    }
}

pub fn efficiency_report(samples: &[RunSample]) -> EfficiencyReport {
    let rows: Vec<EfficiencyRow> = samples.iter().map(|s| row(&s.label, &s.usage, s.wall)).collect();
    let mut cumulative = EfficiencyRow {
        label: "total".into(),
        backend_calls: 0,
        cache_hits: 0,
        input_tokens: 0,
        output_tokens: 0,
        total_tokens: 0,
        wall_seconds: 0.0,
        cached: false,
    };
    for r in &rows {
        cumulative.backend_calls += r.backend_calls;
        cumulative.cache_hits += r.cache_hits;
        cumulative.input_tokens += r.input_tokens;
        cumulative.output_tokens += r.output_tokens;
        cumulative.total_tokens += r.total_tokens;
        cumulative.wall_seconds += r.wall_seconds;
    }
    cumulative.cached = cumulative.backend_calls == 0 && cumulative.cache_hits > 0;
    EfficiencyReport { rows, cumulative }
}

impl EfficiencyReport {
    /// Aligned columns; fully cached rows show `n/a` for new cost.
    pub fn to_text(&self) -> String {
        let cells = |r: &EfficiencyRow| {
            let new = |v: u64| if r.cached { "n/a".to_owned() } else { v.to_string() };
            vec![
                r.label.clone(),
                new(r.backend_calls),
                r.cache_hits.to_string(),
                new(r.input_tokens),
                new(r.output_tokens),
                new(r.total_tokens),
                format!("{:.3}", r.wall_seconds),
            ]
        };
        let mut rows: Vec<Vec<String>> = self.rows.iter().map(cells).collect();
        rows.push(cells(&self.cumulative));
        render_table(
            &["step", "calls", "cache_hits", "input_tokens", "output_tokens", "total_tokens", "seconds"],
            &rows,
        )
    }
}
