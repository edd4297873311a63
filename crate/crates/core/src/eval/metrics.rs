use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::instruct::TaskKind;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    /// Which instruction this answers, e.g. its corpus line.
    pub reference: String,
    pub predicted: String,
    pub target: String,
}

impl PredictionRecord {
    pub fn new(reference: impl Into<String>, predicted: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            reference: reference.into(),
            predicted: predicted.into(),
            target: target.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub task: TaskKind,
    pub records: Vec<PredictionRecord>,
}

/// Collapse runs of whitespace and trim.
pub fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Exact-match rate after whitespace normalization.
pub fn accuracy<S: Scalar>(records: &[PredictionRecord]) -> Result<S, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let hits = records
        .iter()
        .filter(|r| normalize(&r.predicted) == normalize(&r.target))
        .count();
    Ok(S::from_count(hits) / S::from_count(records.len()))
}

/// Unweighted mean of per-class F1 over `classes`. A class with no true
/// positives, false positives or false negatives scores 0.
pub fn macro_f1<S: Scalar>(records: &[PredictionRecord], classes: &BTreeSet<String>) -> Result<S, EvalError> {
    if classes.is_empty() {
        return Err(EvalError::EmptyClassSet);
    }
    if records.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let pairs: Vec<(String, String)> = records
        .iter()
        .map(|r| (normalize(&r.predicted), normalize(&r.target)))
        .collect();
    let classes: BTreeSet<String> = classes.iter().map(|c| normalize(c)).collect();
    if let Some((_, t)) = pairs.iter().find(|(_, t)| !classes.contains(t)) {
        return Err(EvalError::UnknownClass(t.clone()));
    }
    let mut sum = S::zero();
    for c in &classes {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (p, t) in &pairs {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        if denom > 0 {
            sum = sum + S::from_count(2 * tp) / S::from_count(denom);
        }
    }
    Ok(sum / S::from_count(classes.len()))
}

/// Fraction of rankings whose first entry equals the target.
pub fn hr_at_1<S: Scalar>(rankings: &[(Vec<String>, String)]) -> Result<S, EvalError> {
    if rankings.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let mut hits = 0;
    for (i, (ranked, target)) in rankings.iter().enumerate() {
        let top = ranked.first().ok_or(EvalError::EmptyRanking(i))?;
        if normalize(top) == normalize(target) {
            hits += 1;
        }
    }
    Ok(S::from_count(hits) / S::from_count(rankings.len()))
}
