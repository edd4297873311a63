use std::cmp::Ordering;

use super::{DecodeError, PrefixTree, END_TOKEN};
use crate::scalar::RealScalar;
use crate::vocab::NodeRef;

pub type ScorerError = Box<dyn std::error::Error + Send + Sync>;

/// Next-token scores for a decoding prefix, read as log-probabilities.
pub trait NextTokenScorer<S> {
    /// One score per entry of `allowed`, in the same order.
    fn score(&self, prefix: &[&str], allowed: &[&str]) -> Result<Vec<S>, ScorerError>;
}

/// Scorer backed by a closure.
pub struct FnScorer<F>(pub F);

impl<S, F> NextTokenScorer<S> for FnScorer<F>
where
    F: Fn(&[&str], &[&str]) -> Vec<S>,
{
    fn score(&self, prefix: &[&str], allowed: &[&str]) -> Result<Vec<S>, ScorerError> {
        Ok((self.0)(prefix, allowed))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult<S> {
    pub node: NodeRef,
    /// Tokens walked, including a closing end token.
    pub path: Vec<String>,
    pub score: S,
    pub steps: usize,
}

impl<S> DecodeResult<S> {
    /// The ID tokens without any end token.
    pub fn id_tokens(&self) -> &[String] {
        match self.path.split_last() {
            Some((last, rest)) if last == END_TOKEN => rest,
            _ => &self.path,
        }
    }

    pub fn rendered(&self) -> String {
        self.id_tokens().join(" ")
    }
}

/// Work done by one decode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecodeStats {
    pub scorer_calls: usize,
    pub child_evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamOptions<S> {
    pub width: usize,
    /// Ranking uses `score / steps^length_alpha`; zero disables it.
    pub length_alpha: S,
}

impl<S: RealScalar> BeamOptions<S> {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            length_alpha: S::zero(),
        }
    }
}

fn scores_at<S: RealScalar>(
    tree: &PrefixTree,
    at: usize,
    path: &[String],
    scorer: &dyn NextTokenScorer<S>,
    stats: &mut DecodeStats,
) -> Result<Vec<(String, usize, S)>, DecodeError> {
    let node = tree.node(at);
    let allowed: Vec<&str> = node.children.keys().map(String::as_str).collect();
    let prefix: Vec<&str> = path.iter().map(String::as_str).collect();
    stats.scorer_calls += 1;
    stats.child_evaluations += allowed.len();
    let scores = scorer
        .score(&prefix, &allowed)
        .map_err(|e| DecodeError::ScorerFailure(e.to_string()))?;
    if scores.len() != allowed.len() {
        return Err(DecodeError::ScorerFailure(format!(
            "{} scores for {} allowed tokens",
            scores.len(),
            allowed.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(DecodeError::ScorerFailure("NaN score".into()));
    }
    Ok(node
        .children
        .iter()
        .zip(scores)
        .map(|((t, &c), s)| (t.clone(), c, s))
        .collect())
}

pub fn decode_greedy<S: RealScalar>(
    tree: &PrefixTree,
    scorer: &dyn NextTokenScorer<S>,
) -> Result<DecodeResult<S>, DecodeError> {
    decode_greedy_counted(tree, scorer).map(|(r, _)| r)
}

/// Greedy walk: argmax child at each step, ties to the smaller token.
pub fn decode_greedy_counted<S: RealScalar>(
    tree: &PrefixTree,
    scorer: &dyn NextTokenScorer<S>,
) -> Result<(DecodeResult<S>, DecodeStats), DecodeError> {
    let mut stats = DecodeStats::default();
    let mut at = PrefixTree::ROOT;
    let mut path = Vec::new();
    let mut total = S::zero();
    loop {
        if let Some(node) = &tree.node(at).terminal {
            let steps = path.len();
            let result = DecodeResult {
                node: node.clone(),
                path,
                score: total,
                steps,
            };
            return Ok((result, stats));
        }
        let options = scores_at(tree, at, &path, scorer, &mut stats)?;
        let mut best = 0;
        for (i, o) in options.iter().enumerate().skip(1) {
            if o.2 > options[best].2 {
                best = i;
            }
        }
        let (token, child, score) = options.into_iter().nth(best).expect("internal nodes have children");
        total = total + score;
        path.push(token);
        at = child;
    }
}

struct Hypothesis<S> {
    at: usize,
    path: Vec<String>,
    score: S,
}

fn rank_key<S: RealScalar>(h: &Hypothesis<S>, alpha: S) -> S {
    if alpha == S::zero() || h.path.is_empty() {
        h.score
    } else {
        h.score / S::from_count(h.path.len()).powf(alpha)
    }
}

fn by_rank<S: RealScalar>(a: &Hypothesis<S>, b: &Hypothesis<S>, alpha: S) -> Ordering {
    rank_key(b, alpha)
        .partial_cmp(&rank_key(a, alpha))
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.path.cmp(&b.path))
}

pub fn decode_beam<S: RealScalar>(
    tree: &PrefixTree,
    scorer: &dyn NextTokenScorer<S>,
    width: usize,
) -> Result<Vec<DecodeResult<S>>, DecodeError> {
    decode_beam_counted(tree, scorer, BeamOptions::new(width)).map(|(r, _)| r)
}

/// Beam search; finished paths compete with open ones for the `width`
/// slots. Results are ranked best first, ties in token order.
pub fn decode_beam_counted<S: RealScalar>(
    tree: &PrefixTree,
    scorer: &dyn NextTokenScorer<S>,
    options: BeamOptions<S>,
) -> Result<(Vec<DecodeResult<S>>, DecodeStats), DecodeError> {
    if options.width == 0 {
        return Err(DecodeError::InvalidBeamWidth);
    }
    let mut stats = DecodeStats::default();
    let mut pool = vec![Hypothesis {
        at: PrefixTree::ROOT,
        path: Vec::new(),
        score: S::zero(),
    }];
    while pool.iter().any(|h| tree.node(h.at).terminal.is_none()) {
        let mut next = Vec::with_capacity(pool.len() * 2);
        for h in pool {
            if tree.node(h.at).terminal.is_some() {
                next.push(h);
                continue;
            }
            for (token, child, s) in scores_at(tree, h.at, &h.path, scorer, &mut stats)? {
                let mut path = h.path.clone();
                path.push(token);
                next.push(Hypothesis {
                    at: child,
                    path,
                    score: h.score + s,
                });
            }
        }
        next.sort_by(|a, b| by_rank(a, b, options.length_alpha));
        next.truncate(options.width);
        pool = next;
    }
    let results = pool
        .into_iter()
        .map(|h| DecodeResult {
            node: tree.node(h.at).terminal.clone().expect("loop ends on leaves"),
            steps: h.path.len(),
            path: h.path,
            score: h.score,
        })
        .collect();
    Ok((results, stats))
}
