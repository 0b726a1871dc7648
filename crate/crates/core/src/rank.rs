//! Social-signal scoring, re-ranking, and the round-robin merge of
//! per-source result pages.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::model::SocialSummary;

/// Weights of the social score and of its blend with base relevance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankWeights {
    /// forwards
    pub alpha: f64,
    /// rating above neutral
    pub beta: f64,
    /// comments
    pub gamma: f64,
    /// library adds
    pub delta: f64,
    /// blend of the social score into the final score
    pub lambda: f64,
}

impl Default for RankWeights {
    fn default() -> Self {
        RankWeights { alpha: 1.0, beta: 1.0, gamma: 0.5, delta: 0.5, lambda: 0.25 }
    }
}

impl RankWeights {
    pub fn is_valid(&self) -> bool {
        [self.alpha, self.beta, self.gamma, self.delta, self.lambda]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
    }
}

fn damped(count: u64) -> f64 {
    libm::log2(1.0 + count as f64)
}

/// Log-damped additive score of an item's social signals. Ratings count only
/// above the neutral value 3 and never push the score below zero.
pub fn social_score(s: &SocialSummary, w: &RankWeights) -> f64 {
    let rating = match s.avg_rating {
        Some(avg) if s.rating_count > 0 => ((avg - 3.0) / 2.0).max(0.0),
        _ => 0.0,
    };
    w.alpha * damped(s.forward_count)
        + w.beta * rating
        + w.gamma * damped(s.comment_count)
        + w.delta * damped(s.library_count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reranked<T> {
    pub entry: T,
    pub base_rank: u32,
    pub final_score: f64,
    pub summary: SocialSummary,
}

/// Blend reciprocal base rank with the social score and sort by the result,
/// descending; ties keep base-rank order. With `lambda = 0` the input order
/// (by base rank) is returned unchanged.
pub fn rerank<T>(results: Vec<(T, u32, SocialSummary)>, w: &RankWeights) -> Vec<Reranked<T>> {
    let mut out: Vec<Reranked<T>> = results
        .into_iter()
        .map(|(entry, base_rank, summary)| {
            let base = 1.0 / f64::from(base_rank.max(1));
            let social = if w.lambda == 0.0 { 0.0 } else { w.lambda * social_score(&summary, w) };
            Reranked { entry, base_rank, final_score: base + social, summary }
        })
        .collect();
    out.sort_by(|a, b| {
        b.final_score
            .total_cmp(&a.final_score)
            .then(a.base_rank.cmp(&b.base_rank))
    });
    out
}

/// Interleave pages one element at a time, in page order, until all are
/// exhausted. Each page's internal order is preserved.
pub fn round_robin<T>(pages: Vec<Vec<T>>) -> Vec<T> {
    let total = pages.iter().map(Vec::len).sum();
    let mut iters: Vec<_> = pages.into_iter().map(Vec::into_iter).collect();
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        for it in iters.iter_mut() {
            if let Some(x) = it.next() {
                out.push(x);
            }
        }
    }
    out
}
