//! Model boundary: masked-position and next-token scorers, a deterministic
//! bigram reference scorer, and the JSON-over-HTTP remote protocol.

mod protocol;
mod reference;
mod remote;
pub mod server;

use std::cmp::Ordering;

use crate::error::{Error, Result};

pub use protocol::{
    decode, encode, MaskedQuery, MaskedRequest, PrefixQuery, PrefixRequest, QueryResult, ScoreResponse, TokenLogprob,
};
pub use reference::{fit_reference_scorer, ReferenceConfig, ReferenceScorer, UNK_TOKEN};
pub use remote::{remote_score, remote_score_prefix, RemoteLimits, RemoteScorer};
pub use server::{answer_masked_request, answer_prefix_request};

/// Probability distribution at one token position, sorted by descending
/// log-probability with ties in lexicographic token order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDistribution {
    pub position: usize,
    pub entries: Vec<(String, f64)>,
    /// Set when `entries` is a top-M slice of a larger distribution.
    pub truncated: bool,
}

fn rank_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

impl ScoredDistribution {
    pub fn from_logprobs(position: usize, entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut entries: Vec<_> = entries.into_iter().collect();
        entries.sort_by(rank_order);
        ScoredDistribution {
            position,
            entries,
            truncated: false,
        }
    }

    pub fn from_probabilities(position: usize, entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self::from_logprobs(position, entries.into_iter().map(|(t, p)| (t, p.ln())))
    }

    /// Keep the `m` most likely entries.
    pub fn truncate(mut self, m: usize) -> Self {
        if m < self.entries.len() {
            self.entries.truncate(m);
            self.truncated = true;
        }
        self
    }

    pub fn logprob(&self, token: &str) -> Option<f64> {
        self.entries.iter().find(|(t, _)| t == token).map(|e| e.1)
    }

    pub fn probability(&self, token: &str) -> Option<f64> {
        self.logprob(token).map(f64::exp)
    }

    /// Σ exp(logprob) over the entries present.
    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1.exp()).sum()
    }

    pub fn top(&self, k: usize) -> &[(String, f64)] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn is_sorted(&self) -> bool {
        self.entries.windows(2).all(|w| rank_order(&w[0], &w[1]) != Ordering::Greater)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScorerDescriptor {
    pub name: String,
    /// 0 when unknown.
    pub vocab_size: usize,
    pub mask_token: String,
    pub max_len: usize,
    pub unk_token: Option<String>,
}

/// Distributions for masked positions. Implementations must be
/// deterministic and safe for concurrent read-only use.
pub trait MaskedScorer: Sync {
    fn descriptor(&self) -> &ScorerDescriptor;

    /// Positions are in range and hold the mask token.
    fn score_positions(&self, tokens: &[String], positions: &[usize]) -> Result<Vec<ScoredDistribution>>;

    fn score_batch(&self, queries: &[MaskedQuery]) -> Vec<Result<Vec<ScoredDistribution>>> {
        queries
            .iter()
            .map(|q| score_masked(self, &q.tokens, &q.mask_positions))
            .collect()
    }
}

/// Next-token distributions after a prefix.
pub trait PrefixScorer: Sync {
    fn descriptor(&self) -> &ScorerDescriptor;

    fn score_next(&self, prefix: &[String]) -> Result<ScoredDistribution>;

    fn score_prefix_batch(&self, queries: &[PrefixQuery]) -> Vec<Result<ScoredDistribution>> {
        queries.iter().map(|q| self.score_next(&q.prefix_tokens)).collect()
    }
}

/// Score each of `positions`, which must hold the scorer's mask token.
pub fn score_masked<S: MaskedScorer + ?Sized>(
    scorer: &S,
    tokens: &[String],
    positions: &[usize],
) -> Result<Vec<ScoredDistribution>> {
    if positions.is_empty() {
        return Ok(Vec::new());
    }
    let mask = &scorer.descriptor().mask_token;
    for &p in positions {
        let found = tokens.get(p).ok_or(Error::PositionOutOfRange {
            position: p,
            len: tokens.len(),
        })?;
        if found != mask {
            return Err(Error::NotMaskToken {
                position: p,
                found: found.clone(),
                mask: mask.clone(),
            });
        }
    }
    let out = scorer.score_positions(tokens, positions)?;
    if out.len() != positions.len() {
        return Err(Error::Scorer(format!(
            "{} distributions returned for {} positions",
            out.len(),
            positions.len()
        )));
    }
    for (d, &p) in out.iter().zip(positions) {
        if d.position != p {
            return Err(Error::PositionMismatch {
                expected: p,
                actual: d.position,
            });
        }
    }
    Ok(out)
}
