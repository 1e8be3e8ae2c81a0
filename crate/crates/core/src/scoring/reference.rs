use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{MaskedScorer, PrefixScorer, ScoredDistribution, ScorerDescriptor};
use crate::corpus::{segment_sentences, DocumentSet};
use crate::error::{Error, Result};
use crate::masking::DEFAULT_MASK_TOKEN;
use crate::text;

pub const UNK_TOKEN: &str = "[UNK]";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    /// Additive smoothing constant.
    pub smoothing: f64,
    /// Weight of the bigram term; the unigram gets the rest.
    pub bigram_weight: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            smoothing: 1.0,
            bigram_weight: 0.7,
        }
    }
}

/// Interpolated bigram model with additive smoothing over a closed vocabulary
/// (corpus types plus [`UNK_TOKEN`]).
///
/// A masked position scores `w` by `p(w | left) · p(right | w)` and
/// renormalizes. A missing left neighbour falls back to the unigram prior, a
/// missing right neighbour drops the factor. Neighbours that are themselves
/// mask tokens count as missing.
#[derive(Debug, Clone)]
pub struct ReferenceScorer {
    config: ReferenceConfig,
    descriptor: ScorerDescriptor,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    unk: u32,
    unigram: Vec<u64>,
    total: u64,
    /// Bigrams starting with each word.
    context: Vec<u64>,
    forward: Vec<BTreeMap<u32, u64>>,
    backward: Vec<BTreeMap<u32, u64>>,
    top_m: Option<usize>,
}

/// Fit on the words of every sentence of every document.
pub fn fit_reference_scorer(corpus: &DocumentSet, smoothing: f64) -> Result<ReferenceScorer> {
    let sentences: Vec<Vec<String>> = corpus
        .iter()
        .flat_map(segment_sentences)
        .map(|s| text::segment_words(&s.text).into_iter().map(String::from).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    ReferenceScorer::fit(
        &sentences,
        ReferenceConfig {
            smoothing,
            ..ReferenceConfig::default()
        },
    )
}

impl ReferenceScorer {
    /// Bigrams never cross sentence boundaries.
    pub fn fit(sentences: &[Vec<String>], config: ReferenceConfig) -> Result<Self> {
        if !(config.smoothing > 0.0 && config.smoothing.is_finite()) {
            return Err(Error::Config(format!("smoothing must be > 0, got {}", config.smoothing)));
        }
        if !(0.0..=1.0).contains(&config.bigram_weight) {
            return Err(Error::Config(format!("bigram weight {} not in [0,1]", config.bigram_weight)));
        }
        let mut types: BTreeSet<&str> = sentences.iter().flatten().map(String::as_str).collect();
        if types.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        types.insert(UNK_TOKEN);
        let vocab: Vec<String> = types.into_iter().map(String::from).collect();
        let index: HashMap<String, u32> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let v = vocab.len();
        let mut unigram = vec![0u64; v];
        let mut context = vec![0u64; v];
        let mut forward = vec![BTreeMap::new(); v];
        let mut backward = vec![BTreeMap::new(); v];
        let mut total = 0;
        for sent in sentences {
            let ids: Vec<u32> = sent.iter().map(|w| index[w.as_str()]).collect();
            for &id in &ids {
                unigram[id as usize] += 1;
                total += 1;
            }
            for pair in ids.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                context[a as usize] += 1;
                *forward[a as usize].entry(b).or_insert(0) += 1;
                *backward[b as usize].entry(a).or_insert(0) += 1;
            }
        }
        let unk = index[UNK_TOKEN];
        Ok(ReferenceScorer {
            config,
            descriptor: ScorerDescriptor {
                name: "reference".into(),
                vocab_size: v,
                mask_token: DEFAULT_MASK_TOKEN.into(),
                max_len: usize::MAX,
                unk_token: Some(UNK_TOKEN.into()),
            },
            vocab,
            index,
            unk,
            unigram,
            total,
            context,
            forward,
            backward,
            top_m: None,
        })
    }

    /// Truncate returned distributions to the `m` most likely tokens.
    pub fn with_top_m(mut self, m: usize) -> Self {
        self.top_m = Some(m.max(1));
        self
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(self.unk)
    }

    fn alpha_v(&self) -> f64 {
        self.config.smoothing * self.vocab.len() as f64
    }

    fn unigram_p(&self, w: u32) -> f64 {
        (self.unigram[w as usize] as f64 + self.config.smoothing) / (self.total as f64 + self.alpha_v())
    }

    /// Unigram probability of a token (unknown tokens map to [`UNK_TOKEN`]).
    pub fn unigram_probability(&self, token: &str) -> f64 {
        self.unigram_p(self.id(token))
    }

    fn bigram_p(&self, prev: u32, next: u32) -> f64 {
        let c = self.forward[prev as usize].get(&next).copied().unwrap_or(0) as f64;
        let lambda = self.config.bigram_weight;
        lambda * (c + self.config.smoothing) / (self.context[prev as usize] as f64 + self.alpha_v())
            + (1.0 - lambda) * self.unigram_p(next)
    }

    /// Interpolated `p(next | prev)`.
    pub fn bigram_probability(&self, prev: &str, next: &str) -> f64 {
        self.bigram_p(self.id(prev), self.id(next))
    }

    /// Unnormalized score of every vocabulary entry as the next token after `prev`.
    fn next_scores(&self, prev: Option<u32>) -> Vec<f64> {
        match prev {
            None => (0..self.vocab.len() as u32).map(|w| self.unigram_p(w)).collect(),
            Some(p) => {
                let lambda = self.config.bigram_weight;
                let denom = self.context[p as usize] as f64 + self.alpha_v();
                let mut s: Vec<f64> = (0..self.vocab.len() as u32)
                    .map(|w| lambda * self.config.smoothing / denom + (1.0 - lambda) * self.unigram_p(w))
                    .collect();
                for (&w, &c) in &self.forward[p as usize] {
                    s[w as usize] += lambda * c as f64 / denom;
                }
                s
            }
        }
    }

    fn masked_scores(&self, left: Option<u32>, right: Option<u32>) -> Vec<f64> {
        let mut s = self.next_scores(left);
        if let Some(r) = right {
            let lambda = self.config.bigram_weight;
            let tail = (1.0 - lambda) * self.unigram_p(r);
            let seen = &self.backward[r as usize];
            for (w, score) in s.iter_mut().enumerate() {
                let c = seen.get(&(w as u32)).copied().unwrap_or(0) as f64;
                let p = lambda * (c + self.config.smoothing) / (self.context[w] as f64 + self.alpha_v()) + tail;
                *score *= p;
            }
        }
        s
    }

    fn distribution(&self, position: usize, scores: Vec<f64>) -> ScoredDistribution {
        let z: f64 = scores.iter().sum();
        let d = ScoredDistribution::from_logprobs(
            position,
            self.vocab.iter().cloned().zip(scores.into_iter().map(|s| (s / z).ln())),
        );
        match self.top_m {
            Some(m) => d.truncate(m),
            None => d,
        }
    }

    fn neighbour(&self, tokens: &[String], pos: Option<usize>) -> Option<u32> {
        let t = tokens.get(pos?)?;
        (t != &self.descriptor.mask_token).then(|| self.id(t))
    }
}

impl MaskedScorer for ReferenceScorer {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.descriptor
    }

    fn score_positions(&self, tokens: &[String], positions: &[usize]) -> Result<Vec<ScoredDistribution>> {
        Ok(positions
            .iter()
            .map(|&p| {
                let left = self.neighbour(tokens, p.checked_sub(1));
                let right = self.neighbour(tokens, Some(p + 1));
                self.distribution(p, self.masked_scores(left, right))
            })
            .collect())
    }
}

impl PrefixScorer for ReferenceScorer {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.descriptor
    }

    fn score_next(&self, prefix: &[String]) -> Result<ScoredDistribution> {
        let prev = prefix.last().map(|t| self.id(t));
        Ok(self.distribution(prefix.len(), self.next_scores(prev)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::score_masked;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn abab() -> ReferenceScorer {
        ReferenceScorer::fit(&[toks("a b a b")], ReferenceConfig::default()).unwrap()
    }

    #[test]
    fn unigram_hand_arithmetic() {
        let s = abab();
        assert_eq!(s.vocab(), ["[UNK]", "a", "b"]);
        assert!((s.unigram_probability("a") - 3.0 / 7.0).abs() < 1e-15);
        assert!((s.unigram_probability("zzz") - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn left_context_only_is_bigram_row() {
        let s = abab();
        let d = score_masked(&s, &toks("a [MASK]"), &[1]).unwrap().remove(0);
        // bigrams a→b ×2, b→a ×1; context count of a is 2
        for (w, c) in [("a", 0.0), ("b", 2.0), ("[UNK]", 0.0)] {
            let uni = (if w == "[UNK]" { 0.0 } else { 2.0 } + 1.0) / 7.0;
            let expected = 0.7 * (c + 1.0) / (2.0 + 3.0) + 0.3 * uni;
            assert!((d.probability(w).unwrap() - expected).abs() < 1e-12, "{w}");
        }
        assert!((d.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_context_is_unigram() {
        let s = abab();
        let d = score_masked(&s, &toks("[MASK]"), &[0]).unwrap().remove(0);
        assert!((d.probability("a").unwrap() - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_fits() {
        assert!(matches!(ReferenceScorer::fit(&[], ReferenceConfig::default()), Err(Error::EmptyCorpus)));
        let cfg = ReferenceConfig {
            smoothing: 0.0,
            ..ReferenceConfig::default()
        };
        assert!(ReferenceScorer::fit(&[toks("a")], cfg).is_err());
    }

    #[test]
    fn prefix_rows_normalize() {
        let s = abab();
        for prefix in [vec![], toks("a"), toks("b"), toks("q")] {
            let d = s.score_next(&prefix).unwrap();
            assert!((d.mass() - 1.0).abs() < 1e-12);
            assert_eq!(d.position, prefix.len());
        }
    }
}
