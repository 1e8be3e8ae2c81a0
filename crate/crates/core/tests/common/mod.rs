#![allow(dead_code)]

use kidlm_forge::masking::DEFAULT_MASK_TOKEN;
use kidlm_forge::scoring::{MaskedScorer, ScoredDistribution, ScorerDescriptor};
use kidlm_forge::Result;

/// Returns the same distribution at every masked position.
pub struct FixedScorer {
    desc: ScorerDescriptor,
    probs: Vec<(String, f64)>,
}

impl FixedScorer {
    pub fn new(probs: Vec<(String, f64)>) -> Self {
        FixedScorer {
            desc: ScorerDescriptor {
                name: "fixed".into(),
                vocab_size: probs.len(),
                mask_token: DEFAULT_MASK_TOKEN.into(),
                max_len: 4096,
                unk_token: None,
            },
            probs,
        }
    }

    pub fn uniform(vocab: &[String]) -> Self {
        let p = 1.0 / vocab.len() as f64;
        Self::new(vocab.iter().map(|w| (w.clone(), p)).collect())
    }

    pub fn with_unk(mut self, unk: &str) -> Self {
        self.desc.unk_token = Some(unk.into());
        self
    }
}

impl MaskedScorer for FixedScorer {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.desc
    }

    fn score_positions(&self, _tokens: &[String], positions: &[usize]) -> Result<Vec<ScoredDistribution>> {
        Ok(positions
            .iter()
            .map(|&p| ScoredDistribution::from_probabilities(p, self.probs.clone()))
            .collect())
    }
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

pub fn vocab(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i:02}")).collect()
}
