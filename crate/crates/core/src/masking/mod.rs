//! Stratified masking: turn tokenized sentences into masked training examples
//! and compute the masked-LM loss from scorer distributions.
//!
//! Masking decisions are drawn once per word span with the probability of the
//! word's stratum; when a span is drawn every one of its tokens is corrupted.
//! All randomness comes from a counter-based generator keyed by
//! `(seed, example_index, span_index)`, so results are independent of thread
//! count and batch partitioning.

mod io;
mod loss;
mod policy;
mod sequence;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::strata::{StrataLexicon, StrataProportions, Stratum};

pub use io::{read_masked_examples, read_tokenized_sequences, write_masked_examples, write_tokenized_sequences};
pub use loss::mlm_loss;
pub use policy::{Corruption, MaskingPolicy, MaskingUnit};
pub use sequence::{detokenize, TokenizedSequence, WordSpan};

pub const DEFAULT_MASK_TOKEN: &str = "[MASK]";

/// A tokenized sequence after masking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub id: String,
    pub tokens: Vec<String>,
    pub mask_positions: Vec<usize>,
    /// Original token at each masked position.
    pub labels: BTreeMap<usize, String>,
    pub strata: BTreeMap<usize, Stratum>,
}

impl MaskedExample {
    pub fn validate(&self) -> Result<()> {
        if !self.mask_positions.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!("{}: mask positions not strictly increasing", self.id)));
        }
        let same_keys = |keys: Vec<&usize>| keys.into_iter().eq(self.mask_positions.iter());
        if !same_keys(self.labels.keys().collect()) || !same_keys(self.strata.keys().collect()) {
            return Err(Error::InvalidInput(format!(
                "{}: labels and strata must cover exactly the mask positions",
                self.id
            )));
        }
        if let Some(&p) = self.mask_positions.iter().find(|&&p| p >= self.tokens.len()) {
            return Err(Error::PositionOutOfRange {
                position: p,
                len: self.tokens.len(),
            });
        }
        Ok(())
    }
}

pub fn assign_mask_probability(stratum: Stratum, policy: &MaskingPolicy) -> f64 {
    policy.probability(stratum)
}

/// Σ stratum fraction × stratum masking probability.
pub fn expected_mask_fraction(props: &StrataProportions, policy: &MaskingPolicy) -> f64 {
    Stratum::ALL
        .iter()
        .map(|&s| props.get(s) * policy.probability(s))
        .sum()
}

/// Stream of uniform draws for one masking unit.
fn unit_rng(seed: u64, example_index: u64, unit_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(example_index);
    rng.set_word_pos((unit_index as u128) << 32);
    rng
}

/// Applies a [`MaskingPolicy`] to tokenized sequences.
pub struct Collator<'a> {
    lexicon: &'a StrataLexicon,
    policy: MaskingPolicy,
    mask_token: String,
    replacement_vocab: OnceLock<Vec<String>>,
}

impl<'a> Collator<'a> {
    pub fn new(lexicon: &'a StrataLexicon, policy: MaskingPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Collator {
            lexicon,
            policy,
            mask_token: DEFAULT_MASK_TOKEN.to_string(),
            replacement_vocab: OnceLock::new(),
        })
    }

    pub fn with_mask_token(mut self, token: impl Into<String>) -> Self {
        self.mask_token = token.into();
        self
    }

    /// Tokens used for the random-replacement branch of BERT-style corruption.
    /// Defaults to the sorted lexicon words.
    pub fn with_replacement_vocab(self, vocab: Vec<String>) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::Config("replacement vocabulary is empty".into()));
        }
        let cell = OnceLock::new();
        let _ = cell.set(vocab);
        Ok(Collator {
            replacement_vocab: cell,
            ..self
        })
    }

    pub fn policy(&self) -> &MaskingPolicy {
        &self.policy
    }

    fn replacement_vocab(&self) -> &[String] {
        self.replacement_vocab.get_or_init(|| {
            let mut v: Vec<String> = self
                .lexicon
                .stopwords()
                .iter()
                .chain(self.lexicon.dalechall().iter())
                .cloned()
                .collect();
            v.sort();
            v
        })
    }

    fn corrupt(&self, rng: &mut ChaCha8Rng, original: &str) -> String {
        match self.policy.corruption {
            Corruption::PureMask => self.mask_token.clone(),
            Corruption::Bert801010 => {
                let r: f64 = rng.random();
                if r < 0.8 {
                    self.mask_token.clone()
                } else if r < 0.9 {
                    let vocab = self.replacement_vocab();
                    vocab[rng.random_range(0..vocab.len())].clone()
                } else {
                    original.to_string()
                }
            }
        }
    }

    pub fn mask_sequence(&self, seq: &TokenizedSequence, example_index: u64) -> Result<MaskedExample> {
        if seq.word_spans.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut tokens = seq.tokens.clone();
        let mut labels = BTreeMap::new();
        let mut strata = BTreeMap::new();
        let mut mask = |rng: &mut ChaCha8Rng, pos: usize, stratum: Stratum| {
            labels.insert(pos, seq.tokens[pos].clone());
            strata.insert(pos, stratum);
            tokens[pos] = self.corrupt(rng, &seq.tokens[pos]);
        };
        for (span_index, span) in seq.word_spans.iter().enumerate() {
            let stratum = self.lexicon.classify(&span.word);
            let p = self.policy.probability(stratum);
            match self.policy.unit {
                MaskingUnit::Word => {
                    let mut rng = unit_rng(self.policy.seed, example_index, span_index);
                    if rng.random::<f64>() < p {
                        for pos in span.start..span.end {
                            mask(&mut rng, pos, stratum);
                        }
                    }
                }
                MaskingUnit::Token => {
                    for pos in span.start..span.end {
                        let mut rng = unit_rng(self.policy.seed, example_index, pos);
                        if rng.random::<f64>() < p {
                            mask(&mut rng, pos, stratum);
                        }
                    }
                }
            }
        }
        Ok(MaskedExample {
            id: seq.id.clone(),
            tokens,
            mask_positions: labels.keys().copied().collect(),
            labels,
            strata,
        })
    }

    /// Mask every sequence; `example_index` is the position in `seqs`.
    pub fn collate(&self, seqs: &[TokenizedSequence], exec: Execution) -> Result<Vec<MaskedExample>> {
        exec.try_map(seqs, |i, s| self.mask_sequence(s, i as u64))
    }
}

/// Mask one sequence with the literal `[MASK]` token.
pub fn mask_sequence(
    seq: &TokenizedSequence,
    lexicon: &StrataLexicon,
    policy: &MaskingPolicy,
    example_index: u64,
) -> Result<MaskedExample> {
    Collator::new(lexicon, policy.clone())?.mask_sequence(seq, example_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(text: &str) -> TokenizedSequence {
        TokenizedSequence::from_text("s", text)
    }

    #[test]
    fn default_probabilities() {
        let p = MaskingPolicy::kidlm_plus(0);
        assert_eq!(assign_mask_probability(Stratum::Stopword, &p), 0.15);
        assert_eq!(assign_mask_probability(Stratum::DaleChall, &p), 0.20);
        assert_eq!(assign_mask_probability(Stratum::Other, &p), 0.25);
        let b = MaskingPolicy::kidlm(0);
        for s in Stratum::ALL {
            assert_eq!(assign_mask_probability(s, &b), 0.15);
        }
    }

    #[test]
    fn certainty_masks_everything() {
        let lex = StrataLexicon::bundled();
        let s = seq("The cat chased a butterfly over spaghetti.");
        let ex = mask_sequence(&s, lex, &MaskingPolicy::custom(1.0, 1.0, 1.0, 3).unwrap(), 0).unwrap();
        assert_eq!(ex.mask_positions, (0..s.tokens.len()).collect::<Vec<_>>());
        assert!(ex.tokens.iter().all(|t| t == DEFAULT_MASK_TOKEN));
        let labels: Vec<_> = ex.labels.values().cloned().collect();
        assert_eq!(labels, s.tokens);
        ex.validate().unwrap();
    }

    #[test]
    fn impossibility_masks_nothing() {
        let lex = StrataLexicon::bundled();
        let s = seq("The cat chased a butterfly.");
        let ex = mask_sequence(&s, lex, &MaskingPolicy::custom(0.0, 0.0, 0.0, 3).unwrap(), 0).unwrap();
        assert!(ex.mask_positions.is_empty());
        assert_eq!(ex.tokens, s.tokens);
    }

    #[test]
    fn empty_sequence_errors() {
        let lex = StrataLexicon::bundled();
        let s = TokenizedSequence::new("e", vec![], vec![]).unwrap();
        assert!(matches!(
            mask_sequence(&s, lex, &MaskingPolicy::kidlm_plus(1), 0),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn deterministic_and_index_sensitive() {
        let lex = StrataLexicon::bundled();
        let s = seq("one two three four five six seven eight nine ten eleven twelve thirteen fourteen");
        let p = MaskingPolicy::custom(0.5, 0.5, 0.5, 42).unwrap();
        let a = mask_sequence(&s, lex, &p, 5).unwrap();
        let b = mask_sequence(&s, lex, &p, 5).unwrap();
        assert_eq!(a, b);
        let differs = (0..20).any(|i| mask_sequence(&s, lex, &p, i).unwrap() != a);
        assert!(differs);
    }

    #[test]
    fn subword_spans_masked_atomically() {
        let lex = StrataLexicon::bundled();
        let s = TokenizedSequence::new(
            "w",
            ["the", "butter", "##fly", "spag", "##het", "##ti"].map(String::from).to_vec(),
            vec![
                WordSpan::new(0, 1, "the"),
                WordSpan::new(1, 3, "butterfly"),
                WordSpan::new(3, 6, "spaghetti"),
            ],
        )
        .unwrap();
        let p = MaskingPolicy::custom(0.5, 0.5, 0.5, 9).unwrap();
        for i in 0..200 {
            let ex = mask_sequence(&s, lex, &p, i).unwrap();
            for span in &s.word_spans {
                let n = (span.start..span.end).filter(|p| ex.labels.contains_key(p)).count();
                assert!(n == 0 || n == span.end - span.start, "partial mask in {ex:?}");
            }
        }
    }

    #[test]
    fn bert_corruption_keeps_labels() {
        let lex = StrataLexicon::bundled();
        let s = seq(&"apple ".repeat(2000));
        let mut p = MaskingPolicy::custom(1.0, 1.0, 1.0, 5).unwrap();
        p.corruption = Corruption::Bert801010;
        let ex = mask_sequence(&s, lex, &p, 0).unwrap();
        assert_eq!(ex.mask_positions.len(), 2000);
        let masked = ex.tokens.iter().filter(|t| *t == DEFAULT_MASK_TOKEN).count() as f64 / 2000.0;
        assert!((masked - 0.8).abs() < 0.04, "{masked}");
        assert!(ex.labels.values().all(|l| l == "apple"));
    }

    #[test]
    fn expected_fraction_arithmetic() {
        let props = StrataProportions::reported(0.4593, 0.2182, 0.3245).unwrap();
        let f = expected_mask_fraction(&props, &MaskingPolicy::kidlm_plus(0));
        // 0.15 * 0.4593 + 0.20 * 0.2182 + 0.25 * 0.3245
        assert!((f - 0.19366).abs() < 1e-12, "{f}");
        let even = StrataProportions::new(0.5, 0.25, 0.25).unwrap();
        let uniform = expected_mask_fraction(&even, &MaskingPolicy::kidlm(0));
        assert!((uniform - 0.15).abs() < 1e-12);
        let single = StrataProportions::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(expected_mask_fraction(&single, &MaskingPolicy::kidlm_plus(0)), 0.15);
    }
}
