use std::ops::Range;

use super::{ProbeQuery, QueryForm};
use crate::error::{Error, Result};
use crate::scoring::{score_masked, MaskedScorer};
use crate::text;

#[derive(Debug, Clone, PartialEq)]
pub struct ClozeResult {
    /// `(token, probability)` in rank order.
    pub items: Vec<(String, f64)>,
    /// Set when fewer than `k` tokens were available.
    pub note: Option<String>,
}

/// The `k` most likely fillers for the query's mask slot; ties go to the
/// lexicographically smaller token.
pub fn cloze_topk<S: MaskedScorer + ?Sized>(query: &ProbeQuery, scorer: &S, k: usize) -> Result<ClozeResult> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if query.form != QueryForm::Masked {
        return Err(Error::InvalidInput("cloze probing needs a masked query".into()));
    }
    let mask = &scorer.descriptor().mask_token;
    let tokens = query.tokens(mask);
    let pos = tokens
        .iter()
        .position(|t| t == mask)
        .ok_or_else(|| Error::InvalidInput(format!("no mask slot in {:?}", query.text)))?;
    let dist = score_masked(scorer, &tokens, &[pos])?.remove(0);
    let note = (k > dist.entries.len()).then(|| format!("k-exceeds-vocab: {} tokens available", dist.entries.len()));
    Ok(ClozeResult {
        items: dist.top(k).iter().map(|(t, lp)| (t.clone(), lp.exp())).collect(),
        note,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simplification {
    pub original: String,
    pub masked_tokens: Vec<String>,
    pub masked_text: String,
    /// `(substitute, probability)` in rank order, original word excluded.
    pub substitutes: Vec<(String, f64)>,
}

/// Replace the token span with a single mask and rank substitutes.
pub fn lexical_simplification_probe<S: MaskedScorer + ?Sized>(
    tokens: &[String],
    span: Range<usize>,
    scorer: &S,
    k: usize,
) -> Result<Simplification> {
    if span.start >= span.end || span.end > tokens.len() {
        return Err(Error::PositionOutOfRange {
            position: span.end.max(span.start),
            len: tokens.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let mask = scorer.descriptor().mask_token.clone();
    let original = tokens[span.clone()].join(" ");
    let mut masked_tokens = tokens[..span.start].to_vec();
    masked_tokens.push(mask);
    masked_tokens.extend_from_slice(&tokens[span.end..]);
    let dist = score_masked(scorer, &masked_tokens, &[span.start])?.remove(0);
    let folded = original.to_lowercase();
    let substitutes = dist
        .entries
        .iter()
        .filter(|(t, _)| t.to_lowercase() != folded)
        .take(k)
        .map(|(t, lp)| (t.clone(), lp.exp()))
        .collect();
    Ok(Simplification {
        masked_text: masked_tokens.join(" "),
        original,
        masked_tokens,
        substitutes,
    })
}

/// Locate `complex_word` (case-insensitive, first occurrence) in `sentence`
/// and probe it; `masked_text` keeps the sentence's own punctuation.
pub fn simplify_sentence<S: MaskedScorer + ?Sized>(
    sentence: &str,
    complex_word: &str,
    scorer: &S,
    k: usize,
) -> Result<Simplification> {
    let words = text::segment_words_with_offsets(sentence);
    let target = complex_word.trim().to_lowercase();
    let idx = words
        .iter()
        .position(|w| w.text.to_lowercase() == target)
        .ok_or_else(|| Error::InvalidInput(format!("{complex_word:?} not found in sentence")))?;
    let tokens: Vec<String> = words.iter().map(|w| w.text.to_string()).collect();
    let mut out = lexical_simplification_probe(&tokens, idx..idx + 1, scorer, k)?;
    let w = &words[idx];
    out.masked_text = format!("{}{}{}", &sentence[..w.start], scorer.descriptor().mask_token, &sentence[w.end..]);
    Ok(out)
}
