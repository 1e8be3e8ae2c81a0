use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

/// Tokens `[start, end)` forming one word. Serialized as `[start, end, "word"]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, String)", into = "(usize, usize, String)")]
pub struct WordSpan {
    pub start: usize,
    pub end: usize,
    pub word: String,
}

impl WordSpan {
    pub fn new(start: usize, end: usize, word: impl Into<String>) -> Self {
        WordSpan {
            start,
            end,
            word: word.into(),
        }
    }
}

impl From<(usize, usize, String)> for WordSpan {
    fn from((start, end, word): (usize, usize, String)) -> Self {
        WordSpan { start, end, word }
    }
}

impl From<WordSpan> for (usize, usize, String) {
    fn from(s: WordSpan) -> Self {
        (s.start, s.end, s.word)
    }
}

/// Join subword tokens, dropping `##` continuation prefixes and `Ġ` / `▁`
/// word-boundary markers.
pub fn detokenize(tokens: &[String]) -> String {
    tokens
        .iter()
        .map(|t| {
            t.strip_prefix("##")
                .or_else(|| t.strip_prefix('Ġ'))
                .or_else(|| t.strip_prefix('▁'))
                .unwrap_or(t)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSequence {
    pub id: String,
    pub tokens: Vec<String>,
    pub word_spans: Vec<WordSpan>,
}

impl TokenizedSequence {
    /// Validate that spans are contiguous, cover every token and match their tokens.
    pub fn new(id: impl Into<String>, tokens: Vec<String>, word_spans: Vec<WordSpan>) -> Result<Self> {
        let seq = TokenizedSequence {
            id: id.into(),
            tokens,
            word_spans,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        let mut expected_start = 0;
        for span in &self.word_spans {
            if span.start != expected_start || span.end <= span.start || span.end > self.tokens.len() {
                return Err(Error::InvalidInput(format!(
                    "{}: word span [{}, {}) breaks contiguous coverage",
                    self.id, span.start, span.end
                )));
            }
            let joined = detokenize(&self.tokens[span.start..span.end]);
            if joined != span.word {
                return Err(Error::InvalidInput(format!(
                    "{}: span word {:?} does not match tokens {:?}",
                    self.id, span.word, joined
                )));
            }
            expected_start = span.end;
        }
        if expected_start != self.tokens.len() {
            return Err(Error::InvalidInput(format!("{}: word spans do not cover all tokens", self.id)));
        }
        Ok(())
    }

    /// One token per word from the built-in word segmenter.
    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        let tokens: Vec<String> = text::segment_words(text).into_iter().map(String::from).collect();
        let word_spans = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| WordSpan::new(i, i + 1, t.clone()))
            .collect();
        TokenizedSequence {
            id: id.into(),
            tokens,
            word_spans,
        }
    }

    pub fn word_count(&self) -> usize {
        self.word_spans.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(t: &[&str]) -> Vec<String> {
        t.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn from_text_has_unit_spans() {
        let s = TokenizedSequence::from_text("a", "The cat, sat.");
        assert_eq!(s.tokens, toks(&["The", "cat", "sat"]));
        assert_eq!(s.word_spans[1], WordSpan::new(1, 2, "cat"));
        s.validate().unwrap();
    }

    #[test]
    fn rejects_gaps_and_mismatches() {
        let t = toks(&["butter", "##fly", "net"]);
        assert!(TokenizedSequence::new("x", t.clone(), vec![WordSpan::new(0, 2, "butterfly"), WordSpan::new(2, 3, "net")]).is_ok());
        assert!(TokenizedSequence::new("x", t.clone(), vec![WordSpan::new(0, 2, "butterfly")]).is_err());
        assert!(TokenizedSequence::new("x", t.clone(), vec![WordSpan::new(0, 1, "butter"), WordSpan::new(2, 3, "net")]).is_err());
        assert!(TokenizedSequence::new("x", t, vec![WordSpan::new(0, 2, "butterflies"), WordSpan::new(2, 3, "net")]).is_err());
    }

    #[test]
    fn span_wire_format() {
        let s = WordSpan::new(3, 5, "hello");
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"[3,5,"hello"]"#);
        assert_eq!(serde_json::from_str::<WordSpan>(r#"[3,5,"hello"]"#).unwrap(), s);
    }

    #[test]
    fn roberta_style_markers() {
        assert_eq!(detokenize(&toks(&["Ġbutter", "fly"])), "butterfly");
        assert_eq!(detokenize(&toks(&["▁spag", "hetti"])), "spaghetti");
    }
}
