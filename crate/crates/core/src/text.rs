//! Word segmentation shared by the corpus statistics, the strata classifier and
//! the reference scorer.

/// A word with its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSlice<'a> {
    pub start: usize,
    pub end: usize,
    pub text: &'a str,
}

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Strip leading and trailing non-alphanumeric characters.
pub fn strip_edge_punct(raw: &str) -> &str {
    raw.trim_matches(is_edge_punct)
}

/// Split on Unicode whitespace, strip edge punctuation and drop empty pieces.
pub fn segment_words(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(strip_edge_punct)
        .filter(|w| !w.is_empty())
        .collect()
}

/// Same as [`segment_words`] but keeps byte offsets into `text`.
pub fn segment_words_with_offsets(text: &str) -> Vec<WordSlice<'_>> {
    let mut out = Vec::new();
    let mut chunk_start = None;
    fn push<'t>(out: &mut Vec<WordSlice<'t>>, text: &'t str, s: usize, e: usize) {
        let raw = &text[s..e];
        let lead = raw.len() - raw.trim_start_matches(is_edge_punct).len();
        let stripped = strip_edge_punct(raw);
        if !stripped.is_empty() {
            out.push(WordSlice {
                start: s + lead,
                end: s + lead + stripped.len(),
                text: stripped,
            });
        }
    }
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                push(&mut out, text, s, i);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        push(&mut out, text, s, text.len());
    }
    out
}

pub fn word_count(text: &str) -> usize {
    segment_words(text).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_punctuation_and_drops_empties() {
        assert_eq!(segment_words("Cats purr. -- Dogs, bark!"), vec!["Cats", "purr", "Dogs", "bark"]);
        assert_eq!(segment_words("  \t\n"), Vec::<&str>::new());
    }

    #[test]
    fn keeps_internal_apostrophes() {
        assert_eq!(segment_words("\"don't\" mother-in-law."), vec!["don't", "mother-in-law"]);
    }

    #[test]
    fn offsets_point_at_words() {
        let text = "It decomposes, (quickly).";
        let ws = segment_words_with_offsets(text);
        let words: Vec<_> = ws.iter().map(|w| &text[w.start..w.end]).collect();
        assert_eq!(words, vec!["It", "decomposes", "quickly"]);
        assert_eq!(ws.iter().map(|w| w.text).collect::<Vec<_>>(), segment_words(text));
    }
}
