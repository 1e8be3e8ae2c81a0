use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::Document;
use crate::text;

const ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

fn abbreviations() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub word_count: usize,
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '»')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '“' | '‘' | '«')
}

/// The word ending at byte `end` (exclusive), i.e. the chunk since the last whitespace.
fn word_before(text: &str, end: usize) -> &str {
    let start = text[..end]
        .rfind(char::is_whitespace)
        .map_or(0, |i| i + text[i..].chars().next().map_or(1, char::len_utf8));
    &text[start..end]
}

fn is_abbreviation(word_with_period: &str) -> bool {
    let core = word_with_period
        .trim_end_matches('.')
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    if core.is_empty() {
        return false;
    }
    let mut chars = core.chars();
    // Single-letter initials such as "J. K. Rowling".
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_alphabetic() {
            return true;
        }
    }
    abbreviations().contains(core.to_lowercase().as_str())
}

/// Split raw text into trimmed sentence strings.
///
/// A boundary is a run of `.?!` (plus closing quotes/brackets) followed by
/// whitespace and then an uppercase letter or digit, optionally behind an
/// opening quote. Periods after known abbreviations and single-letter initials
/// do not end a sentence.
pub fn segment_text(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut sent_start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && is_terminator(chars[j].1) {
            j += 1;
        }
        let only_period = chars[i..j].iter().all(|&(_, c)| c == '.');
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let boundary_end = chars.get(j).map_or(text.len(), |&(p, _)| p);
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        if k == j || k >= chars.len() {
            i = j.max(i + 1);
            continue;
        }
        let mut m = k;
        while m < chars.len() && is_opener(chars[m].1) {
            m += 1;
        }
        let starts_sentence = chars
            .get(m)
            .is_some_and(|&(_, n)| n.is_uppercase() || n.is_ascii_digit());
        let guarded = only_period && j - i == 1 && is_abbreviation(word_before(text, pos + 1));
        if starts_sentence && !guarded {
            let piece = text[sent_start..boundary_end].trim();
            if !piece.is_empty() {
                out.push(piece);
            }
            sent_start = chars[k].0;
        }
        i = k;
    }
    let tail = text[sent_start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// Segment a document into indexed sentences.
pub fn segment_sentences(doc: &Document) -> Vec<Sentence> {
    segment_text(&doc.text)
        .into_iter()
        .enumerate()
        .map(|(index, s)| Sentence {
            doc_id: doc.id.clone(),
            index,
            text: s.to_string(),
            word_count: text::word_count(s),
        })
        .collect()
}
