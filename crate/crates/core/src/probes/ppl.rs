use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::corpus::segment_text;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::report::{Cell, Table};
use crate::scoring::{MaskedQuery, MaskedScorer};
use crate::text;

/// Probability assigned to a true token the scorer did not return, when no
/// unknown-token entry exists either: the unreported mass, floored here.
const MIN_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentencePpl {
    pub ppl: f64,
    pub length: usize,
    /// Positions scored through the unknown token or the unreported mass.
    pub unknown: usize,
}

/// Mask each position in turn and return `exp(-(1/L) Σ ln p(true token))`.
pub fn pseudo_perplexity<S: MaskedScorer + ?Sized>(tokens: &[String], scorer: &S) -> Result<SentencePpl> {
    if tokens.is_empty() {
        return Err(Error::EmptySequence);
    }
    let desc = scorer.descriptor();
    if tokens.len() > desc.max_len {
        return Err(Error::InvalidInput(format!(
            "sentence of {} tokens exceeds scorer limit {}",
            tokens.len(),
            desc.max_len
        )));
    }
    let queries: Vec<MaskedQuery> = (0..tokens.len())
        .map(|i| {
            let mut t = tokens.to_vec();
            t[i] = desc.mask_token.clone();
            MaskedQuery {
                id: i.to_string(),
                tokens: t,
                mask_positions: vec![i],
            }
        })
        .collect();
    let mut nll = 0.0;
    let mut unknown = 0;
    for (truth, result) in tokens.iter().zip(scorer.score_batch(&queries)) {
        let dist = result?.into_iter().next().ok_or_else(|| Error::Scorer("no distribution".into()))?;
        let lp = match dist.logprob(truth) {
            Some(lp) => lp,
            None => {
                unknown += 1;
                match desc.unk_token.as_deref().and_then(|u| dist.logprob(u)) {
                    Some(lp) => lp,
                    None => (1.0 - dist.mass()).max(MIN_RESIDUAL).ln(),
                }
            }
        };
        nll -= lp;
    }
    Ok(SentencePpl {
        ppl: (nll / tokens.len() as f64).exp(),
        length: tokens.len(),
        unknown,
    })
}

/// One line of graded-text input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedText {
    pub grade: u8,
    pub doc_id: String,
    pub text: String,
}

pub fn read_graded_texts<R: BufRead>(reader: R) -> Result<Vec<GradedText>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?;
        if crate::corpus::is_meta_line(&value) {
            continue;
        }
        out.push(serde_json::from_value(value).map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Segment each text into sentences of words, bucketed by grade.
pub fn grade_buckets(texts: &[GradedText]) -> BTreeMap<u8, Vec<Vec<String>>> {
    let mut out: BTreeMap<u8, Vec<Vec<String>>> = BTreeMap::new();
    for t in texts {
        let bucket = out.entry(t.grade).or_default();
        for sent in segment_text(&t.text) {
            let words: Vec<String> = text::segment_words(sent).into_iter().map(String::from).collect();
            if !words.is_empty() {
                bucket.push(words);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradeStat {
    pub mean_ppl: f64,
    pub sentences: usize,
    pub unknown_tokens: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradeReport {
    pub scorer: String,
    pub grades: BTreeMap<u8, GradeStat>,
}

/// Mean sentence pseudo-perplexity per grade.
pub fn grade_level_eval<S: MaskedScorer + ?Sized>(
    grade_map: &BTreeMap<u8, Vec<Vec<String>>>,
    scorer: &S,
    exec: Execution,
) -> Result<GradeReport> {
    let mut grades = BTreeMap::new();
    for (&grade, sentences) in grade_map {
        if sentences.is_empty() {
            return Err(Error::EmptyBucket(format!("grade {grade}")));
        }
        let ppls = exec.try_map(sentences, |_, s| pseudo_perplexity(s, scorer))?;
        let mean_ppl = ppls.iter().map(|p| p.ppl).sum::<f64>() / ppls.len() as f64;
        grades.insert(
            grade,
            GradeStat {
                mean_ppl,
                sentences: ppls.len(),
                unknown_tokens: ppls.iter().map(|p| p.unknown).sum(),
            },
        );
    }
    Ok(GradeReport {
        scorer: scorer.descriptor().name.clone(),
        grades,
    })
}

fn ordinal(n: u8) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// Models as rows, grades as columns.
pub fn grade_table(reports: &[(String, GradeReport)]) -> Table {
    let grades: std::collections::BTreeSet<u8> = reports.iter().flat_map(|(_, r)| r.grades.keys().copied()).collect();
    let mut header = vec!["Model".to_string()];
    header.extend(grades.iter().map(|&g| ordinal(g)));
    let mut table = Table::new(header);
    for (model, report) in reports {
        let mut row = vec![Cell::Text(model.clone())];
        row.extend(grades.iter().map(|g| match report.grades.get(g) {
            Some(s) => Cell::Num(s.mean_ppl),
            None => Cell::Missing,
        }));
        table.push(row);
    }
    table
}
