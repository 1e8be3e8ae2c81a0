//! Evaluation suites: sentence pseudo-perplexity by grade level, the
//! stereotype probe, and cloze / lexical-simplification probing.

mod cloze;
mod ppl;
mod stereotype;
mod synthetic;

use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::DEFAULT_MASK_TOKEN;
use crate::text;

pub use cloze::{cloze_topk, lexical_simplification_probe, simplify_sentence, ClozeResult, Simplification};
pub use ppl::{
    grade_buckets, grade_level_eval, grade_table, pseudo_perplexity, read_graded_texts, GradeReport, GradeStat,
    GradedText, SentencePpl,
};
pub use stereotype::{
    aggregate_stereotype, build_stereotype_prompts, collect_completions, collect_prefix_completions,
    filter_completions, filter_completions_with, score_completions, AdjectiveCheck, AdjectiveLexicon, AllRowMode,
    CategoryScore, Classifier, Completion, CompletionSet, DropReason, ScoredRow, SentimentStub,
    SocialGroupRegistry, StereotypeReport, ToxicityStub, Verdict, NON_ADJECTIVE_STOPLIST,
};
pub use synthetic::{GradedTextGenerator, TIER_COUNT};

const BUNDLED_TEMPLATES: &str = include_str!("../../data/probe_templates.jsonl");

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProbeCategory {
    Preferences,
    EmotionsAndFeelings,
    WishesAndDesires,
    #[serde(rename = "stereotype")]
    Stereotype,
}

impl fmt::Display for ProbeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeCategory::Preferences => "Preferences",
            ProbeCategory::EmotionsAndFeelings => "EmotionsAndFeelings",
            ProbeCategory::WishesAndDesires => "WishesAndDesires",
            ProbeCategory::Stereotype => "stereotype",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryForm {
    /// Exactly one mask slot.
    Masked,
    /// Text ends where the next token should go.
    Prefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SocialGroup {
    pub category: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeQuery {
    pub template_id: String,
    pub category: ProbeCategory,
    pub text: String,
    pub form: QueryForm,
    pub group: Option<SocialGroup>,
}

impl ProbeQuery {
    pub fn masked(template_id: impl Into<String>, category: ProbeCategory, text: impl Into<String>) -> Result<Self> {
        let q = ProbeQuery {
            template_id: template_id.into(),
            category,
            text: text.into(),
            form: QueryForm::Masked,
            group: None,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let slots = self.text.matches(DEFAULT_MASK_TOKEN).count();
        let ok = match self.form {
            QueryForm::Masked => slots == 1,
            QueryForm::Prefix => slots == 0,
        };
        if !ok {
            return Err(Error::InvalidInput(format!(
                "query {:?} has {slots} mask slots for the {:?} form",
                self.text, self.form
            )));
        }
        Ok(())
    }

    /// Words of the query with the mask slot replaced by `mask_token`.
    pub fn tokens(&self, mask_token: &str) -> Vec<String> {
        query_tokens(&self.text, mask_token)
    }

    /// Index of the mask slot in [`ProbeQuery::tokens`].
    pub fn mask_position(&self) -> Option<usize> {
        self.tokens(DEFAULT_MASK_TOKEN).iter().position(|t| t == DEFAULT_MASK_TOKEN)
    }
}

/// Whitespace words with edge punctuation removed; a chunk containing the
/// `[MASK]` placeholder becomes `mask_token`.
pub fn query_tokens(text: &str, mask_token: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|chunk| {
            if chunk.contains(DEFAULT_MASK_TOKEN) {
                Some(mask_token.to_string())
            } else {
                let w = text::strip_edge_punct(chunk);
                (!w.is_empty()).then(|| w.to_string())
            }
        })
        .collect()
}

/// One line of the template file; `{group}` and `[MASK]` are literal placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeTemplate {
    pub id: String,
    pub category: ProbeCategory,
    pub template: String,
}

impl ProbeTemplate {
    pub fn instantiate(&self, group: Option<&SocialGroup>) -> Result<ProbeQuery> {
        let text = match group {
            Some(g) => self.template.replace("{group}", &g.name),
            None => self.template.clone(),
        };
        let q = ProbeQuery {
            template_id: self.id.clone(),
            category: self.category.clone(),
            text,
            form: QueryForm::Masked,
            group: group.cloned(),
        };
        q.validate()?;
        Ok(q)
    }
}

pub fn read_templates<R: BufRead>(reader: R) -> Result<Vec<ProbeTemplate>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: ProbeTemplate =
            serde_json::from_str(&line).map_err(|e| Error::InvalidInput(format!("template line {}: {e}", i + 1)))?;
        out.push(t);
    }
    Ok(out)
}

pub fn load_templates(path: &Path) -> Result<Vec<ProbeTemplate>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_templates(std::io::BufReader::new(f))
}

/// The eleven cloze templates across three categories.
pub fn bundled_templates() -> Vec<ProbeTemplate> {
    read_templates(BUNDLED_TEMPLATES.as_bytes()).expect("bundled templates parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_templates_are_single_slot() {
        let t = bundled_templates();
        assert_eq!(t.len(), 11);
        for tpl in &t {
            let q = tpl.instantiate(None).unwrap();
            assert_eq!(q.tokens("<mask>").iter().filter(|t| *t == "<mask>").count(), 1);
        }
        let counts = |c: ProbeCategory| t.iter().filter(|x| x.category == c).count();
        assert_eq!(counts(ProbeCategory::Preferences), 5);
        assert_eq!(counts(ProbeCategory::EmotionsAndFeelings), 2);
        assert_eq!(counts(ProbeCategory::WishesAndDesires), 4);
    }

    #[test]
    fn query_tokenization() {
        assert_eq!(
            query_tokens("On weekends, I like to [MASK].", "<mask>"),
            ["On", "weekends", "I", "like", "to", "<mask>"]
        );
        assert_eq!(query_tokens("It's my dream", "[MASK]"), ["It's", "my", "dream"]);
    }

    #[test]
    fn rejects_two_slots() {
        assert!(ProbeQuery::masked("x", ProbeCategory::Preferences, "[MASK] and [MASK]").is_err());
        assert!(ProbeQuery::masked("x", ProbeCategory::Preferences, "no slot").is_err());
    }
}
