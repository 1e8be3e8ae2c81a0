//! Filtering stages: language / code-mixing removal, PII scrubbing and
//! per-source quality rules.

mod language;
mod pii;
mod quality;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use language::{filter_language, LanguageDetector, LanguageVerdict, TrigramDetector};
pub use pii::{scrub_pii, PiiCategory, PiiScrubber};
pub use quality::{apply_quality_rules, parse_rules, QualityRule, QualityVerdict};

/// Keep/drop tallies for one filtering stage.
///
/// Reports merge associatively and commutatively, so per-document reports can
/// be combined in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: u64,
    pub dropped: u64,
    pub drop_reasons: BTreeMap<String, u64>,
    pub redactions: BTreeMap<String, u64>,
}

impl FilterReport {
    pub fn keep(&mut self) {
        self.kept += 1;
    }

    pub fn drop(&mut self, reason: &str) {
        self.dropped += 1;
        *self.drop_reasons.entry(reason.to_string()).or_insert(0) += 1;
    }

    pub fn redact(&mut self, category: &str, count: u64) {
        if count > 0 {
            *self.redactions.entry(category.to_string()).or_insert(0) += count;
        }
    }

    pub fn total(&self) -> u64 {
        self.kept + self.dropped
    }

    pub fn merge(&mut self, other: &FilterReport) {
        self.kept += other.kept;
        self.dropped += other.dropped;
        for (k, v) in &other.drop_reasons {
            *self.drop_reasons.entry(k.clone()).or_insert(0) += v;
        }
        for (k, v) in &other.redactions {
            *self.redactions.entry(k.clone()).or_insert(0) += v;
        }
    }
}
