//! Word-class lexicons and the word-to-stratum map behind stratified masking.
//!
//! Every normalized word belongs to exactly one [`Stratum`]: stopwords first,
//! then Dale-Chall easy words, then everything else. Words that appear in both
//! reference lists are removed from the Dale-Chall set at load time.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::DocumentSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::text;

pub const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
pub const BUNDLED_DALECHALL: &str = include_str!("../data/dale_chall_easy_words.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stratum {
    Stopword,
    #[serde(rename = "dalechall")]
    DaleChall,
    Other,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::Stopword, Stratum::DaleChall, Stratum::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Stopword => "stopword",
            Stratum::DaleChall => "dalechall",
            Stratum::Other => "other",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Lowercase and strip leading/trailing punctuation; internal apostrophes and hyphens stay.
pub fn normalize_word(raw: &str) -> String {
    text::strip_edge_punct(raw).to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LexiconProvenance {
    pub stopwords_sha256: String,
    pub dalechall_sha256: String,
    /// Distinct normalized Dale-Chall words before overlap removal.
    pub dalechall_raw: usize,
    pub overlap_removed: usize,
}

#[derive(Debug, Clone)]
pub struct StrataLexicon {
    stopwords: HashSet<String>,
    dalechall: HashSet<String>,
    provenance: LexiconProvenance,
}

fn parse_word_list(content: &str) -> HashSet<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_word)
        .filter(|w| !w.is_empty())
        .collect()
}

fn sha256_hex(content: &str) -> String {
    format!("{:x}", Sha256::digest(content.as_bytes()))
}

impl StrataLexicon {
    /// Build from word-list contents (one word per line, `#` comments).
    pub fn from_lists(stopword_list: &str, dalechall_list: &str) -> Result<Self> {
        let stopwords = parse_word_list(stopword_list);
        let mut dalechall = parse_word_list(dalechall_list);
        if stopwords.is_empty() {
            return Err(Error::Config("stopword lexicon is empty".into()));
        }
        if dalechall.is_empty() {
            return Err(Error::Config("Dale-Chall lexicon is empty".into()));
        }
        let dalechall_raw = dalechall.len();
        dalechall.retain(|w| !stopwords.contains(w));
        Ok(StrataLexicon {
            provenance: LexiconProvenance {
                stopwords_sha256: sha256_hex(stopword_list),
                dalechall_sha256: sha256_hex(dalechall_list),
                dalechall_raw,
                overlap_removed: dalechall_raw - dalechall.len(),
            },
            stopwords,
            dalechall,
        })
    }

    pub fn load(stopword_file: &Path, dalechall_file: &Path) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        Self::from_lists(&read(stopword_file)?, &read(dalechall_file)?)
    }

    /// The reference stopword and Dale-Chall lists shipped with the crate.
    pub fn bundled() -> &'static StrataLexicon {
        static LEXICON: OnceLock<StrataLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            StrataLexicon::from_lists(BUNDLED_STOPWORDS, BUNDLED_DALECHALL)
                .expect("bundled lexicons are non-empty")
        })
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn dalechall(&self) -> &HashSet<String> {
        &self.dalechall
    }

    pub fn provenance(&self) -> &LexiconProvenance {
        &self.provenance
    }

    /// Classify an already-normalized word.
    pub fn classify_normalized(&self, word: &str) -> Stratum {
        if word.chars().any(|c| c.is_numeric()) {
            Stratum::Other
        } else if self.stopwords.contains(word) {
            Stratum::Stopword
        } else if self.dalechall.contains(word) {
            Stratum::DaleChall
        } else {
            Stratum::Other
        }
    }

    pub fn classify(&self, word: &str) -> Stratum {
        self.classify_normalized(&normalize_word(word))
    }
}

pub fn load_lexicons(stopword_file: &Path, dalechall_file: &Path) -> Result<StrataLexicon> {
    StrataLexicon::load(stopword_file, dalechall_file)
}

pub fn classify_word(word: &str, lexicon: &StrataLexicon) -> Stratum {
    lexicon.classify(word)
}

/// Occurrence counts per stratum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StrataCounts {
    pub stopword: u64,
    pub dalechall: u64,
    pub other: u64,
}

impl StrataCounts {
    pub fn add(&mut self, stratum: Stratum) {
        match stratum {
            Stratum::Stopword => self.stopword += 1,
            Stratum::DaleChall => self.dalechall += 1,
            Stratum::Other => self.other += 1,
        }
    }

    pub fn merge(&mut self, other: &StrataCounts) {
        self.stopword += other.stopword;
        self.dalechall += other.dalechall;
        self.other += other.other;
    }

    pub fn total(&self) -> u64 {
        self.stopword + self.dalechall + self.other
    }
}

/// Fraction of word occurrences per stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrataProportions {
    pub stopword: f64,
    pub dalechall: f64,
    pub other: f64,
}

impl StrataProportions {
    pub fn new(stopword: f64, dalechall: f64, other: f64) -> Result<Self> {
        let p = StrataProportions {
            stopword,
            dalechall,
            other,
        };
        let sum = stopword + dalechall + other;
        if [stopword, dalechall, other].iter().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "strata proportions must lie in [0,1] and sum to 1, got ({stopword}, {dalechall}, {other})"
            )));
        }
        Ok(p)
    }

    /// Accept rounded published percentages, which may not sum to exactly one
    /// (45.93 / 21.82 / 32.45 sums to 100.20).
    pub fn reported(stopword: f64, dalechall: f64, other: f64) -> Result<Self> {
        let sum = stopword + dalechall + other;
        if [stopword, dalechall, other].iter().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 0.01 {
            return Err(Error::InvalidInput(format!(
                "reported strata proportions must lie in [0,1] and sum to 1 within rounding, got ({stopword}, {dalechall}, {other})"
            )));
        }
        Ok(StrataProportions {
            stopword,
            dalechall,
            other,
        })
    }

    pub fn from_counts(counts: &StrataCounts) -> Result<Self> {
        let total = counts.total();
        if total == 0 {
            return Err(Error::EmptyCorpus);
        }
        let t = total as f64;
        let stopword = counts.stopword as f64 / t;
        let dalechall = counts.dalechall as f64 / t;
        Ok(StrataProportions {
            stopword,
            dalechall,
            other: 1.0 - stopword - dalechall,
        })
    }

    pub fn get(&self, stratum: Stratum) -> f64 {
        match stratum {
            Stratum::Stopword => self.stopword,
            Stratum::DaleChall => self.dalechall,
            Stratum::Other => self.other,
        }
    }
}

pub fn strata_counts(docs: &DocumentSet, lexicon: &StrataLexicon, exec: Execution) -> StrataCounts {
    let per_doc = exec.map(docs.as_slice(), |_, d| {
        let mut c = StrataCounts::default();
        for w in text::segment_words(&d.text) {
            c.add(lexicon.classify(w));
        }
        c
    });
    per_doc.iter().fold(StrataCounts::default(), |mut acc, c| {
        acc.merge(c);
        acc
    })
}

pub fn strata_proportions(docs: &DocumentSet, lexicon: &StrataLexicon) -> Result<StrataProportions> {
    StrataProportions::from_counts(&strata_counts(docs, lexicon, Execution::default()))
}
