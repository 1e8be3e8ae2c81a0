use std::collections::BTreeMap;

use serde::Serialize;

use super::{segment_sentences, DocumentSet};
use crate::exec::Execution;
use crate::report::{Cell, Table};

/// Mean with population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Integer moments so that results do not depend on summation order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Moments {
    n: u64,
    sum: u64,
    sum_sq: u128,
}

impl Moments {
    fn add(&mut self, x: u64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += u128::from(x) * u128::from(x);
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn mean_std(&self) -> Option<MeanStd> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        let mean = self.sum as f64 / n;
        // n * sum_sq - sum^2 is exact in integers.
        let num = (self.n as u128) * self.sum_sq - (self.sum as u128) * (self.sum as u128);
        let var = num as f64 / (n * n);
        Some(MeanStd {
            mean,
            std: var.max(0.0).sqrt(),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SourceStats {
    pub doc_count: u64,
    pub sentence_count: u64,
    /// Absent for an empty set.
    pub avg_sents_per_doc: Option<MeanStd>,
    pub avg_words_per_sent: Option<MeanStd>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub per_source: BTreeMap<String, SourceStats>,
    pub aggregate: SourceStats,
}

#[derive(Default)]
struct Acc {
    sents_per_doc: Moments,
    words_per_sent: Moments,
}

impl Acc {
    fn finish(&self) -> SourceStats {
        SourceStats {
            doc_count: self.sents_per_doc.n,
            sentence_count: self.sents_per_doc.sum,
            avg_sents_per_doc: self.sents_per_doc.mean_std(),
            avg_words_per_sent: self.words_per_sent.mean_std(),
        }
    }
}

pub fn corpus_stats(docs: &DocumentSet) -> CorpusStats {
    corpus_stats_with(docs, Execution::default())
}

pub fn corpus_stats_with(docs: &DocumentSet, exec: Execution) -> CorpusStats {
    let per_doc: Vec<(&str, Vec<u64>)> = exec.map(docs.as_slice(), |_, d| {
        let counts = segment_sentences(d).iter().map(|s| s.word_count as u64).collect();
        (d.source.as_str(), counts)
    });
    let mut by_source: BTreeMap<&str, Acc> = BTreeMap::new();
    for (source, counts) in &per_doc {
        let acc = by_source.entry(source).or_default();
        acc.sents_per_doc.add(counts.len() as u64);
        for &w in counts {
            acc.words_per_sent.add(w);
        }
    }
    let mut total = Acc::default();
    for acc in by_source.values() {
        total.sents_per_doc.merge(&acc.sents_per_doc);
        total.words_per_sent.merge(&acc.words_per_sent);
    }
    CorpusStats {
        per_source: by_source
            .iter()
            .map(|(s, a)| (s.to_string(), a.finish()))
            .collect(),
        aggregate: total.finish(),
    }
}

impl CorpusStats {
    /// `source,docs,sents,avg_sents,std_sents,avg_words,std_words` with a trailing `ALL` row.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new([
            "source", "docs", "sents", "avg_sents", "std_sents", "avg_words", "std_words",
        ]);
        let row = |name: &str, s: &SourceStats| {
            vec![
                Cell::from(name),
                Cell::Int(s.doc_count),
                Cell::Int(s.sentence_count),
                s.avg_sents_per_doc.map(|m| m.mean).into(),
                s.avg_sents_per_doc.map(|m| m.std).into(),
                s.avg_words_per_sent.map(|m| m.mean).into(),
                s.avg_words_per_sent.map(|m| m.std).into(),
            ]
        };
        for (name, s) in &self.per_source {
            t.push(row(name, s));
        }
        t.push(row("ALL", &self.aggregate));
        t
    }
}
