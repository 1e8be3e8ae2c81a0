//! Document ingestion, sentence segmentation and descriptive corpus statistics.

mod document;
mod segment;
mod stats;

pub use document::{
    ingest_documents, is_meta_line, parse_grade_label, read_documents, write_documents, Document, DocumentSet,
    IngestOutcome, Reject,
};
pub use segment::{segment_sentences, segment_text, Sentence};
pub use stats::{corpus_stats, corpus_stats_with, CorpusStats, MeanStd, SourceStats};
