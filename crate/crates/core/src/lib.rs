//! Corpus curation, stratified masking and language-model probing for
//! child-directed text.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`]: document ingestion, sentence segmentation and descriptive statistics.
//! * [`filters`]: language / code-mixing filter, PII scrubbing and per-source quality rules.
//! * [`strata`]: stopword and Dale-Chall lexicons and word-to-stratum classification.
//! * [`masking`]: the stratified masking collator and the masked-LM loss.
//! * [`scoring`]: the model boundary (masked and prefix scorers, reference bigram
//!   scorer and the remote scorer wire protocol).
//! * [`probes`]: pseudo-perplexity by grade level, stereotype probing and cloze probes.
//!
//! Data-parallel loops go through [`exec::Execution`], which uses rayon when the
//! `parallel` feature is enabled and falls back to sequential iteration otherwise.

pub mod corpus;
pub mod error;
pub mod exec;
pub mod filters;
pub mod masking;
pub mod probes;
pub mod report;
pub mod scoring;
pub mod strata;
pub mod text;

pub use error::{Error, Result};
