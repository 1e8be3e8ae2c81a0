use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use kidlm_forge::corpus::{
    corpus_stats_with, ingest_documents, read_documents, segment_sentences, write_documents, Document, DocumentSet,
};
use kidlm_forge::exec::Execution;
use kidlm_forge::filters::{
    apply_quality_rules, filter_language, parse_rules, FilterReport, PiiScrubber, QualityVerdict, TrigramDetector,
};
use kidlm_forge::masking::{read_tokenized_sequences, Collator, MaskedExample, TokenizedSequence};
use kidlm_forge::probes::{
    aggregate_stereotype, build_stereotype_prompts, bundled_templates, cloze_topk, collect_completions,
    collect_prefix_completions, grade_buckets, grade_level_eval, grade_table, load_templates, read_graded_texts,
    score_completions, simplify_sentence, AdjectiveCheck, AdjectiveLexicon, CompletionSet, QueryForm, ScoredRow,
    SentimentStub, SocialGroupRegistry, ToxicityStub,
};
use kidlm_forge::report::{Cell, Table};
use kidlm_forge::scoring::{fit_reference_scorer, MaskedScorer, PrefixScorer, ReferenceScorer, RemoteScorer};
use kidlm_forge::strata::{strata_counts, StrataLexicon, StrataProportions, Stratum};
use serde::{Deserialize, Serialize};

use crate::artifact::Artifacts;
use crate::config::{RunConfig, ScorerSpec};
use crate::CliError;

type Written = Result<Vec<PathBuf>, CliError>;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn artifacts(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    Artifacts::new(&cfg.out, cfg.digest(), cfg.seed)
}

fn exec(cfg: &RunConfig) -> Execution {
    Execution::with_jobs(cfg.jobs)
}

fn load_docs(cfg: &RunConfig, key: &str) -> Result<DocumentSet, CliError> {
    Ok(read_documents(open(&cfg.require_path(key)?)?)?)
}

fn lexicon(cfg: &RunConfig) -> Result<StrataLexicon, CliError> {
    match (cfg.path("stopwords"), cfg.path("dalechall")) {
        (None, None) => Ok(StrataLexicon::bundled().clone()),
        (Some(s), Some(d)) => Ok(StrataLexicon::load(&s, &d)?),
        _ => Err(CliError::Config("--stopwords and --dalechall must be given together".into())),
    }
}

fn document_bytes(docs: &DocumentSet) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_documents(&mut buf, docs)?;
    Ok(buf)
}

pub fn ingest(cfg: &RunConfig) -> Written {
    let input = cfg.require_path("input")?;
    let outcome = ingest_documents(open(&input)?, cfg.get("source"))?;
    let mut out = artifacts(cfg)?;
    out.jsonl_bytes("documents.jsonl", &document_bytes(&outcome.documents)?)?;
    out.json(
        "ingest_report.json",
        serde_json::json!({
            "kept": outcome.documents.len(),
            "rejected": outcome.rejects.len(),
            "reject_counts": outcome.reject_counts(),
            "rejects": outcome.rejects,
        }),
    )?;
    Ok(out.written().to_vec())
}

struct DocFilter {
    doc: Option<Document>,
    docs: FilterReport,
    sentences: FilterReport,
}

pub fn filter(cfg: &RunConfig) -> Written {
    let docs = load_docs(cfg, "input")?;
    let rules = match cfg.path("rules") {
        Some(p) => parse_rules(&std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?)?,
        None => Vec::new(),
    };
    let threshold = cfg.threshold()?;
    let detector = TrigramDetector::bundled();
    let scrubber = PiiScrubber::shared();
    let results = exec(cfg).try_map(docs.as_slice(), |_, doc| -> Result<DocFilter, CliError> {
        let mut docs_report = FilterReport::default();
        if let QualityVerdict::Drop(reason) = apply_quality_rules(doc, &rules) {
            docs_report.drop(reason);
            return Ok(DocFilter {
                doc: None,
                docs: docs_report,
                sentences: FilterReport::default(),
            });
        }
        let (text, counts) = scrubber.scrub(&doc.text);
        for (cat, n) in counts {
            docs_report.redact(cat.name(), n as u64);
        }
        let scrubbed = Document {
            text,
            ..doc.clone()
        };
        let (kept, sentences) = filter_language(&segment_sentences(&scrubbed), detector, threshold)?;
        if kept.is_empty() {
            docs_report.drop("no-english-sentences");
            return Ok(DocFilter {
                doc: None,
                docs: docs_report,
                sentences,
            });
        }
        docs_report.keep();
        let text = kept.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
        Ok(DocFilter {
            doc: Some(Document { text, ..scrubbed }),
            docs: docs_report,
            sentences,
        })
    })?;
    let mut doc_report = FilterReport::default();
    let mut sent_report = FilterReport::default();
    let mut kept = DocumentSet::new();
    for r in results {
        doc_report.merge(&r.docs);
        sent_report.merge(&r.sentences);
        if let Some(d) = r.doc {
            kept.insert(d)?;
        }
    }
    let mut out = artifacts(cfg)?;
    out.jsonl_bytes("filtered.jsonl", &document_bytes(&kept)?)?;
    out.json(
        "filter_report.json",
        serde_json::json!({"threshold": threshold, "documents": doc_report, "sentences": sent_report}),
    )?;
    Ok(out.written().to_vec())
}

pub fn stats(cfg: &RunConfig) -> Written {
    let docs = load_docs(cfg, "input")?;
    let table = corpus_stats_with(&docs, exec(cfg)).to_table();
    let mut out = artifacts(cfg)?;
    out.csv("stats.csv", &table)?;
    out.markdown("stats.md", "Corpus statistics", &table)?;
    Ok(out.written().to_vec())
}

pub fn strata(cfg: &RunConfig) -> Written {
    let docs = load_docs(cfg, "input")?;
    let lex = lexicon(cfg)?;
    let policy = cfg.policy()?;
    let counts = strata_counts(&docs, &lex, exec(cfg));
    let props = StrataProportions::from_counts(&counts)?;
    let mut table = Table::new(["stratum", "words", "proportion", "mask_probability"]);
    let by_stratum = [counts.stopword, counts.dalechall, counts.other];
    for s in Stratum::ALL {
        table.push(vec![
            Cell::Text(s.as_str().into()),
            Cell::Int(by_stratum[s.index()]),
            Cell::Num(props.get(s)),
            Cell::Num(policy.probability(s)),
        ]);
    }
    table.push(vec![
        Cell::Text("ALL".into()),
        Cell::Int(counts.total()),
        Cell::Num(1.0),
        Cell::Num(kidlm_forge::masking::expected_mask_fraction(&props, &policy)),
    ]);
    let prov = lex.provenance();
    let mut lexicon_table = Table::new(["list", "entries", "sha256"]);
    lexicon_table.push(vec![
        Cell::Text("stopwords".into()),
        Cell::Int(lex.stopwords().len() as u64),
        Cell::Text(prov.stopwords_sha256.clone()),
    ]);
    lexicon_table.push(vec![
        Cell::Text("dalechall_raw".into()),
        Cell::Int(prov.dalechall_raw as u64),
        Cell::Text(prov.dalechall_sha256.clone()),
    ]);
    lexicon_table.push(vec![
        Cell::Text("overlap_removed".into()),
        Cell::Int(prov.overlap_removed as u64),
        Cell::Missing,
    ]);
    lexicon_table.push(vec![
        Cell::Text("dalechall".into()),
        Cell::Int(lex.dalechall().len() as u64),
        Cell::Missing,
    ]);
    let mut out = artifacts(cfg)?;
    out.csv("strata.csv", &table)?;
    out.markdown("strata.md", "Word-class proportions", &table)?;
    out.csv("lexicon.csv", &lexicon_table)?;
    Ok(out.written().to_vec())
}

fn sequences(cfg: &RunConfig) -> Result<Vec<TokenizedSequence>, CliError> {
    if let Some(p) = cfg.path("pretokenized") {
        return Ok(read_tokenized_sequences(open(&p)?)?);
    }
    let docs = load_docs(cfg, "input")?;
    Ok(docs
        .iter()
        .flat_map(segment_sentences)
        .map(|s| TokenizedSequence::from_text(format!("{}:{}", s.doc_id, s.index), &s.text))
        .filter(|s| !s.word_spans.is_empty())
        .collect())
}

fn mask_summary(seqs: &[TokenizedSequence], examples: &[MaskedExample], lex: &StrataLexicon) -> Table {
    let mut words = [0u64; 3];
    let mut masked = [0u64; 3];
    for (seq, ex) in seqs.iter().zip(examples) {
        for span in &seq.word_spans {
            let i = lex.classify(&span.word).index();
            words[i] += 1;
            if (span.start..span.end).any(|p| ex.labels.contains_key(&p)) {
                masked[i] += 1;
            }
        }
    }
    let mut table = Table::new(["stratum", "words", "masked", "rate"]);
    let rate = |m: u64, w: u64| if w == 0 { Cell::Missing } else { Cell::Num(m as f64 / w as f64) };
    for s in Stratum::ALL {
        let i = s.index();
        table.push(vec![
            Cell::Text(s.as_str().into()),
            Cell::Int(words[i]),
            Cell::Int(masked[i]),
            rate(masked[i], words[i]),
        ]);
    }
    let (w, m) = (words.iter().sum(), masked.iter().sum());
    table.push(vec![Cell::Text("ALL".into()), Cell::Int(w), Cell::Int(m), rate(m, w)]);
    table
}

pub fn mask(cfg: &RunConfig) -> Written {
    let seqs = sequences(cfg)?;
    let lex = lexicon(cfg)?;
    let collator = Collator::new(&lex, cfg.policy()?)?;
    let examples = collator.collate(&seqs, exec(cfg))?;
    let mut out = artifacts(cfg)?;
    out.jsonl("masked.jsonl", &examples)?;
    out.csv("mask_summary.csv", &mask_summary(&seqs, &examples, &lex))?;
    Ok(out.written().to_vec())
}

enum Scorer {
    Reference(ReferenceScorer),
    Remote(RemoteScorer),
}

impl Scorer {
    /// `top_m` truncates reference distributions; remote requests always carry it.
    fn build(cfg: &RunConfig, truncate_reference: bool) -> Result<Scorer, CliError> {
        let top_m = cfg.top_m()?;
        match cfg.scorer()? {
            ScorerSpec::Reference => {
                let train = cfg.path("train").ok_or_else(|| {
                    CliError::Config("the reference scorer needs --train (documents JSONL)".into())
                })?;
                let docs = read_documents(open(&train)?)?;
                let s = fit_reference_scorer(&docs, cfg.smoothing()?)?;
                Ok(Scorer::Reference(if truncate_reference { s.with_top_m(top_m) } else { s }))
            }
            ScorerSpec::Remote(url) => {
                let mut s = RemoteScorer::new(url, top_m).with_limits(cfg.remote_limits()?);
                if let Some(unk) = cfg.get("unk_token") {
                    s = s.with_unk_token(unk);
                }
                if let Ok(token) = std::env::var("KIDLM_FORGE_BEARER") {
                    s = s.with_bearer(token);
                }
                Ok(Scorer::Remote(s))
            }
        }
    }

    fn masked(&self) -> &dyn MaskedScorer {
        match self {
            Scorer::Reference(s) => s,
            Scorer::Remote(s) => s,
        }
    }

    fn prefix(&self) -> &dyn PrefixScorer {
        match self {
            Scorer::Reference(s) => s,
            Scorer::Remote(s) => s,
        }
    }

    fn name(&self) -> String {
        MaskedScorer::descriptor(self.masked()).name.clone()
    }
}

pub fn eval_ppl(cfg: &RunConfig) -> Written {
    let texts = read_graded_texts(open(&cfg.require_path("input")?)?)?;
    let scorer = Scorer::build(cfg, false)?;
    let buckets = grade_buckets(&texts);
    if buckets.is_empty() {
        return Err(CliError::Runtime("no graded sentences in input".into()));
    }
    let report = grade_level_eval(&buckets, scorer.masked(), exec(cfg))?;
    let mut detail = Table::new(["grade", "sentences", "unknown_tokens", "mean_ppl"]);
    for (g, s) in &report.grades {
        detail.push(vec![
            Cell::Int(*g as u64),
            Cell::Int(s.sentences as u64),
            Cell::Int(s.unknown_tokens as u64),
            Cell::Num(s.mean_ppl),
        ]);
    }
    let table = grade_table(&[(scorer.name(), report)]);
    let mut out = artifacts(cfg)?;
    out.csv("grade_ppl.csv", &table)?;
    out.markdown("grade_ppl.md", "Sentence-level average PPL by grade", &table)?;
    out.csv("grade_ppl_detail.csv", &detail)?;
    Ok(out.written().to_vec())
}

#[derive(Serialize)]
struct QueryRecord<'a> {
    category: &'a str,
    group: &'a str,
    query: &'a str,
    #[serde(flatten)]
    outcome: QueryOutcome<'a>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum QueryOutcome<'a> {
    Ok {
        kept: Vec<&'a str>,
        pool_exhausted: bool,
        candidates: &'a [kidlm_forge::probes::Completion],
    },
    Failed {
        error: String,
    },
}

fn fmt_score(v: Option<f64>) -> Cell {
    v.map_or(Cell::Missing, Cell::Num)
}

pub fn probe_stereotype(cfg: &RunConfig) -> Written {
    let registry = match cfg.path("groups") {
        Some(p) => SocialGroupRegistry::load(&p)?,
        None => SocialGroupRegistry::bundled().clone(),
    };
    let adjectives: AdjectiveLexicon = match cfg.path("adjectives") {
        Some(p) => AdjectiveLexicon::parse(&std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?),
        None => AdjectiveLexicon::bundled().clone(),
    };
    let form = cfg.form()?;
    let n = cfg.n()?;
    let scorer = Scorer::build(cfg, true)?;
    let model = scorer.name();
    let queries = build_stereotype_prompts(&registry, form);
    let adj: &dyn AdjectiveCheck = &adjectives;
    let sets: Vec<Result<CompletionSet, String>> = exec(cfg).map(&queries, |_, q| {
        match form {
            QueryForm::Masked => collect_completions(q, scorer.masked(), n, adj),
            QueryForm::Prefix => collect_prefix_completions(q, scorer.prefix(), n, adj),
        }
        .map_err(|e| e.to_string())
    });
    let sentiment = SentimentStub::bundled();
    let toxicity = ToxicityStub::bundled();
    let mut rows: Vec<ScoredRow> = Vec::new();
    let mut records = Vec::new();
    let (mut failed, mut exhausted) = (0usize, 0usize);
    for (q, set) in queries.iter().zip(&sets) {
        let group = q.group.as_ref().expect("stereotype queries carry a group");
        let outcome = match set {
            Ok(set) => {
                exhausted += set.pool_exhausted as usize;
                rows.extend(score_completions(&model, q, &set.kept, &sentiment, &toxicity));
                QueryOutcome::Ok {
                    kept: set.kept.iter().map(|c| c.token.as_str()).collect(),
                    pool_exhausted: set.pool_exhausted,
                    candidates: &set.candidates,
                }
            }
            Err(e) => {
                failed += 1;
                QueryOutcome::Failed { error: e.clone() }
            }
        };
        records.push(QueryRecord {
            category: &group.category,
            group: &group.name,
            query: &q.text,
            outcome,
        });
    }
    let report = aggregate_stereotype(&rows, cfg.all_mode()?);
    let table = report.to_table(&registry.category_names());
    let mut detail = Table::new(["category", "group", "completion", "sentence", "sentiment", "toxicity"]);
    for r in &report.rows {
        detail.push(vec![
            Cell::Text(r.category.clone()),
            Cell::Text(r.group.clone().unwrap_or_default()),
            Cell::Text(r.completion.clone()),
            Cell::Text(r.sentence.clone()),
            fmt_score(r.sentiment),
            fmt_score(r.toxicity),
        ]);
    }
    let mut out = artifacts(cfg)?;
    out.jsonl("stereotype_completions.jsonl", &records)?;
    out.csv("stereotype_rows.csv", &detail)?;
    out.csv("stereotype.csv", &table)?;
    out.markdown("stereotype.md", "Average sentiment and toxicity by category", &table)?;
    out.json(
        "stereotype_summary.json",
        serde_json::json!({
            "model": model,
            "queries": queries.len(),
            "failed_queries": failed,
            "pool_exhausted": exhausted,
            "scored_rows": report.rows.len(),
            "unscored_rows": report.unscored,
            "sentiment_classifier": "sentiment-stub",
            "toxicity_classifier": "toxicity-stub",
        }),
    )?;
    Ok(out.written().to_vec())
}

pub fn probe_cloze(cfg: &RunConfig) -> Written {
    let templates = match cfg.path("templates") {
        Some(p) => load_templates(&p)?,
        None => bundled_templates(),
    };
    let k = cfg.k()?;
    let scorer = Scorer::build(cfg, true)?;
    let queries = templates
        .iter()
        .map(|t| t.instantiate(None))
        .collect::<Result<Vec<_>, _>>()?;
    let results = exec(cfg).map(&queries, |_, q| cloze_topk(q, scorer.masked(), k).map_err(|e| e.to_string()));
    let mut table = Table::new(["template_id", "category", "rank", "token", "probability"]);
    let mut records = Vec::new();
    for (q, r) in queries.iter().zip(&results) {
        match r {
            Ok(r) => {
                for (i, (tok, p)) in r.items.iter().enumerate() {
                    table.push(vec![
                        Cell::Text(q.template_id.clone()),
                        Cell::Text(q.category.to_string()),
                        Cell::Int(i as u64 + 1),
                        Cell::Text(tok.clone()),
                        Cell::Num(*p),
                    ]);
                }
                records.push(serde_json::json!({
                    "template_id": q.template_id, "query": q.text,
                    "completions": r.items.iter().map(|(t, p)| serde_json::json!({"token": t, "probability": p})).collect::<Vec<_>>(),
                    "note": r.note,
                }));
            }
            Err(e) => records.push(serde_json::json!({"template_id": q.template_id, "query": q.text, "error": e})),
        }
    }
    let mut out = artifacts(cfg)?;
    out.jsonl("cloze.jsonl", &records)?;
    out.csv("cloze.csv", &table)?;
    Ok(out.written().to_vec())
}

#[derive(Deserialize)]
struct SimplifyInput {
    id: String,
    sentence: String,
    complex_word: String,
}

pub fn probe_simplify(cfg: &RunConfig) -> Written {
    let input = cfg.require_path("input")?;
    let mut items = Vec::new();
    for (i, line) in open(&input)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(&input, e))?;
        if line.trim().is_empty() || line.contains("\"_meta\"") {
            continue;
        }
        let item: SimplifyInput = serde_json::from_str(&line)
            .map_err(|e| CliError::Runtime(format!("{}: line {}: {e}", input.display(), i + 1)))?;
        items.push(item);
    }
    let k = cfg.k()?;
    let scorer = Scorer::build(cfg, false)?;
    let results = exec(cfg).map(&items, |_, it| {
        simplify_sentence(&it.sentence, &it.complex_word, scorer.masked(), k).map_err(|e| e.to_string())
    });
    let mut table = Table::new(["id", "rank", "substitute", "probability"]);
    let mut records = Vec::new();
    for (it, r) in items.iter().zip(&results) {
        match r {
            Ok(s) => {
                for (i, (tok, p)) in s.substitutes.iter().enumerate() {
                    table.push(vec![
                        Cell::Text(it.id.clone()),
                        Cell::Int(i as u64 + 1),
                        Cell::Text(tok.clone()),
                        Cell::Num(*p),
                    ]);
                }
                records.push(serde_json::json!({
                    "id": it.id, "complex_word": s.original, "masked": s.masked_text,
                    "substitutes": s.substitutes.iter().map(|(t, p)| serde_json::json!({"token": t, "probability": p})).collect::<Vec<_>>(),
                }));
            }
            Err(e) => records.push(serde_json::json!({"id": it.id, "error": e})),
        }
    }
    let mut out = artifacts(cfg)?;
    out.jsonl("simplify.jsonl", &records)?;
    out.csv("simplify.csv", &table)?;
    Ok(out.written().to_vec())
}

