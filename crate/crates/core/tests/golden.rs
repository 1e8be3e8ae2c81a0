use std::collections::BTreeMap;

use kidlm_forge::corpus::{corpus_stats, segment_text, Document, DocumentSet};
use kidlm_forge::filters::{scrub_pii, PiiCategory};
use kidlm_forge::probes::{aggregate_stereotype, AllRowMode, ScoredRow};
use serde::Deserialize;

const SEGMENT_GOLDEN: &str = include_str!("fixtures/segment_golden.jsonl");
const PII_CASES: &str = include_str!("fixtures/pii_cases.jsonl");
const PUBLISHED: &str = include_str!("fixtures/published_scores.csv");

#[derive(Deserialize)]
struct SegmentCase {
    text: String,
    sentences: Vec<String>,
}

#[test]
fn segmenter_matches_golden() {
    for line in SEGMENT_GOLDEN.lines() {
        let case: SegmentCase = serde_json::from_str(line).unwrap();
        assert_eq!(segment_text(&case.text), case.sentences, "{}", case.text);
    }
}

#[derive(Deserialize)]
struct PiiCase {
    id: String,
    text: String,
    pii: Vec<String>,
    expected: String,
    counts: BTreeMap<String, usize>,
}

fn pii_cases() -> Vec<PiiCase> {
    PII_CASES.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn pii_fixture_full_recall() {
    let cases = pii_cases();
    assert_eq!(cases.len(), 50);
    for c in &cases {
        let (clean, counts) = scrub_pii(&c.text);
        assert_eq!(clean, c.expected, "{}", c.id);
        for p in &c.pii {
            assert!(!clean.contains(p.as_str()), "{}: {p} survived", c.id);
        }
        let named: BTreeMap<String, usize> = counts.iter().map(|(k, &v)| (k.name().to_string(), v)).collect();
        assert_eq!(named, c.counts, "{}", c.id);
    }
}

#[test]
fn pii_scrub_idempotent_on_fixture() {
    for c in pii_cases() {
        let (once, _) = scrub_pii(&c.text);
        let (twice, counts) = scrub_pii(&once);
        assert_eq!(once, twice);
        assert!(counts.values().all(|&n| n == 0));
    }
}

#[test]
fn pii_published_example() {
    let (clean, counts) = scrub_pii("call +1 780-555-0199 or @kidreporter");
    assert_eq!(clean, "call [PHONE] or [HANDLE]");
    assert_eq!(counts.get(&PiiCategory::Phone), Some(&1));
    assert_eq!(counts.get(&PiiCategory::Handle), Some(&1));
    assert_eq!(counts.get(&PiiCategory::Email), None);
}

struct Published {
    models: Vec<String>,
    /// (score, category) -> per-model value
    rows: BTreeMap<(String, String), Vec<f64>>,
}

fn published() -> Published {
    let mut reader = csv::Reader::from_reader(PUBLISHED.as_bytes());
    let models: Vec<String> = reader.headers().unwrap().iter().skip(2).map(String::from).collect();
    let mut rows = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let values = rec.iter().skip(2).map(|v| v.parse().unwrap()).collect();
        rows.insert((rec[0].to_string(), rec[1].to_string()), values);
    }
    Published { models, rows }
}

/// One row per printed category value, so a category mean equals the printed value.
fn rows_from_table(t: &Published) -> Vec<ScoredRow> {
    let mut out = Vec::new();
    for ((score, category), values) in &t.rows {
        if category.starts_with("ALL") || score != "sentiment" {
            continue;
        }
        let tox = &t.rows[&("toxicity".to_string(), category.clone())];
        for (i, model) in t.models.iter().enumerate() {
            out.push(ScoredRow {
                model: model.clone(),
                category: category.clone(),
                group: None,
                completion: "x".into(),
                sentence: String::new(),
                sentiment: Some(values[i]),
                toxicity: Some(tox[i]),
            });
        }
    }
    out
}

#[test]
fn all_row_is_mean_of_category_means() {
    let t = published();
    let report = aggregate_stereotype(&rows_from_table(&t), AllRowMode::MeanOfCategoryMeans);
    let printed_sent = &t.rows[&("sentiment".to_string(), "ALL / Avg.".to_string())];
    let printed_tox = &t.rows[&("toxicity".to_string(), "ALL / Avg.".to_string())];
    let mut matched = 0;
    for (i, model) in t.models.iter().enumerate() {
        let all = report.all[model];
        assert!((all.sentiment.unwrap() - printed_sent[i]).abs() <= 0.005 + 1e-9, "{model} sentiment");
        let tox_gap = (all.toxicity.unwrap() - printed_tox[i]).abs();
        if model == "GPT 2 (large)" {
            // The printed toxicity average for this column disagrees with its own categories.
            assert!(tox_gap > 1.0);
        } else {
            assert!(tox_gap <= 0.005 + 1e-9, "{model} toxicity");
        }
        matched += 1;
    }
    assert_eq!(matched, 11);
}

#[test]
fn category_means_and_modes_differ_on_unbalanced_counts() {
    let row = |category: &str, s: f64| ScoredRow {
        model: "m".into(),
        category: category.into(),
        group: None,
        completion: "c".into(),
        sentence: String::new(),
        sentiment: Some(s),
        toxicity: Some(s),
    };
    let rows = vec![row("a", 40.0), row("a", 60.0), row("a", 80.0), row("b", 0.0)];
    let by_cat = aggregate_stereotype(&rows, AllRowMode::MeanOfCategoryMeans);
    assert_eq!(by_cat.cells[&("m".to_string(), "a".to_string())].sentiment, Some(60.0));
    assert_eq!(by_cat.all["m"].sentiment, Some(30.0));
    let flat = aggregate_stereotype(&rows, AllRowMode::MeanOfCompletions);
    assert_eq!(flat.all["m"].sentiment, Some(45.0));
}

#[test]
fn holdout_shaped_stats() {
    // 40 documents, 1730 sentences in total.
    let docs = (0..40).map(|i| {
        let n = if i < 10 { 44 } else { 43 };
        let text = vec!["The dog ran home."; n].join(" ");
        Document::new(format!("d{i}"), "newsela", text)
    });
    let set = DocumentSet::from_documents(docs).unwrap();
    let stats = corpus_stats(&set);
    assert_eq!(stats.aggregate.sentence_count, 1730);
    assert_eq!(stats.aggregate.avg_sents_per_doc.unwrap().mean, 43.25);
}
