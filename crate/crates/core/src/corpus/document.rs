use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// A source text unit with provenance metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    /// Kindergarten is 0, grades 1 through 12 map to themselves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade_level: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, source: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            source: source.into(),
            url: None,
            text: text.into(),
            tags: Vec::new(),
            grade_level: None,
            region: None,
        }
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tags = tags.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_grade(mut self, grade: u8) -> Self {
        self.grade_level = Some(grade);
        self
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty-id".into());
        }
        if self.text.trim().is_empty() {
            return Err("empty-text".into());
        }
        if matches!(self.grade_level, Some(g) if g > 12) {
            return Err("invalid-field:grade_level".into());
        }
        Ok(())
    }
}

/// Documents with unique ids, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocumentSet {
    docs: Vec<Document>,
    ids: HashSet<String>,
}

impl DocumentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut set = DocumentSet::new();
        for doc in docs {
            set.insert(doc)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, doc: Document) -> Result<()> {
        doc.validate().map_err(Error::InvalidInput)?;
        if !self.ids.insert(doc.id.clone()) {
            return Err(Error::InvalidInput(format!("duplicate-id: {}", doc.id)));
        }
        self.docs.push(doc);
        Ok(())
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn as_slice(&self) -> &[Document] {
        &self.docs
    }

    pub fn into_vec(self) -> Vec<Document> {
        self.docs
    }
}

impl<'a> IntoIterator for &'a DocumentSet {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub documents: DocumentSet,
    pub rejects: Vec<Reject>,
}

impl IngestOutcome {
    pub fn reject_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.rejects {
            *counts.entry(r.reason.clone()).or_insert(0) += 1;
        }
        counts
    }
}

/// Parse grade labels such as `3`, `K`, `K-1` or `2-3`; ranges map to their lower bound.
pub fn parse_grade_label(label: &str) -> Option<u8> {
    let lower = label.trim().split(['-', '–']).next()?.trim();
    let lower = lower
        .strip_prefix("Grade")
        .or_else(|| lower.strip_prefix("grade"))
        .unwrap_or(lower)
        .trim();
    let grade = if lower.eq_ignore_ascii_case("k") {
        0
    } else {
        lower.parse::<u8>().ok()?
    };
    (grade <= 12).then_some(grade)
}

pub fn is_meta_line(value: &Value) -> bool {
    value.as_object().is_some_and(|o| o.contains_key("_meta"))
}

fn string_field(
    obj: &serde_json::Map<String, Value>,
    key: &str,
) -> std::result::Result<Option<String>, String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(format!("invalid-field:{key}")),
    }
}

fn parse_record(value: Value, default_source: Option<&str>) -> std::result::Result<Document, String> {
    let Value::Object(obj) = value else {
        return Err("not-an-object".into());
    };
    let id = string_field(&obj, "id")?.ok_or("missing-field:id")?;
    let source = match string_field(&obj, "source")? {
        Some(s) => s,
        None => default_source.ok_or("missing-field:source")?.to_string(),
    };
    let text = string_field(&obj, "text")?.ok_or("missing-field:text")?;
    let url = string_field(&obj, "url")?;
    let region = string_field(&obj, "region")?;
    let tags = match obj.get("tags") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|t| t.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .ok_or("invalid-field:tags")?,
        Some(_) => return Err("invalid-field:tags".into()),
    };
    let grade_level = match obj.get("grade_level") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => Some(
            n.as_u64()
                .filter(|g| *g <= 12)
                .ok_or("invalid-field:grade_level")? as u8,
        ),
        Some(Value::String(s)) => Some(parse_grade_label(s).ok_or("invalid-field:grade_level")?),
        Some(_) => return Err("invalid-field:grade_level".into()),
    };
    let doc = Document {
        id,
        source,
        url,
        text,
        tags,
        grade_level,
        region,
    };
    doc.validate()?;
    Ok(doc)
}

/// Read line-delimited document records.
///
/// Malformed records are collected as rejects rather than failing the whole
/// stream. `default_source` fills in records that omit `source`. Blank lines and
/// `{"_meta": ...}` header lines are skipped.
pub fn ingest_documents<R: BufRead>(reader: R, default_source: Option<&str>) -> Result<IngestOutcome> {
    let mut out = IngestOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => {
                out.rejects.push(Reject {
                    line: lineno,
                    reason: "malformed-json".into(),
                });
                continue;
            }
        };
        if is_meta_line(&value) {
            continue;
        }
        let reason = match parse_record(value, default_source) {
            Ok(doc) if out.documents.contains_id(&doc.id) => "duplicate-id".to_string(),
            Ok(doc) => {
                out.documents.insert(doc)?;
                continue;
            }
            Err(reason) => reason,
        };
        log::debug!("rejecting line {lineno}: {reason}");
        out.rejects.push(Reject {
            line: lineno,
            reason,
        });
    }
    Ok(out)
}

/// Strict reader used between pipeline stages: any reject is an error.
pub fn read_documents<R: BufRead>(reader: R) -> Result<DocumentSet> {
    let outcome = ingest_documents(reader, None)?;
    if let Some(r) = outcome.rejects.first() {
        return Err(Error::InvalidInput(format!(
            "document record on line {}: {}",
            r.line, r.reason
        )));
    }
    Ok(outcome.documents)
}

pub fn write_documents<W: Write>(mut w: W, docs: &DocumentSet) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
