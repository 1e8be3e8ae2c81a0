use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{MaskedExample, TokenizedSequence};
use crate::error::{Error, Result};

fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
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

fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_masked_examples<R: BufRead>(reader: R) -> Result<Vec<MaskedExample>> {
    let examples: Vec<MaskedExample> = read_jsonl(reader)?;
    for ex in &examples {
        ex.validate()?;
    }
    Ok(examples)
}

pub fn write_masked_examples<W: Write>(w: W, examples: &[MaskedExample]) -> Result<()> {
    write_jsonl(w, examples)
}

/// Pre-tokenized input: `{"id", "tokens", "word_spans": [[start, end, "word"]]}` per line.
pub fn read_tokenized_sequences<R: BufRead>(reader: R) -> Result<Vec<TokenizedSequence>> {
    let seqs: Vec<TokenizedSequence> = read_jsonl(reader)?;
    for s in &seqs {
        s.validate()?;
    }
    Ok(seqs)
}

pub fn write_tokenized_sequences<W: Write>(w: W, seqs: &[TokenizedSequence]) -> Result<()> {
    write_jsonl(w, seqs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use crate::strata::Stratum;

    #[test]
    fn masked_example_wire_format() {
        let ex = MaskedExample {
            id: "d:0".into(),
            tokens: vec!["[MASK]".into(), "cat".into()],
            mask_positions: vec![0],
            labels: BTreeMap::from([(0, "The".to_string())]),
            strata: BTreeMap::from([(0, Stratum::Stopword)]),
        };
        let mut buf = Vec::new();
        write_masked_examples(&mut buf, std::slice::from_ref(&ex)).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "{\"id\":\"d:0\",\"tokens\":[\"[MASK]\",\"cat\"],\"mask_positions\":[0],\"labels\":{\"0\":\"The\"},\"strata\":{\"0\":\"stopword\"}}\n"
        );
        assert_eq!(read_masked_examples(buf.as_slice()).unwrap(), vec![ex]);
    }

    #[test]
    fn numeric_key_order() {
        let ex = MaskedExample {
            id: "x".into(),
            tokens: (0..12).map(|i| i.to_string()).collect(),
            mask_positions: vec![2, 10],
            labels: BTreeMap::from([(2, "2".to_string()), (10, "10".to_string())]),
            strata: BTreeMap::from([(2, Stratum::Other), (10, Stratum::Other)]),
        };
        let s = serde_json::to_string(&ex).unwrap();
        assert!(s.contains(r#""labels":{"2":"2","10":"10"}"#), "{s}");
    }

    #[test]
    fn rejects_inconsistent_example() {
        let line = r#"{"id":"x","tokens":["a"],"mask_positions":[0],"labels":{},"strata":{}}"#;
        assert!(read_masked_examples(line.as_bytes()).is_err());
    }

    #[test]
    fn pretokenized_input() {
        let line = r###"{"id":"p","tokens":["butter","##fly"],"word_spans":[[0,2,"butterfly"]]}"###;
        let seqs = read_tokenized_sequences(line.as_bytes()).unwrap();
        assert_eq!(seqs[0].word_spans.len(), 1);
    }
}
