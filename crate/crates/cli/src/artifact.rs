//! Atomic artifact writes with a provenance header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use kidlm_forge::report::Table;
use serde::Serialize;

use crate::CliError;

pub struct Artifacts {
    dir: PathBuf,
    digest: String,
    seed: u64,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, digest: String, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            digest,
            seed,
            written: Vec::new(),
        })
    }

    /// Write to a temporary file in the target directory, then rename.
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp-{}", std::process::id()));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(&path, e));
        }
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    fn provenance(&self) -> String {
        format!("kidlm-forge config_sha256={} seed={}", self.digest, self.seed)
    }

    /// CSV with a leading `#` provenance line.
    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let body = format!("# {}\n{}", self.provenance(), table.to_csv());
        self.write(name, body.as_bytes())
    }

    /// Markdown with an HTML-comment provenance line.
    pub fn markdown(&mut self, name: &str, title: &str, table: &Table) -> Result<(), CliError> {
        let body = format!("<!-- {} -->\n\n## {title}\n\n{}", self.provenance(), table.to_markdown());
        self.write(name, body.as_bytes())
    }

    /// JSON Lines whose first line is `{"_meta": {...}}`.
    pub fn jsonl<T: Serialize>(&mut self, name: &str, items: &[T]) -> Result<(), CliError> {
        let mut buf = self.meta_line();
        for item in items {
            serde_json::to_writer(&mut buf, item).map_err(|e| CliError::Runtime(e.to_string()))?;
            buf.push(b'\n');
        }
        self.write(name, &buf)
    }

    /// JSON Lines from already-serialized bytes (one object per line).
    pub fn jsonl_bytes(&mut self, name: &str, body: &[u8]) -> Result<(), CliError> {
        let mut buf = self.meta_line();
        buf.extend_from_slice(body);
        self.write(name, &buf)
    }

    /// Pretty JSON object with `config_sha256` and `seed` fields added.
    pub fn json(&mut self, name: &str, value: serde_json::Value) -> Result<(), CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("config_sha256".into(), self.digest.clone().into());
        obj.insert("seed".into(), self.seed.into());
        match value {
            serde_json::Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("report".into(), other);
            }
        }
        let mut body = serde_json::to_vec_pretty(&obj).map_err(|e| CliError::Runtime(e.to_string()))?;
        body.push(b'\n');
        self.write(name, &body)
    }

    fn meta_line(&self) -> Vec<u8> {
        let meta = serde_json::json!({"_meta": {"tool": "kidlm-forge", "config_sha256": self.digest, "seed": self.seed}});
        let mut buf = serde_json::to_vec(&meta).expect("meta serializes");
        buf.push(b'\n');
        buf
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
