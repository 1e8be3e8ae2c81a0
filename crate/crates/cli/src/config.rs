//! Run configuration: a flat `key = value` file overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kidlm_forge::masking::{Corruption, MaskingPolicy, MaskingUnit};
use kidlm_forge::probes::{AllRowMode, QueryForm};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const KEYS: &[&str] = &[
    "input",
    "train",
    "out",
    "rules",
    "stopwords",
    "dalechall",
    "adjectives",
    "groups",
    "templates",
    "policy",
    "corruption",
    "unit",
    "seed",
    "jobs",
    "threshold",
    "scorer",
    "top_m",
    "smoothing",
    "n",
    "k",
    "form",
    "all_mode",
    "source",
    "pretokenized",
    "max_in_flight",
    "max_batch",
    "timeout_secs",
    "retries",
    "unk_token",
];

/// Keys that do not change artifact contents and stay out of the digest.
const NOT_DIGESTED: &[&str] = &["out", "jobs"];

const PATH_KEYS: &[&str] = &[
    "input",
    "train",
    "rules",
    "stopwords",
    "dalechall",
    "adjectives",
    "groups",
    "templates",
    "pretokenized",
];

/// Parse `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("config line {}: unknown key {key:?}", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("config line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScorerSpec {
    Reference,
    Remote(String),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    values: BTreeMap<String, String>,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}")))
}

impl RunConfig {
    /// Merge file values with flag overrides and check referenced paths.
    pub fn resolve(
        command: &str,
        file: Option<&Path>,
        flags: BTreeMap<String, String>,
    ) -> Result<RunConfig, CliError> {
        let mut values = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        values.extend(flags);
        for key in PATH_KEYS {
            if let Some(p) = values.get(*key) {
                if !Path::new(p).exists() {
                    return Err(CliError::Config(format!("{key}: path {p:?} does not exist")));
                }
            }
        }
        let seed = match values.get("seed") {
            Some(v) => parse_num("seed", v)?,
            None => 0,
        };
        let jobs = match values.get("jobs") {
            Some(v) => parse_num("jobs", v)?,
            None => 0,
        };
        let out = PathBuf::from(values.get("out").map_or(".", String::as_str));
        let cfg = RunConfig {
            command: command.to_string(),
            values,
            seed,
            jobs,
            out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.policy()?;
        self.threshold()?;
        self.scorer()?;
        self.top_m()?;
        self.smoothing()?;
        self.n()?;
        self.k()?;
        self.form()?;
        self.all_mode()?;
        self.remote_limits()?;
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.path(key)
            .ok_or_else(|| CliError::Config(format!("{}: --{} is required", self.command, key.replace('_', "-"))))
    }

    /// SHA-256 of the effective settings (subcommand plus sorted key = value lines).
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("command = {}\n", self.command));
        for (k, v) in &self.values {
            if !NOT_DIGESTED.contains(&k.as_str()) {
                h.update(format!("{k} = {v}\n"));
            }
        }
        h.update(format!("seed = {}\n", self.seed));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn policy(&self) -> Result<MaskingPolicy, CliError> {
        let spec = self.get("policy").unwrap_or("kidlm-plus");
        let mut policy = match spec {
            "kidlm-plus" => MaskingPolicy::kidlm_plus(self.seed),
            "kidlm" => MaskingPolicy::kidlm(self.seed),
            other => {
                let probs = other
                    .strip_prefix("custom:")
                    .ok_or_else(|| CliError::Config(format!("policy: unknown value {other:?}")))?;
                let p: Vec<f64> = probs
                    .split(',')
                    .map(|x| parse_num("policy", x.trim()))
                    .collect::<Result<_, _>>()?;
                if p.len() != 3 {
                    return Err(CliError::Config("policy: custom needs three probabilities".into()));
                }
                MaskingPolicy::custom(p[0], p[1], p[2], self.seed).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        policy.corruption = match self.get("corruption").unwrap_or("pure") {
            "pure" => Corruption::PureMask,
            "bert" => Corruption::Bert801010,
            other => return Err(CliError::Config(format!("corruption: unknown value {other:?}"))),
        };
        policy.unit = match self.get("unit").unwrap_or("word") {
            "word" => MaskingUnit::Word,
            "token" => MaskingUnit::Token,
            other => return Err(CliError::Config(format!("unit: unknown value {other:?}"))),
        };
        Ok(policy)
    }

    pub fn threshold(&self) -> Result<f64, CliError> {
        let t: f64 = match self.get("threshold") {
            Some(v) => parse_num("threshold", v)?,
            None => 0.9,
        };
        if !(0.0..=1.0).contains(&t) {
            return Err(CliError::Config(format!("threshold: {t} not in [0,1]")));
        }
        Ok(t)
    }

    pub fn scorer(&self) -> Result<ScorerSpec, CliError> {
        match self.get("scorer").unwrap_or("reference") {
            "reference" => Ok(ScorerSpec::Reference),
            url if url.starts_with("http://") || url.starts_with("https://") => Ok(ScorerSpec::Remote(url.into())),
            other => Err(CliError::Config(format!("scorer: expected \"reference\" or an http(s) URL, got {other:?}"))),
        }
    }

    fn positive(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = match self.get(key) {
            Some(v) => parse_num(key, v)?,
            None => default,
        };
        if v == 0 {
            return Err(CliError::Config(format!("{key}: must be at least 1")));
        }
        Ok(v)
    }

    pub fn top_m(&self) -> Result<usize, CliError> {
        self.positive("top_m", 50)
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.positive("n", 5)
    }

    pub fn k(&self) -> Result<usize, CliError> {
        self.positive("k", 5)
    }

    pub fn smoothing(&self) -> Result<f64, CliError> {
        let s: f64 = match self.get("smoothing") {
            Some(v) => parse_num("smoothing", v)?,
            None => 1.0,
        };
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Config(format!("smoothing: must be > 0, got {s}")));
        }
        Ok(s)
    }

    pub fn form(&self) -> Result<QueryForm, CliError> {
        match self.get("form").unwrap_or("masked") {
            "masked" => Ok(QueryForm::Masked),
            "prefix" => Ok(QueryForm::Prefix),
            other => Err(CliError::Config(format!("form: unknown value {other:?}"))),
        }
    }

    pub fn all_mode(&self) -> Result<AllRowMode, CliError> {
        match self.get("all_mode").unwrap_or("category-means") {
            "category-means" => Ok(AllRowMode::MeanOfCategoryMeans),
            "completions" => Ok(AllRowMode::MeanOfCompletions),
            other => Err(CliError::Config(format!("all_mode: unknown value {other:?}"))),
        }
    }

    pub fn remote_limits(&self) -> Result<kidlm_forge::scoring::RemoteLimits, CliError> {
        let d = kidlm_forge::scoring::RemoteLimits::default();
        let retries = match self.get("retries") {
            Some(v) => parse_num("retries", v)?,
            None => d.retries,
        };
        Ok(kidlm_forge::scoring::RemoteLimits {
            max_in_flight: self.positive("max_in_flight", d.max_in_flight)?,
            max_batch: self.positive("max_batch", d.max_batch)?,
            timeout: std::time::Duration::from_secs(self.positive("timeout_secs", d.timeout.as_secs() as usize)? as u64),
            retries,
        })
    }
}
