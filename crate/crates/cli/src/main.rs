use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod artifact;
mod commands;
mod config;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] kidlm_forge::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::Core(kidlm_forge::Error::Config(_)) => "config",
            CliError::Io { .. } | CliError::Core(kidlm_forge::Error::Io { .. }) => "io",
            CliError::Core(_) | CliError::Runtime(_) => "runtime",
        }
    }

    fn exit_code(&self) -> u8 {
        if self.kind() == "config" {
            2
        } else {
            1
        }
    }
}

#[derive(Parser)]
#[command(name = "kidlm-forge", version, about = "Curate child-directed corpora, export stratified masking data and run probes")]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Validate raw JSONL documents and write a clean document set
    Ingest,
    /// Apply quality rules, PII scrubbing and the language filter
    Filter,
    /// Per-source document and sentence statistics
    Stats,
    /// Word-class proportions and lexicon sizes
    Strata,
    /// Export masked training examples
    Mask,
    /// Mean sentence pseudo-perplexity per grade level
    EvalPpl,
    /// "why are {group} so ..." completions scored for sentiment and toxicity
    ProbeStereotype,
    /// Top-k fillers for the cloze templates
    ProbeCloze,
    /// Substitutes for complex words in context
    ProbeSimplify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Filter => "filter",
            Command::Stats => "stats",
            Command::Strata => "strata",
            Command::Mask => "mask",
            Command::EvalPpl => "eval-ppl",
            Command::ProbeStereotype => "probe-stereotype",
            Command::ProbeCloze => "probe-cloze",
            Command::ProbeSimplify => "probe-simplify",
        }
    }
}

#[derive(Args, Default)]
struct Options {
    /// Flat `key = value` configuration file; flags override it
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (0 = logical CPUs, 1 = sequential)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// kidlm | kidlm-plus | custom:p1,p2,p3
    #[arg(long, global = true)]
    policy: Option<String>,
    /// pure | bert
    #[arg(long, global = true)]
    corruption: Option<String>,
    /// reference | http(s) URL
    #[arg(long, global = true)]
    scorer: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    top_m: Option<usize>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Documents JSONL used to fit the reference scorer
    #[arg(long, global = true, value_name = "PATH")]
    train: Option<PathBuf>,
    /// Quality rules (JSON array)
    #[arg(long, global = true, value_name = "PATH")]
    rules: Option<PathBuf>,
    /// Minimum English confidence (inclusive)
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true, value_name = "PATH")]
    stopwords: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    dalechall: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    adjectives: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    groups: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    templates: Option<PathBuf>,
    /// Pre-tokenized sequences JSONL for `mask`
    #[arg(long, global = true, value_name = "PATH")]
    pretokenized: Option<PathBuf>,
    /// word | token
    #[arg(long, global = true)]
    unit: Option<String>,
    #[arg(long, global = true)]
    smoothing: Option<f64>,
    /// Completions kept per stereotype prompt
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Ranked tokens per cloze or simplification query
    #[arg(long, global = true)]
    k: Option<usize>,
    /// masked | prefix
    #[arg(long, global = true)]
    form: Option<String>,
    /// category-means | completions
    #[arg(long, global = true)]
    all_mode: Option<String>,
    /// Source name for records without one (ingest)
    #[arg(long, global = true)]
    source: Option<String>,
    /// Unknown-token entry returned by a remote scorer
    #[arg(long, global = true)]
    unk_token: Option<String>,
}

impl Options {
    fn overrides(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        put("seed", self.seed.map(|v| v.to_string()));
        put("jobs", self.jobs.map(|v| v.to_string()));
        put("policy", self.policy.clone());
        put("corruption", self.corruption.clone());
        put("scorer", self.scorer.clone());
        put("top_m", self.top_m.map(|v| v.to_string()));
        put("out", path(&self.out));
        put("input", path(&self.input));
        put("train", path(&self.train));
        put("rules", path(&self.rules));
        put("threshold", self.threshold.map(|v| v.to_string()));
        put("stopwords", path(&self.stopwords));
        put("dalechall", path(&self.dalechall));
        put("adjectives", path(&self.adjectives));
        put("groups", path(&self.groups));
        put("templates", path(&self.templates));
        put("pretokenized", path(&self.pretokenized));
        put("unit", self.unit.clone());
        put("smoothing", self.smoothing.map(|v| v.to_string()));
        put("n", self.n.map(|v| v.to_string()));
        put("k", self.k.map(|v| v.to_string()));
        put("form", self.form.clone());
        put("all_mode", self.all_mode.clone());
        put("source", self.source.clone());
        put("unk_token", self.unk_token.clone());
        m
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cli.command.name(), cli.opts.config.as_deref(), cli.opts.overrides())?;
    log::info!("{} config_sha256={} seed={}", cfg.command, cfg.digest(), cfg.seed);
    let written = match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Filter => commands::filter(&cfg),
        Command::Stats => commands::stats(&cfg),
        Command::Strata => commands::strata(&cfg),
        Command::Mask => commands::mask(&cfg),
        Command::EvalPpl => commands::eval_ppl(&cfg),
        Command::ProbeStereotype => commands::probe_stereotype(&cfg),
        Command::ProbeCloze => commands::probe_cloze(&cfg),
        Command::ProbeSimplify => commands::probe_simplify(&cfg),
    }?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KIDLM_FORGE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{report}");
            ExitCode::from(e.exit_code())
        }
    }
}
