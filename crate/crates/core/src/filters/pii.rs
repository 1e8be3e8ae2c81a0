use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

pub const EMAIL_PATTERN: &str = r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}";
pub const PHONE_PATTERN: &str = r"(\+?\d{1,3}[\s.-]?)?(\(?\d{3}\)?[\s.-]?)\d{3}[\s.-]?\d{4}";
pub const HANDLE_PATTERN: &str = r"@[A-Za-z0-9_]{2,15}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PiiCategory {
    Email,
    Phone,
    Handle,
}

impl PiiCategory {
    pub fn name(self) -> &'static str {
        match self {
            PiiCategory::Email => "email",
            PiiCategory::Phone => "phone",
            PiiCategory::Handle => "handle",
        }
    }

    pub fn placeholder(self) -> &'static str {
        match self {
            PiiCategory::Email => "[EMAIL]",
            PiiCategory::Phone => "[PHONE]",
            PiiCategory::Handle => "[HANDLE]",
        }
    }
}

/// Compiled PII patterns, applied email → phone → handle.
pub struct PiiScrubber {
    patterns: [(PiiCategory, Regex); 3],
}

impl PiiScrubber {
    pub fn new() -> Self {
        let re = |p| Regex::new(p).expect("static PII pattern compiles");
        PiiScrubber {
            patterns: [
                (PiiCategory::Email, re(EMAIL_PATTERN)),
                (PiiCategory::Phone, re(PHONE_PATTERN)),
                (PiiCategory::Handle, re(HANDLE_PATTERN)),
            ],
        }
    }

    pub fn shared() -> &'static PiiScrubber {
        static SCRUBBER: OnceLock<PiiScrubber> = OnceLock::new();
        SCRUBBER.get_or_init(PiiScrubber::new)
    }

    /// Replace every match with its placeholder and count redactions per category.
    ///
    /// Passes repeat until the text stops changing, so the result is a fixed
    /// point and scrubbing is idempotent.
    pub fn scrub(&self, text: &str) -> (String, BTreeMap<PiiCategory, usize>) {
        let mut counts = BTreeMap::new();
        let mut current = text.to_string();
        loop {
            let mut changed = false;
            for (cat, re) in &self.patterns {
                let n = re.find_iter(&current).count();
                if n > 0 {
                    current = re.replace_all(&current, cat.placeholder()).into_owned();
                    *counts.entry(*cat).or_insert(0) += n;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (current, counts)
    }
}

impl Default for PiiScrubber {
    fn default() -> Self {
        Self::new()
    }
}

pub fn scrub_pii(text: &str) -> (String, BTreeMap<PiiCategory, usize>) {
    PiiScrubber::shared().scrub(text)
}
