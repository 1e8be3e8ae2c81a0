use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::FilterReport;
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageVerdict {
    /// ISO-639-1 code, or `und` when nothing could be scored.
    pub language: String,
    pub confidence: f64,
}

pub trait LanguageDetector: Sync {
    fn detect(&self, text: &str) -> LanguageVerdict;
}

impl<F> LanguageDetector for F
where
    F: Fn(&str) -> LanguageVerdict + Sync,
{
    fn detect(&self, text: &str) -> LanguageVerdict {
        self(text)
    }
}

const PROFILE_TEXTS: [(&str, &str); 5] = [
    ("en", include_str!("../../data/lang/en.txt")),
    ("fr", include_str!("../../data/lang/fr.txt")),
    ("de", include_str!("../../data/lang/de.txt")),
    ("es", include_str!("../../data/lang/es.txt")),
    ("hi", include_str!("../../data/lang/hi.txt")),
];

/// Scale applied to the mean per-character log-likelihood before the softmax.
/// Mixed-language sentences pull the language means together and so lose confidence.
const SHARPNESS: f64 = 6.0;

/// Interpolation weights for the trigram, bigram and unigram character orders.
const WEIGHTS: [f64; 3] = [0.6, 0.3, 0.1];

/// Characters outside every profile still get this much unigram mass.
const ALPHABET_FLOOR: f64 = 1.0 / 4096.0;

fn padded_words(text: &str) -> Vec<Vec<char>> {
    text.split(|c: char| !(c.is_alphabetic() || c == '\'' || is_combining(c)))
        .filter(|w| !w.is_empty())
        .map(|w| {
            std::iter::once(' ')
                .chain(std::iter::once(' '))
                .chain(w.chars().flat_map(char::to_lowercase))
                .chain(std::iter::once(' '))
                .collect()
        })
        .collect()
}

/// Devanagari vowel signs and viramas are marks, not alphabetic characters.
fn is_combining(c: char) -> bool {
    matches!(c, '\u{0900}'..='\u{0903}' | '\u{093A}'..='\u{094F}' | '\u{0951}'..='\u{0957}' | '\u{0962}'..='\u{0963}')
}

/// Interpolated character model p(c | a b).
struct Profile {
    language: &'static str,
    tri: HashMap<[char; 3], u32>,
    tri_ctx: HashMap<[char; 2], u32>,
    bi: HashMap<[char; 2], u32>,
    bi_ctx: HashMap<char, u32>,
    uni: HashMap<char, u32>,
    total: u32,
}

impl Profile {
    fn build(language: &'static str, sample: &str) -> Self {
        let mut p = Profile {
            language,
            tri: HashMap::new(),
            tri_ctx: HashMap::new(),
            bi: HashMap::new(),
            bi_ctx: HashMap::new(),
            uni: HashMap::new(),
            total: 0,
        };
        for word in padded_words(sample) {
            for w in word.windows(3) {
                *p.tri.entry([w[0], w[1], w[2]]).or_default() += 1;
                *p.tri_ctx.entry([w[0], w[1]]).or_default() += 1;
                *p.bi.entry([w[1], w[2]]).or_default() += 1;
                *p.bi_ctx.entry(w[1]).or_default() += 1;
                *p.uni.entry(w[2]).or_default() += 1;
                p.total += 1;
            }
        }
        p
    }

    fn ratio(num: Option<&u32>, den: Option<&u32>) -> f64 {
        match (num, den) {
            (Some(&n), Some(&d)) if d > 0 => n as f64 / d as f64,
            _ => 0.0,
        }
    }

    fn log_prob(&self, a: char, b: char, c: char) -> f64 {
        let tri = Self::ratio(self.tri.get(&[a, b, c]), self.tri_ctx.get(&[a, b]));
        let bi = Self::ratio(self.bi.get(&[b, c]), self.bi_ctx.get(&b));
        let uni = (self.uni.get(&c).copied().unwrap_or(0) as f64 + ALPHABET_FLOOR)
            / (self.total as f64 + 1.0);
        (WEIGHTS[0] * tri + WEIGHTS[1] * bi + WEIGHTS[2] * uni).ln()
    }

    /// Mean log-likelihood per predicted character, or `None` for text with no letters.
    fn mean_log_likelihood(&self, words: &[Vec<char>]) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for w in words {
            for win in w.windows(3) {
                sum += self.log_prob(win[0], win[1], win[2]);
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// Character-trigram model classifier over bundled en/fr/de/es/hi samples.
///
/// Confidence is a softmax over languages of the scaled mean character
/// log-likelihood, so it lies in [0, 1] and sums to one across profiles.
pub struct TrigramDetector {
    profiles: Vec<Profile>,
}

impl TrigramDetector {
    pub fn bundled() -> &'static TrigramDetector {
        static DETECTOR: OnceLock<TrigramDetector> = OnceLock::new();
        DETECTOR.get_or_init(|| TrigramDetector {
            profiles: PROFILE_TEXTS
                .iter()
                .map(|(lang, text)| Profile::build(lang, text))
                .collect(),
        })
    }

    /// Confidence per language code, in profile order.
    pub fn scores(&self, text: &str) -> Vec<(&'static str, f64)> {
        let words = padded_words(text);
        let Some(logits) = self
            .profiles
            .iter()
            .map(|p| p.mean_log_likelihood(&words).map(|ll| SHARPNESS * ll))
            .collect::<Option<Vec<f64>>>()
        else {
            return Vec::new();
        };
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        self.profiles
            .iter()
            .zip(exps)
            .map(|(p, e)| (p.language, e / z))
            .collect()
    }
}

impl LanguageDetector for TrigramDetector {
    fn detect(&self, text: &str) -> LanguageVerdict {
        let best = self
            .scores(text)
            .into_iter()
            .fold(None::<(&str, f64)>, |best, (l, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((l, c)),
            });
        match best {
            Some((language, confidence)) => LanguageVerdict {
                language: language.to_string(),
                confidence: confidence.clamp(0.0, 1.0),
            },
            None => LanguageVerdict {
                language: "und".to_string(),
                confidence: 0.0,
            },
        }
    }
}

/// Keep a sentence iff the detector says `en` with confidence at or above `threshold`.
pub fn filter_language(
    sentences: &[Sentence],
    detector: &dyn LanguageDetector,
    threshold: f64,
) -> Result<(Vec<Sentence>, FilterReport)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("language threshold must be in [0,1], got {threshold}")));
    }
    let verdicts = Execution::default().map(sentences, |_, s| detector.detect(&s.text));
    let mut kept = Vec::new();
    let mut report = FilterReport::default();
    for (s, v) in sentences.iter().zip(verdicts) {
        if v.language != "en" {
            report.drop("non-english");
        } else if v.confidence < threshold {
            report.drop("low-confidence");
        } else {
            report.keep();
            kept.push(s.clone());
        }
    }
    Ok((kept, report))
}
