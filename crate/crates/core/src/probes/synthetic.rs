use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TIER_COUNT: usize = 3;

const SIMPLE_NOUNS: &[&str] = &[
    "cat", "dog", "sun", "ball", "tree", "bird", "fish", "cake", "hat", "boy", "girl", "mom", "dad", "car", "book",
    "duck",
];
const SIMPLE_VERBS: &[&str] = &["sees", "likes", "has", "gets", "wants", "finds", "hugs", "pats"];
const SIMPLE_ADJS: &[&str] = &["big", "red", "small", "happy", "good", "fun", "soft", "new"];
const SYLLABLES: &[&str] = &[
    "ab", "ac", "ble", "con", "cu", "de", "dis", "er", "ex", "gen", "i", "in", "ive", "lat", "lo", "ment", "nal",
    "o", "per", "pro", "qui", "re", "sion", "ta", "ter", "tion", "tri", "u", "ver", "vo",
];
const WORDS_PER_TIER: usize = 120;

/// Sentences over vocabulary tiers of increasing difficulty.
///
/// Tier 0 draws from a small closed list of short words. Higher tiers use
/// longer invented words; each content word comes from the sentence's own
/// tier with probability 0.7 and from a lower tier otherwise.
#[derive(Debug, Clone)]
pub struct GradedTextGenerator {
    seed: u64,
    tiers: Vec<[Vec<String>; 3]>,
}

fn invented(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

impl GradedTextGenerator {
    pub fn new(seed: u64) -> Self {
        let owned = |w: &[&str]| w.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut tiers = vec![[owned(SIMPLE_NOUNS), owned(SIMPLE_VERBS), owned(SIMPLE_ADJS)]];
        // the invented lexicon is fixed; only sentence sampling depends on the seed
        let mut rng = ChaCha8Rng::seed_from_u64(0x7715);
        for tier in 1..TIER_COUNT {
            let mut class = |suffix: &str| -> Vec<String> {
                (0..WORDS_PER_TIER)
                    .map(|_| invented(&mut rng, 2 * tier + 1) + suffix)
                    .collect()
            };
            let nouns = class("");
            let verbs = class("ates");
            let adjs = class("ous");
            tiers.push([nouns, verbs, adjs]);
        }
        GradedTextGenerator { seed, tiers }
    }

    fn word(&self, rng: &mut ChaCha8Rng, tier: usize, class: usize) -> String {
        let t = if tier == 0 || rng.random::<f64>() < 0.7 {
            tier
        } else {
            rng.random_range(0..tier)
        };
        self.tiers[t][class].choose(rng).unwrap().clone()
    }

    fn sentence(&self, rng: &mut ChaCha8Rng, tier: usize) -> Vec<String> {
        let mut s = vec!["the".to_string()];
        if rng.random::<bool>() {
            s.push(self.word(rng, tier, 2));
        }
        s.push(self.word(rng, tier, 0));
        s.push(self.word(rng, tier, 1));
        s.push("the".into());
        s.push(self.word(rng, tier, 0));
        if rng.random::<f64>() < 0.3 {
            s.push("and".into());
            s.push("the".into());
            s.push(self.word(rng, tier, 0));
            s.push(self.word(rng, tier, 1));
        }
        s
    }

    /// `n` tokenized sentences of `tier` (clamped to the highest tier); `stream`
    /// selects an independent sample.
    pub fn generate(&self, tier: usize, n: usize, stream: u64) -> Vec<Vec<String>> {
        let tier = tier.min(TIER_COUNT - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        (0..n).map(|_| self.sentence(&mut rng, tier)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_tiered() {
        let g = GradedTextGenerator::new(3);
        assert_eq!(g.generate(1, 5, 9), g.generate(1, 5, 9));
        assert_ne!(g.generate(1, 5, 9), g.generate(1, 5, 10));
        let simple: Vec<String> = g.generate(0, 50, 0).concat();
        assert!(simple.iter().all(|w| w.len() <= 5));
        let complex: Vec<String> = g.generate(2, 50, 0).concat();
        let mean = |v: &[String]| v.iter().map(|w| w.len()).sum::<usize>() as f64 / v.len() as f64;
        assert!(mean(&complex) > mean(&simple) + 3.0);
    }
}
