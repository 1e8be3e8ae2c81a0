use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strata::Stratum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corruption {
    /// Replace every selected token with the mask token.
    #[default]
    PureMask,
    /// 80% mask token, 10% random token, 10% unchanged.
    #[serde(rename = "bert-80-10-10")]
    Bert801010,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskingUnit {
    /// One draw per word span; all of its tokens are corrupted together.
    #[default]
    Word,
    /// One draw per token (ablation).
    Token,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingPolicy {
    pub p_stopword: f64,
    pub p_dalechall: f64,
    pub p_other: f64,
    pub corruption: Corruption,
    pub unit: MaskingUnit,
    pub seed: u64,
}

impl MaskingPolicy {
    /// Stratified masking: 0.15 stopwords, 0.20 Dale-Chall words, 0.25 other words.
    pub fn kidlm_plus(seed: u64) -> Self {
        Self::from_probs(0.15, 0.20, 0.25, seed)
    }

    /// Uniform 0.15 baseline.
    pub fn kidlm(seed: u64) -> Self {
        Self::uniform(0.15, seed)
    }

    pub fn uniform(p: f64, seed: u64) -> Self {
        Self::from_probs(p, p, p, seed)
    }

    pub fn custom(p_stopword: f64, p_dalechall: f64, p_other: f64, seed: u64) -> Result<Self> {
        let p = Self::from_probs(p_stopword, p_dalechall, p_other, seed);
        p.validate()?;
        Ok(p)
    }

    fn from_probs(p_stopword: f64, p_dalechall: f64, p_other: f64, seed: u64) -> Self {
        MaskingPolicy {
            p_stopword,
            p_dalechall,
            p_other,
            corruption: Corruption::default(),
            unit: MaskingUnit::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("stopword", self.p_stopword),
            ("dalechall", self.p_dalechall),
            ("other", self.p_other),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} masking probability {p} not in [0,1]")));
            }
        }
        Ok(())
    }

    pub fn probability(&self, stratum: Stratum) -> f64 {
        match stratum {
            Stratum::Stopword => self.p_stopword,
            Stratum::DaleChall => self.p_dalechall,
            Stratum::Other => self.p_other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(MaskingPolicy::custom(0.1, 1.2, 0.1, 0).is_err());
        assert!(MaskingPolicy::custom(-0.1, 0.2, 0.1, 0).is_err());
        assert!(MaskingPolicy::custom(f64::NAN, 0.2, 0.1, 0).is_err());
    }

    #[test]
    fn serde_names() {
        assert_eq!(serde_json::to_string(&Corruption::Bert801010).unwrap(), "\"bert-80-10-10\"");
        assert_eq!(serde_json::to_string(&Corruption::PureMask).unwrap(), "\"pure-mask\"");
    }
}
