use super::MaskedExample;
use crate::error::{Error, Result};
use crate::scoring::ScoredDistribution;

const MASS_TOLERANCE: f64 = 1e-6;

/// Mean negative log-likelihood (natural log) of the labels at the masked positions.
///
/// `distributions` must hold one entry per mask position, in the same order.
pub fn mlm_loss(example: &MaskedExample, distributions: &[ScoredDistribution]) -> Result<f64> {
    if example.mask_positions.is_empty() {
        return Err(Error::EmptySequence);
    }
    if distributions.len() != example.mask_positions.len() {
        return Err(Error::InvalidInput(format!(
            "{}: {} distributions for {} mask positions",
            example.id,
            distributions.len(),
            example.mask_positions.len()
        )));
    }
    let mut total = 0.0;
    for (&pos, dist) in example.mask_positions.iter().zip(distributions) {
        if dist.position != pos {
            return Err(Error::PositionMismatch {
                expected: pos,
                actual: dist.position,
            });
        }
        let mass = dist.mass();
        let normalized = if dist.truncated {
            mass <= 1.0 + MASS_TOLERANCE
        } else {
            (mass - 1.0).abs() <= MASS_TOLERANCE
        };
        if !normalized {
            return Err(Error::NotNormalized { mass });
        }
        let label = example
            .labels
            .get(&pos)
            .ok_or_else(|| Error::InvalidInput(format!("{}: no label at position {pos}", example.id)))?;
        let lp = dist
            .logprob(label)
            .ok_or_else(|| Error::LabelOutOfVocab(label.clone()))?;
        total -= lp;
    }
    Ok(total / example.mask_positions.len() as f64)
}
