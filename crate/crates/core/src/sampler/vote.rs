use std::collections::BTreeMap;

use super::SamplerError;

/// How supporters' rewards are combined in [`weighted_majority_vote`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum VoteWeighting {
    /// Sum of raw rewards.
    #[default]
    Sum,
    /// Sum of `exp(r / beta)`, shifted by the max reward.
    Exponential { beta: f64 },
}

/// Most frequent answer; ties go to the smallest answer id.
pub fn majority_vote(answers: &[u32]) -> Result<u32, SamplerError> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &a in answers {
        *counts.entry(a).or_default() += 1;
    }
    // BTreeMap iterates ascending, so keeping the first maximum breaks ties low.
    let mut best: Option<(u32, usize)> = None;
    for (a, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((a, c));
        }
    }
    best.map(|(a, _)| a).ok_or(SamplerError::NoCandidates)
}

/// Answer with the largest total supporter weight; ties go to the smallest id.
pub fn weighted_majority_vote(
    answers: &[u32],
    rewards: &[f64],
    weighting: VoteWeighting,
) -> Result<u32, SamplerError> {
    if answers.len() != rewards.len() {
        return Err(SamplerError::LengthMismatch(answers.len(), rewards.len()));
    }
    if let Some(i) = rewards.iter().position(|r| !r.is_finite()) {
        return Err(SamplerError::NonFiniteReward(i));
    }
    let weights: Vec<f64> = match weighting {
        VoteWeighting::Sum => rewards.to_vec(),
        VoteWeighting::Exponential { beta } => {
            super::policy::check_beta(beta)?;
            let r_max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            rewards.iter().map(|r| ((r - r_max) / beta).exp()).collect()
        }
    };
    let mut totals: BTreeMap<u32, f64> = BTreeMap::new();
    for (&a, w) in answers.iter().zip(&weights) {
        *totals.entry(a).or_default() += w;
    }
    let mut best: Option<(u32, f64)> = None;
    for (a, w) in totals {
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((a, w));
        }
    }
    best.map(|(a, _)| a).ok_or(SamplerError::NoCandidates)
}
