use super::SamplerError;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Position of the trajectory in whatever collection the caller drew it from.
    pub source: usize,
    pub reward: f64,
    pub answer_id: Option<u32>,
}

/// N sampled trajectories for one problem with their rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
    r_max: f64,
    ref_weights: Vec<f64>,
}

impl CandidateSet {
    /// Uniform reference weights `1/N`.
    pub fn new(candidates: Vec<Candidate>) -> Result<Self, SamplerError> {
        let n = candidates.len();
        Self::with_ref_weights(candidates, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn from_rewards(rewards: &[f64]) -> Result<Self, SamplerError> {
        Self::new(
            rewards
                .iter()
                .enumerate()
                .map(|(i, &reward)| Candidate {
                    source: i,
                    reward,
                    answer_id: None,
                })
                .collect(),
        )
    }

    pub fn with_ref_weights(
        candidates: Vec<Candidate>,
        ref_weights: Vec<f64>,
    ) -> Result<Self, SamplerError> {
        if candidates.is_empty() {
            return Err(SamplerError::NoCandidates);
        }
        if ref_weights.len() != candidates.len() {
            return Err(SamplerError::LengthMismatch(
                candidates.len(),
                ref_weights.len(),
            ));
        }
        if let Some(i) = candidates.iter().position(|c| !c.reward.is_finite()) {
            return Err(SamplerError::NonFiniteReward(i));
        }
        let sum: f64 = ref_weights.iter().sum();
        if ref_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) || (sum - 1.0).abs() > 1e-12 {
            return Err(SamplerError::InvalidRefWeights);
        }
        let r_max = candidates
            .iter()
            .map(|c| c.reward)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            candidates,
            r_max,
            ref_weights,
        })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.reward).collect()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn ref_weights(&self) -> &[f64] {
        &self.ref_weights
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// The first `n` candidates, reference weights reset to uniform.
    pub fn truncated(&self, n: usize) -> Result<Self, SamplerError> {
        Self::new(self.candidates[..n.min(self.len())].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    pub probabilities: Vec<f64>,
}

pub fn check_beta(beta: f64) -> Result<(), SamplerError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(SamplerError::InvalidBeta(beta))
    }
}

/// The KL-regularized optimum over the candidates:
/// `pi(i) ∝ ref(i) · exp(r_i / beta)`, evaluated with the `r_max` shift.
pub fn closed_form_policy(
    set: &CandidateSet,
    beta: f64,
) -> Result<PolicyDistribution, SamplerError> {
    check_beta(beta)?;
    Ok(PolicyDistribution {
        probabilities: tilted(set.rewards().as_slice(), set.ref_weights(), beta),
    })
}

pub(crate) fn tilted(rewards: &[f64], ref_weights: &[f64], beta: f64) -> Vec<f64> {
    let r_max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = rewards
        .iter()
        .zip(ref_weights)
        .map(|(r, w)| w * ((r - r_max) / beta).exp())
        .collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}
