//! Reward-guided rejection sampling over a fixed candidate pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::policy::{check_beta, CandidateSet};
use super::SamplerError;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// N: how many candidates (from the front of the set) take part.
    pub budget: usize,
    /// M: accepted samples to collect.
    pub required: usize,
    pub beta: f64,
    /// Cap on proposal draws before giving up.
    pub max_iterations: u64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            budget: 20,
            required: 1,
            beta: 1e-3,
            max_iterations: 1_000_000,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        check_beta(self.beta)?;
        if self.budget == 0 || self.required == 0 {
            return Err(SamplerError::InvalidConfig(
                "budget and required must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedDraw {
    pub index: usize,
    /// Acceptance probability `exp((r_i - r_max) / beta)`.
    pub phi: f64,
    /// Proposals rejected since the previous acceptance.
    pub rejected: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AcceptanceTrace {
    pub accepted: Vec<AcceptedDraw>,
    pub total_draws: u64,
}

/// Acceptance probability of every candidate.
pub fn acceptance_probabilities(set: &CandidateSet, beta: f64) -> Vec<f64> {
    let r_max = set.r_max();
    set.candidates()
        .iter()
        .map(|c| ((c.reward - r_max) / beta).exp())
        .collect()
}

/// Proposes candidates uniformly and keeps candidate `i` with probability
/// `phi_i` until `required` are kept. Kept indices are i.i.d. draws from the
/// closed-form policy with uniform reference weights.
pub fn lto_sample(
    set: &CandidateSet,
    cfg: &SamplerConfig,
) -> Result<(Vec<usize>, AcceptanceTrace), SamplerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    lto_sample_with(set, cfg, &mut rng)
}

/// As [`lto_sample`], drawing from a caller-provided stream.
pub fn lto_sample_with<R: Rng + ?Sized>(
    set: &CandidateSet,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<(Vec<usize>, AcceptanceTrace), SamplerError> {
    cfg.validate()?;
    if cfg.budget > set.len() {
        return Err(SamplerError::BudgetExceedsCandidates {
            budget: cfg.budget,
            available: set.len(),
        });
    }
    let pool;
    let set = if cfg.budget < set.len() {
        pool = set.truncated(cfg.budget)?;
        &pool
    } else {
        set
    };
    let phi = acceptance_probabilities(set, cfg.beta);
    let n = set.len();

    let mut trace = AcceptanceTrace {
        accepted: Vec::with_capacity(cfg.required),
        total_draws: 0,
    };
    let mut rejected = 0u64;
    while trace.accepted.len() < cfg.required {
        if trace.total_draws >= cfg.max_iterations {
            return Err(SamplerError::Stall {
                draws: trace.total_draws,
                accepted: trace.accepted.len(),
            });
        }
        trace.total_draws += 1;
        let i = rng.random_range(0..n);
        let u: f64 = rng.random();
        if u < phi[i] {
            trace.accepted.push(AcceptedDraw {
                index: i,
                phi: phi[i],
                rejected,
            });
            rejected = 0;
        } else {
            rejected += 1;
        }
    }
    let picks = trace.accepted.iter().map(|a| a.index).collect();
    Ok((picks, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::closed_form_policy;
    use crate::sampler::stats::total_variation;

    fn frequencies(picks: &[usize], n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n];
        picks.iter().for_each(|&i| c[i] += 1.0);
        c.iter().map(|v| v / picks.len() as f64).collect()
    }

    #[test]
    fn single_candidate_is_accepted_immediately() {
        let set = CandidateSet::from_rewards(&[0.3]).unwrap();
        let cfg = SamplerConfig {
            budget: 1,
            ..Default::default()
        };
        let (picks, trace) = lto_sample(&set, &cfg).unwrap();
        assert_eq!(picks, vec![0]);
        assert_eq!(trace.accepted[0].phi, 1.0);
        assert_eq!(trace.accepted[0].rejected, 0);
        assert_eq!(trace.total_draws, 1);
    }

    #[test]
    fn equal_rewards_are_uniform() {
        let set = CandidateSet::from_rewards(&[0.4; 6]).unwrap();
        let cfg = SamplerConfig {
            budget: 6,
            required: 100_000,
            beta: 0.1,
            seed: 3,
            ..Default::default()
        };
        let (picks, trace) = lto_sample(&set, &cfg).unwrap();
        assert_eq!(trace.total_draws, 100_000);
        assert!(total_variation(&frequencies(&picks, 6), &[1.0 / 6.0; 6]) < 0.01);
    }

    #[test]
    fn matches_closed_form() {
        let set = CandidateSet::from_rewards(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let cfg = SamplerConfig {
            budget: 4,
            required: 100_000,
            beta: 0.5,
            seed: 11,
            ..Default::default()
        };
        let (picks, _) = lto_sample(&set, &cfg).unwrap();
        let target = closed_form_policy(&set, 0.5).unwrap().probabilities;
        assert!(total_variation(&frequencies(&picks, 4), &target) < 0.01);
    }

    #[test]
    fn max_reward_candidate_has_phi_one() {
        let set = CandidateSet::from_rewards(&[0.2, 0.9, 0.5]).unwrap();
        let phi = acceptance_probabilities(&set, 0.3);
        assert_eq!(phi[1], 1.0);
        assert!(phi.iter().all(|&p| p > 0.0 && p <= 1.0));
    }

    #[test]
    fn stall_guard() {
        let set = CandidateSet::from_rewards(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let cfg = SamplerConfig {
            budget: 5,
            required: 50,
            beta: 1e-3,
            max_iterations: 10,
            seed: 0,
        };
        assert!(matches!(
            lto_sample(&set, &cfg),
            Err(SamplerError::Stall { draws: 10, .. })
        ));
    }

    #[test]
    fn budget_selects_prefix() {
        let set = CandidateSet::from_rewards(&[0.1, 0.2, 0.99]).unwrap();
        let cfg = SamplerConfig {
            budget: 2,
            required: 200,
            beta: 1e-3,
            ..Default::default()
        };
        let (picks, _) = lto_sample(&set, &cfg).unwrap();
        assert!(picks.iter().all(|&i| i == 1));
        let too_many = SamplerConfig { budget: 4, ..cfg };
        assert!(matches!(
            lto_sample(&set, &too_many),
            Err(SamplerError::BudgetExceedsCandidates { .. })
        ));
    }

    #[test]
    fn seeded_runs_repeat() {
        let set = CandidateSet::from_rewards(&[0.3, 0.5, 0.1, 0.45]).unwrap();
        let cfg = SamplerConfig {
            budget: 4,
            required: 50,
            beta: 0.2,
            seed: 5,
            ..Default::default()
        };
        assert_eq!(
            lto_sample(&set, &cfg).unwrap(),
            lto_sample(&set, &cfg).unwrap()
        );
    }
}
