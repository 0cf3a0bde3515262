//! Latent Thinking Optimization: the KL-regularized closed-form policy over
//! sampled candidates, the rejection sampler that draws from it, voting
//! baselines, and a harness for the imperfect-reward performance bound.

pub mod bound;
pub mod lto;
pub mod policy;
pub mod stats;
pub mod vote;

use thiserror::Error;

pub use bound::{bound_sweep, verify_performance_bound, BoundReport, BoundSweep};
pub use lto::{
    acceptance_probabilities, lto_sample, lto_sample_with, AcceptanceTrace, AcceptedDraw,
    SamplerConfig,
};
pub use policy::{closed_form_policy, Candidate, CandidateSet, PolicyDistribution};
pub use stats::{
    chi_square, sampler_equivalence, total_variation, ChiSquareResult, EquivalenceReport,
};
pub use vote::{majority_vote, weighted_majority_vote, VoteWeighting};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("no candidates")]
    NoCandidates,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reward {0} is not finite")]
    NonFiniteReward(usize),
    #[error("reference weights must be positive and sum to 1")]
    InvalidRefWeights,
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error("budget {budget} exceeds the {available} available candidates")]
    BudgetExceedsCandidates { budget: usize, available: usize },
    #[error("sampler stalled: {accepted} accepted after {draws} proposals")]
    Stall { draws: u64, accepted: usize },
}
