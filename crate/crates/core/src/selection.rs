//! Per-problem answer selection: reward-guided sampling against the
//! single-sample base rate and the voting baselines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::reward::{ModelError, RewardModel};
use crate::sampler::{
    lto_sample_with, majority_vote, weighted_majority_vote, AcceptanceTrace, Candidate,
    CandidateSet, SamplerConfig, SamplerError, VoteWeighting,
};
use crate::trajectory::{Label, TrajectorySet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("{0} rewards for {1} samples")]
    LengthMismatch(usize, usize),
    #[error("sample {0} has no label")]
    Unlabeled(usize),
    #[error("sample {0} has no answer id")]
    MissingAnswer(usize),
    #[error("problem {problem_id} has {available} samples, fewer than the budget {budget}")]
    ShortProblem {
        problem_id: u64,
        available: usize,
        budget: usize,
    },
}

/// Reward of every sample in `set`, in order.
pub fn score_set(model: &RewardModel, set: &TrajectorySet) -> Result<Vec<f64>, ModelError> {
    set.iter().map(|s| model.forward(&s.trajectory)).collect()
}

/// Sampler output for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDraw {
    pub problem_id: u64,
    /// Indices into the set of the candidates that took part.
    pub pool: Vec<usize>,
    /// Indices into the set of the accepted samples, in acceptance order.
    pub accepted: Vec<usize>,
    pub trace: AcceptanceTrace,
}

/// Runs the sampler on the first `cfg.budget` samples of every problem.
/// Each problem draws from its own stream `(cfg.seed, problem_id)`, so the
/// result does not depend on problem order.
pub fn sample_problems(
    set: &TrajectorySet,
    rewards: &[f64],
    cfg: &SamplerConfig,
) -> Result<Vec<ProblemDraw>, SelectionError> {
    if rewards.len() != set.len() {
        return Err(SelectionError::LengthMismatch(rewards.len(), set.len()));
    }
    cfg.validate()?;
    let mut draws = Vec::new();
    for (problem_id, members) in set.problem_groups() {
        if members.len() < cfg.budget {
            return Err(SelectionError::ShortProblem {
                problem_id,
                available: members.len(),
                budget: cfg.budget,
            });
        }
        let pool = members[..cfg.budget].to_vec();
        let candidates = pool
            .iter()
            .map(|&i| Candidate {
                source: i,
                reward: rewards[i],
                answer_id: set.samples[i].trajectory.answer_id,
            })
            .collect();
        let candidates = CandidateSet::new(candidates)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(problem_id);
        let (picks, trace) = lto_sample_with(&candidates, cfg, &mut rng)?;
        let accepted = picks.iter().map(|&k| pool[k]).collect();
        draws.push(ProblemDraw {
            problem_id,
            pool,
            accepted,
            trace,
        });
    }
    Ok(draws)
}

/// Outcome of one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOutcome {
    pub problem_id: u64,
    /// Indices into the set of the accepted samples.
    pub accepted: Vec<usize>,
    /// Fraction of accepted samples that are correct.
    pub lto_correct: f64,
    /// Fraction of correct samples among the candidates.
    pub base_rate: f64,
    pub majority_answer: u32,
    pub majority_correct: bool,
    pub weighted_answer: u32,
    pub weighted_correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub problems: Vec<ProblemOutcome>,
    pub base_rate: f64,
    pub lto_rate: f64,
    pub majority_rate: f64,
    pub weighted_rate: f64,
}

fn is_correct(set: &TrajectorySet, i: usize) -> Result<bool, SelectionError> {
    match set.samples[i].label {
        Label::Correct => Ok(true),
        Label::Incorrect => Ok(false),
        Label::Unlabeled => Err(SelectionError::Unlabeled(i)),
    }
}

/// Reward-guided sampling, the single-sample base rate, majority vote and
/// reward-weighted vote over the same candidate pools. Needs labels and
/// answer ids on every candidate.
pub fn compare_selectors(
    set: &TrajectorySet,
    rewards: &[f64],
    cfg: &SamplerConfig,
    weighting: VoteWeighting,
) -> Result<SelectionReport, SelectionError> {
    let mut problems = Vec::new();
    for draw in sample_problems(set, rewards, cfg)? {
        let correct = draw
            .pool
            .iter()
            .map(|&i| is_correct(set, i))
            .collect::<Result<Vec<_>, _>>()?;
        let answers = draw
            .pool
            .iter()
            .map(|&i| {
                set.samples[i]
                    .trajectory
                    .answer_id
                    .ok_or(SelectionError::MissingAnswer(i))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let pool_rewards: Vec<f64> = draw.pool.iter().map(|&i| rewards[i]).collect();
        let is_right = |a: u32| answers.iter().zip(&correct).any(|(&b, &c)| c && a == b);

        let mut hits = 0;
        for &i in &draw.accepted {
            hits += is_correct(set, i)? as usize;
        }
        let majority_answer = majority_vote(&answers)?;
        let weighted_answer = weighted_majority_vote(&answers, &pool_rewards, weighting)?;
        problems.push(ProblemOutcome {
            problem_id: draw.problem_id,
            lto_correct: hits as f64 / draw.accepted.len() as f64,
            accepted: draw.accepted,
            base_rate: correct.iter().filter(|&&c| c).count() as f64 / correct.len() as f64,
            majority_answer,
            majority_correct: is_right(majority_answer),
            weighted_answer,
            weighted_correct: is_right(weighted_answer),
        });
    }
    let n = problems.len().max(1) as f64;
    let mean = |f: &dyn Fn(&ProblemOutcome) -> f64| problems.iter().map(f).sum::<f64>() / n;
    Ok(SelectionReport {
        base_rate: mean(&|p| p.base_rate),
        lto_rate: mean(&|p| p.lto_correct),
        majority_rate: mean(&|p| p.majority_correct as u8 as f64),
        weighted_rate: mean(&|p| p.weighted_correct as u8 as f64),
        problems,
    })
}
