//! Goodness-of-fit helpers for checking sampler output against a target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::lto::{lto_sample, SamplerConfig};
use super::policy::{closed_form_policy, CandidateSet};
use super::SamplerError;

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl ChiSquareResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Pearson chi-square of observed counts against expected probabilities.
/// Categories with zero expected mass contribute nothing when empty and
/// force `p = 0` when they are not.
pub fn chi_square(counts: &[u64], expected: &[f64]) -> ChiSquareResult {
    let total: u64 = counts.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0usize;
    let mut impossible = false;
    for (&o, &p) in counts.iter().zip(expected) {
        let e = p * total as f64;
        if e > 0.0 {
            statistic += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else if o > 0 {
            impossible = true;
        }
    }
    let df = cells.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if df == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64).expect("df > 0");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareResult {
        statistic,
        degrees_of_freedom: df,
        p_value,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub rewards: Vec<f64>,
    pub beta: f64,
    pub draws: usize,
    pub seed: u64,
    pub target: Vec<f64>,
    pub empirical: Vec<f64>,
    pub total_variation: f64,
    pub chi_square: ChiSquareResult,
    pub proposals: u64,
}

/// Runs the sampler for `draws` acceptances and compares the accepted-index
/// histogram with the closed-form policy.
pub fn sampler_equivalence(
    rewards: &[f64],
    beta: f64,
    draws: usize,
    seed: u64,
) -> Result<EquivalenceReport, SamplerError> {
    let set = CandidateSet::from_rewards(rewards)?;
    let target = closed_form_policy(&set, beta)?.probabilities;
    let cfg = SamplerConfig {
        budget: rewards.len(),
        required: draws,
        beta,
        max_iterations: u64::MAX,
        seed,
    };
    let (picks, trace) = lto_sample(&set, &cfg)?;
    let mut counts = vec![0u64; rewards.len()];
    picks.iter().for_each(|&i| counts[i] += 1);
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
    Ok(EquivalenceReport {
        rewards: rewards.to_vec(),
        beta,
        draws,
        seed,
        total_variation: total_variation(&empirical, &target),
        chi_square: chi_square(&counts, &target),
        target,
        empirical,
        proposals: trace.total_draws,
    })
}

/// `n` rewards drawn from `U[0, 1)` with a seeded stream.
pub fn uniform_rewards(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_of_disjoint_is_one() {
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
    }

    #[test]
    fn chi_square_reference_value() {
        // statistic = (10-25)^2/25 + (40-25)^2/25 + 0 + 0 = 18 on 3 df
        let r = chi_square(&[10, 40, 25, 25], &[0.25; 4]);
        assert!((r.statistic - 18.0).abs() < 1e-12);
        assert_eq!(r.degrees_of_freedom, 3);
        // P(chi2_3 > 18) = 4.4e-4
        assert!((r.p_value - 4.398e-4).abs() < 1e-6, "{}", r.p_value);
        assert!(!r.passes(0.001));
    }

    #[test]
    fn impossible_category_fails() {
        let r = chi_square(&[5, 1], &[1.0, 0.0]);
        assert_eq!(r.p_value, 0.0);
    }
}
