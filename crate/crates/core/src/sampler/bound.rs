//! Checks the imperfect-reward performance bound
//! `|E_{pi_r} r* - E_{pi_r*} r*| <= sqrt(4 eps / beta)` on concrete instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::policy::{check_beta, tilted};
use super::SamplerError;

const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `max_i |r_i - r*_i|`
    pub epsilon: f64,
    pub expected_correctness_approx: f64,
    pub expected_correctness_perfect: f64,
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BoundReport {
    /// The bound says nothing when it is at least 1 (the gap never exceeds 1).
    pub fn is_vacuous(&self) -> bool {
        self.bound >= 1.0
    }
}

/// Expected true correctness under the policies induced by the approximate
/// and the perfect reward, and the bound relating them. `ref_weights`
/// defaults to uniform.
pub fn verify_performance_bound(
    rewards_true: &[f64],
    rewards_approx: &[f64],
    ref_weights: Option<&[f64]>,
    beta: f64,
) -> Result<BoundReport, SamplerError> {
    check_beta(beta)?;
    let n = rewards_true.len();
    if n == 0 {
        return Err(SamplerError::NoCandidates);
    }
    if rewards_approx.len() != n {
        return Err(SamplerError::LengthMismatch(n, rewards_approx.len()));
    }
    if let Some(i) = rewards_true.iter().position(|r| !(0.0..=1.0).contains(r)) {
        return Err(SamplerError::InvalidConfig(format!(
            "true reward {i} outside [0, 1]"
        )));
    }
    if let Some(i) = rewards_approx.iter().position(|r| !r.is_finite()) {
        return Err(SamplerError::NonFiniteReward(i));
    }
    let uniform;
    let weights = match ref_weights {
        Some(w) if w.len() != n => return Err(SamplerError::LengthMismatch(n, w.len())),
        Some(w) => {
            if w.iter().any(|v| !(*v > 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(SamplerError::InvalidRefWeights);
            }
            w
        }
        None => {
            uniform = vec![1.0 / n as f64; n];
            &uniform
        }
    };

    let pi_approx = tilted(rewards_approx, weights, beta);
    let pi_perfect = tilted(rewards_true, weights, beta);
    let expect = |pi: &[f64]| pi.iter().zip(rewards_true).map(|(p, r)| p * r).sum::<f64>();
    let approx = expect(&pi_approx);
    let perfect = expect(&pi_perfect);
    let epsilon = rewards_true
        .iter()
        .zip(rewards_approx)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let gap = (approx - perfect).abs();
    let bound = (4.0 * epsilon / beta).sqrt();
    Ok(BoundReport {
        epsilon,
        expected_correctness_approx: approx,
        expected_correctness_perfect: perfect,
        gap,
        bound,
        holds: gap <= bound + BOUND_SLACK,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSweep {
    pub instances: usize,
    pub violations: usize,
    pub vacuous: usize,
    /// Largest `gap / bound` over instances with a positive bound.
    pub max_tightness: f64,
    pub worst: Option<BoundReport>,
}

/// Randomized instances: `N` in `1..=max_candidates`, binary `r*`,
/// perturbations of size at most a random `eps` in `(0, max_epsilon]`
/// (clamped to `[0, 1]`), `beta` uniform in `[beta_min, beta_max]`.
pub fn bound_sweep(
    instances: usize,
    max_candidates: usize,
    max_epsilon: f64,
    beta_range: (f64, f64),
    seed: u64,
) -> Result<BoundSweep, SamplerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sweep = BoundSweep {
        instances,
        violations: 0,
        vacuous: 0,
        max_tightness: 0.0,
        worst: None,
    };
    for _ in 0..instances {
        let n = rng.random_range(1..=max_candidates.max(1));
        let truth: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
            .collect();
        let eps = max_epsilon * (1.0 - rng.random::<f64>());
        let approx: Vec<f64> = truth
            .iter()
            .map(|r| (r + rng.random_range(-eps..=eps)).clamp(0.0, 1.0))
            .collect();
        let beta = rng.random_range(beta_range.0..=beta_range.1);
        let report = verify_performance_bound(&truth, &approx, None, beta)?;
        if !report.holds {
            sweep.violations += 1;
        }
        if report.is_vacuous() {
            sweep.vacuous += 1;
        }
        if report.bound > 0.0 {
            let t = report.gap / report.bound;
            if t >= sweep.max_tightness {
                sweep.max_tightness = t;
                sweep.worst = Some(report);
            }
        }
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_reward_has_zero_gap() {
        let r = verify_performance_bound(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0], None, 0.1).unwrap();
        assert_eq!(r.epsilon, 0.0);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.bound, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn two_candidate_instance() {
        let r = verify_performance_bound(&[1.0, 0.0], &[0.9, 0.1], None, 1.0).unwrap();
        assert!((r.epsilon - 0.1).abs() < 1e-15);
        assert!((r.bound - 0.4f64.sqrt()).abs() < 1e-15);
        // closed forms: e/(1+e) and e^0.8/(e^0.8+e^0.1)
        let perfect = 1.0f64.exp() / (1.0 + 1.0f64.exp());
        let approx = 0.9f64.exp() / (0.9f64.exp() + 0.1f64.exp());
        assert!((r.expected_correctness_perfect - perfect).abs() < 1e-15);
        assert!((r.expected_correctness_approx - approx).abs() < 1e-15);
        assert!((r.gap - (perfect - approx)).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn default_beta_is_vacuous_for_modest_error() {
        let r = verify_performance_bound(&[1.0, 0.0], &[0.999, 0.001], None, 1e-3).unwrap();
        assert!(r.is_vacuous() && r.holds);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            verify_performance_bound(&[1.0], &[1.0], None, 0.0),
            Err(SamplerError::InvalidBeta(0.0))
        );
        assert!(verify_performance_bound(&[1.0], &[1.0, 0.0], None, 1.0).is_err());
        assert!(verify_performance_bound(&[2.0], &[1.0], None, 1.0).is_err());
    }

    #[test]
    fn sweep_finds_no_violations() {
        let s = bound_sweep(200, 10, 0.5, (0.05, 1.0), 1).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.max_tightness <= 1.0);
    }
}
