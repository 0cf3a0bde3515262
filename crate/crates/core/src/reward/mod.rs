//! Latent reward model: a transformer-encoder sequence classifier over
//! latent thinking trajectories, trained with binary cross-entropy.

mod encoder;
pub mod eval;
pub mod gradcheck;
pub mod io;
pub mod mat;
pub mod model;
pub mod train;

use thiserror::Error;

pub use encoder::{sigmoid, sinusoidal_encoding, PROB_CLAMP};
pub use eval::{evaluate, roc_auc, EvalReport};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use io::{load_model, read_model, save_model, write_model, ModelFileError};
pub use model::{init_model, ModelConfig, Parameters, RewardModel};
pub use train::{train, TrainConfig};

use crate::trajectory::{LabeledSample, Trajectory};
use mat::Mat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("trajectory dimensionality {got} does not match model input_dim {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trajectory has no steps")]
    EmptyTrajectory,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("sample {0} in batch is unlabeled")]
    UnlabeledSample(usize),
    #[error("training data needs at least one labeled sample of each class")]
    SingleClass,
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("no labeled samples to evaluate")]
    NoLabeledSamples,
    #[error("ROC-AUC needs both classes present")]
    RocSingleClass,
    #[error("scores and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

impl RewardModel {
    fn pooled_input(&self, trajectory: &Trajectory) -> Result<Mat, ModelError> {
        let (_, d) = trajectory.shape().ok_or(ModelError::EmptyTrajectory)?;
        if d != self.config.input_dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.config.input_dim,
                got: d,
            });
        }
        Ok(Mat::from_rows(&trajectory.pooled()))
    }

    /// Raw classifier logit.
    pub fn logit(&self, trajectory: &Trajectory) -> Result<f64, ModelError> {
        Ok(encoder::forward_tape(self, self.pooled_input(trajectory)?).logit)
    }

    /// Probability that the trajectory leads to a correct answer, clamped to
    /// `[1e-12, 1 - 1e-12]` so it is never exactly 0 or 1.
    pub fn forward(&self, trajectory: &Trajectory) -> Result<f64, ModelError> {
        Ok(clamp_prob(sigmoid(self.logit(trajectory)?)))
    }

    pub fn parameter_count(&self) -> usize {
        self.params.count()
    }
}

pub fn forward(model: &RewardModel, trajectory: &Trajectory) -> Result<f64, ModelError> {
    model.forward(trajectory)
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn bce(p: f64, y: f64) -> f64 {
    let p = clamp_prob(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Mean binary cross-entropy over `batch` and its exact gradient.
pub fn loss_and_grads(
    model: &RewardModel,
    batch: &[LabeledSample],
) -> Result<(f64, Parameters), ModelError> {
    let refs: Vec<&LabeledSample> = batch.iter().collect();
    loss_and_grads_of(model, &refs)
}

pub(crate) fn loss_and_grads_of(
    model: &RewardModel,
    batch: &[&LabeledSample],
) -> Result<(f64, Parameters), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut grads = Parameters::zeros(&model.config);
    let mut total = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (i, sample) in batch.iter().enumerate() {
        let y = sample
            .label
            .target()
            .ok_or(ModelError::UnlabeledSample(i))?;
        let tape = encoder::forward_tape(model, model.pooled_input(&sample.trajectory)?);
        let p = sigmoid(tape.logit);
        total += bce(p, y);
        // zero gradient where the clamp is active
        let d_logit = if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
            (p - y) * scale
        } else {
            0.0
        };
        encoder::backward(model, &tape, d_logit, &mut grads);
    }
    Ok((total * scale, grads))
}

/// Mean loss only.
pub fn loss(model: &RewardModel, batch: &[LabeledSample]) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut total = 0.0;
    for (i, sample) in batch.iter().enumerate() {
        let y = sample
            .label
            .target()
            .ok_or(ModelError::UnlabeledSample(i))?;
        total += bce(sigmoid(model.logit(&sample.trajectory)?), y);
    }
    Ok(total / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Label, LatentThought};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_config(seed: u64) -> ModelConfig {
        ModelConfig {
            model_dim: 8,
            head_hidden: 8,
            seed,
            ..ModelConfig::new(5)
        }
    }

    fn random_traj(steps: usize, tokens: usize, dim: usize, rng: &mut ChaCha8Rng) -> Trajectory {
        let thoughts = (0..steps)
            .map(|_| {
                let v = (0..tokens * dim)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                LatentThought::new(tokens, dim, v).unwrap()
            })
            .collect();
        Trajectory::new(0, 0, None, thoughts).unwrap()
    }

    fn batch(n: usize, seed: u64) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                LabeledSample::new(random_traj(4, 3, 5, &mut rng), Label::from_bool(i % 2 == 0))
            })
            .collect()
    }

    #[test]
    fn init_is_seeded() {
        let a = init_model(small_config(1)).unwrap();
        let b = init_model(small_config(1)).unwrap();
        let c = init_model(small_config(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.params, c.params);
        for (name, arr) in a.params.named() {
            if name.ends_with(".bias") {
                assert!(arr.iter().all(|&v| v == 0.0), "{name}");
            }
            if name.ends_with(".gain") {
                assert!(arr.iter().all(|&v| v == 1.0), "{name}");
            }
            if name.ends_with(".weight") {
                let fan_in = match name.as_str() {
                    "input.weight" => 5.0,
                    n if n.contains("ff2") => 32.0,
                    _ => 8.0,
                };
                let bound: f64 = 1.0 / f64::sqrt(fan_in);
                assert!(arr.iter().all(|v| v.abs() <= bound), "{name}");
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let cfg = ModelConfig {
            heads: 3,
            ..small_config(0)
        };
        assert!(matches!(init_model(cfg), Err(ModelError::InvalidConfig(_))));
        let cfg = ModelConfig {
            model_dim: 0,
            ..small_config(0)
        };
        assert!(matches!(init_model(cfg), Err(ModelError::InvalidConfig(_))));
    }

    #[test]
    fn zero_head_gives_one_half() {
        let mut m = init_model(small_config(3)).unwrap();
        m.params.head2.weight.data.iter_mut().for_each(|w| *w = 0.0);
        let t = batch(1, 0).remove(0).trajectory;
        assert_eq!(m.forward(&t).unwrap(), 0.5);
    }

    #[test]
    fn forward_is_pure() {
        let m = init_model(small_config(4)).unwrap();
        let t = batch(1, 1).remove(0).trajectory;
        assert_eq!(
            m.forward(&t).unwrap().to_bits(),
            m.forward(&t).unwrap().to_bits()
        );
    }

    #[test]
    fn dimension_mismatch() {
        let m = init_model(small_config(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = random_traj(2, 3, 6, &mut rng);
        assert_eq!(
            m.forward(&t),
            Err(ModelError::DimensionMismatch {
                expected: 5,
                got: 6
            })
        );
    }

    fn permuted(t: &Trajectory) -> Trajectory {
        let mut steps = t.thoughts().to_vec();
        steps.reverse();
        steps.swap(0, 1);
        Trajectory::new(t.problem_id, t.sample_id, t.answer_id, steps).unwrap()
    }

    #[test]
    fn positional_encoding_is_live() {
        let m = init_model(small_config(5)).unwrap();
        let t = batch(1, 2).remove(0).trajectory;
        let a = m.forward(&t).unwrap();
        let b = m.forward(&permuted(&t)).unwrap();
        assert!((a - b).abs() > 1e-9, "{a} vs {b}");
    }

    #[test]
    fn without_positions_step_order_is_irrelevant() {
        let cfg = ModelConfig {
            positional_encoding: false,
            ..small_config(5)
        };
        let m = init_model(cfg).unwrap();
        for t in batch(5, 3) {
            let a = m.forward(&t.trajectory).unwrap();
            let b = m.forward(&permuted(&t.trajectory)).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn loss_at_one_half_is_ln2() {
        let mut m = init_model(small_config(6)).unwrap();
        m.params.head2.weight.data.iter_mut().for_each(|w| *w = 0.0);
        let (l, _) = loss_and_grads(&m, &batch(6, 4)).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn duplicated_batch_is_unchanged() {
        let m = init_model(small_config(7)).unwrap();
        let b = batch(3, 5);
        let doubled: Vec<_> = b.iter().chain(&b).cloned().collect();
        let (l1, g1) = loss_and_grads(&m, &b).unwrap();
        let (l2, g2) = loss_and_grads(&m, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        for ((_, a), (_, b)) in g1.named().iter().zip(g2.named().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn unlabeled_and_empty_batches() {
        let m = init_model(small_config(8)).unwrap();
        let mut b = batch(2, 6);
        b[1].label = Label::Unlabeled;
        assert!(matches!(
            loss_and_grads(&m, &b),
            Err(ModelError::UnlabeledSample(1))
        ));
        assert!(matches!(
            loss_and_grads(&m, &[]),
            Err(ModelError::EmptyBatch)
        ));
    }

    /// Independent central-difference oracle over every parameter entry.
    #[test]
    fn gradients_match_finite_differences() {
        let m = init_model(small_config(9)).unwrap();
        let b = batch(3, 7);
        let (_, grads) = loss_and_grads(&m, &b).unwrap();
        let analytic: Vec<Vec<f64>> = grads.named().into_iter().map(|(_, a)| a.to_vec()).collect();
        let step = 1e-4;
        let mut worst: f64 = 0.0;
        let n_arrays = analytic.len();
        for a in 0..n_arrays {
            for k in 0..analytic[a].len() {
                let mut plus = m.clone();
                plus.params.arrays_mut()[a][k] += step;
                let mut minus = m.clone();
                minus.params.arrays_mut()[a][k] -= step;
                let fd = (loss(&plus, &b).unwrap() - loss(&minus, &b).unwrap()) / (2.0 * step);
                let g = analytic[a][k];
                let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }
}
