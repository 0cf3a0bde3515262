use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Parameters, RewardModel};
use super::{loss_and_grads_of, ModelError};
use crate::trajectory::{Label, LabeledSample, TrajectorySet};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    /// Train on the prefix `h_{1:t}` of every trajectory.
    pub prefix_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            batch_size: 32,
            shuffle_seed: 0,
            prefix_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidTrainConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        if self.prefix_steps == Some(0) {
            return bad("prefix_steps must be at least 1");
        }
        Ok(())
    }
}

struct Adam {
    m: Parameters,
    v: Parameters,
    step: i32,
}

impl Adam {
    fn new(shape: &Parameters) -> Self {
        let mut m = shape.clone();
        m.scale(0.0);
        Self {
            v: m.clone(),
            m,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut Parameters, grads: &Parameters, cfg: &TrainConfig) {
        self.step += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let grads = grads.named();
        let arrays = params.arrays_mut().into_iter();
        let ms = self.m.arrays_mut().into_iter();
        let vs = self.v.arrays_mut().into_iter();
        for (((p, (_, g)), m), v) in arrays.zip(grads).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
            }
        }
    }
}

/// Mini-batch Adam on the labeled samples of `data`. Returns the trained
/// copy and the mean training loss of every epoch (accumulated while the
/// epoch runs). Unlabeled samples are ignored.
pub fn train(
    model: &RewardModel,
    data: &TrajectorySet,
    cfg: &TrainConfig,
) -> Result<(RewardModel, Vec<f64>), ModelError> {
    cfg.validate()?;
    let samples: Vec<LabeledSample> = data
        .iter()
        .filter(|s| s.label != Label::Unlabeled)
        .map(|s| match cfg.prefix_steps {
            Some(t) => LabeledSample::new(s.trajectory.truncated(t), s.label),
            None => s.clone(),
        })
        .collect();
    let positives = samples.iter().filter(|s| s.label == Label::Correct).count();
    if positives == 0 || positives == samples.len() {
        return Err(ModelError::SingleClass);
    }

    let mut model = model.clone();
    let mut adam = Adam::new(&model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| &samples[i]));
            let (loss, grads) = loss_and_grads_of(&model, &batch)?;
            epoch_loss += loss * chunk.len() as f64;
            adam.update(&mut model.params, &grads, cfg);
        }
        history.push(epoch_loss / samples.len() as f64);
    }
    Ok((model, history))
}
