use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mat::Mat;
use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub model_dim: usize,
    pub blocks: usize,
    pub heads: usize,
    pub ffn_multiplier: usize,
    pub head_hidden: usize,
    pub seed: u64,
    /// Adds sinusoidal step-position encodings after the input projection.
    /// Turning it off makes the model invariant to step order.
    pub positional_encoding: bool,
}

impl ModelConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            model_dim: 64,
            blocks: 1,
            heads: 2,
            ffn_multiplier: 4,
            head_hidden: 64,
            seed: 0,
            positional_encoding: true,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("input_dim", self.input_dim),
            ("model_dim", self.model_dim),
            ("heads", self.heads),
            ("ffn_multiplier", self.ffn_multiplier),
            ("head_hidden", self.head_hidden),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::InvalidConfig(format!(
                "{name} must be at least 1"
            )));
        }
        if !self.model_dim.is_multiple_of(self.heads) {
            return Err(ModelError::InvalidConfig(format!(
                "model_dim {} is not divisible by heads {}",
                self.model_dim, self.heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }

    pub fn ffn_dim(&self) -> usize {
        self.model_dim * self.ffn_multiplier
    }
}

/// `y = x W + b` with `W` stored as `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

impl Linear {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Mat::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    fn uniform(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut l = Self::zeros(fan_in, fan_out);
        l.weight
            .data
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-bound..bound));
        l
    }

    pub fn forward(&self, x: &Mat) -> Mat {
        let mut y = x.matmul(&self.weight);
        y.add_row_vector(&self.bias);
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerNorm {
    fn new(dim: usize) -> Self {
        Self {
            gain: vec![1.0; dim],
            bias: vec![0.0; dim],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderBlock {
    pub norm1: LayerNorm,
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub norm2: LayerNorm,
    pub ff1: Linear,
    pub ff2: Linear,
}

/// All trainable arrays. Gradients and Adam moments use the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub input: Linear,
    pub blocks: Vec<EncoderBlock>,
    pub head1: Linear,
    pub head2: Linear,
}

impl Parameters {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let h = cfg.model_dim;
        let block = || EncoderBlock {
            norm1: LayerNorm {
                gain: vec![0.0; h],
                bias: vec![0.0; h],
            },
            query: Linear::zeros(h, h),
            key: Linear::zeros(h, h),
            value: Linear::zeros(h, h),
            output: Linear::zeros(h, h),
            norm2: LayerNorm {
                gain: vec![0.0; h],
                bias: vec![0.0; h],
            },
            ff1: Linear::zeros(h, cfg.ffn_dim()),
            ff2: Linear::zeros(cfg.ffn_dim(), h),
        };
        Self {
            input: Linear::zeros(cfg.input_dim, h),
            blocks: (0..cfg.blocks).map(|_| block()).collect(),
            head1: Linear::zeros(h, cfg.head_hidden),
            head2: Linear::zeros(cfg.head_hidden, 1),
        }
    }

    fn init(cfg: &ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let h = cfg.model_dim;
        let input = Linear::uniform(cfg.input_dim, h, &mut rng);
        let blocks = (0..cfg.blocks)
            .map(|_| EncoderBlock {
                norm1: LayerNorm::new(h),
                query: Linear::uniform(h, h, &mut rng),
                key: Linear::uniform(h, h, &mut rng),
                value: Linear::uniform(h, h, &mut rng),
                output: Linear::uniform(h, h, &mut rng),
                norm2: LayerNorm::new(h),
                ff1: Linear::uniform(h, cfg.ffn_dim(), &mut rng),
                ff2: Linear::uniform(cfg.ffn_dim(), h, &mut rng),
            })
            .collect();
        let head1 = Linear::uniform(h, cfg.head_hidden, &mut rng);
        let head2 = Linear::uniform(cfg.head_hidden, 1, &mut rng);
        Self {
            input,
            blocks,
            head1,
            head2,
        }
    }

    /// Every array with its canonical name, in canonical order.
    pub fn named(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        out.push(("input.weight".into(), &self.input.weight.data));
        out.push(("input.bias".into(), &self.input.bias));
        for (b, block) in self.blocks.iter().enumerate() {
            let p = format!("blocks.{b}");
            out.push((format!("{p}.norm1.gain"), &block.norm1.gain));
            out.push((format!("{p}.norm1.bias"), &block.norm1.bias));
            for (n, l) in [
                ("query", &block.query),
                ("key", &block.key),
                ("value", &block.value),
                ("output", &block.output),
            ] {
                out.push((format!("{p}.attn.{n}.weight"), &l.weight.data));
                out.push((format!("{p}.attn.{n}.bias"), &l.bias));
            }
            out.push((format!("{p}.norm2.gain"), &block.norm2.gain));
            out.push((format!("{p}.norm2.bias"), &block.norm2.bias));
            out.push((format!("{p}.ff1.weight"), &block.ff1.weight.data));
            out.push((format!("{p}.ff1.bias"), &block.ff1.bias));
            out.push((format!("{p}.ff2.weight"), &block.ff2.weight.data));
            out.push((format!("{p}.ff2.bias"), &block.ff2.bias));
        }
        out.push(("head.0.weight".into(), &self.head1.weight.data));
        out.push(("head.0.bias".into(), &self.head1.bias));
        out.push(("head.1.weight".into(), &self.head2.weight.data));
        out.push(("head.1.bias".into(), &self.head2.bias));
        out
    }

    /// Mutable view of every array, same order as [`named`](Self::named).
    pub fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        out.push(&mut self.input.weight.data);
        out.push(&mut self.input.bias);
        for block in &mut self.blocks {
            out.push(&mut block.norm1.gain);
            out.push(&mut block.norm1.bias);
            for l in [
                &mut block.query,
                &mut block.key,
                &mut block.value,
                &mut block.output,
            ] {
                out.push(&mut l.weight.data);
                out.push(&mut l.bias);
            }
            out.push(&mut block.norm2.gain);
            out.push(&mut block.norm2.bias);
            out.push(&mut block.ff1.weight.data);
            out.push(&mut block.ff1.bias);
            out.push(&mut block.ff2.weight.data);
            out.push(&mut block.ff2.bias);
        }
        out.push(&mut self.head1.weight.data);
        out.push(&mut self.head1.bias);
        out.push(&mut self.head2.weight.data);
        out.push(&mut self.head2.bias);
        out
    }

    pub fn count(&self) -> usize {
        self.named().iter().map(|(_, a)| a.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named()
            .iter()
            .all(|(_, a)| a.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, factor: f64) {
        for a in self.arrays_mut() {
            a.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &Parameters) {
        let src: Vec<Vec<f64>> = other.named().into_iter().map(|(_, a)| a.to_vec()).collect();
        for (dst, src) in self.arrays_mut().into_iter().zip(src) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
    }
}

/// The latent reward model `r(x, z)`: a small transformer encoder over the
/// token-pooled steps of a trajectory with a binary classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    pub config: ModelConfig,
    pub params: Parameters,
}

/// Seeded initialization: weights `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`,
/// biases zero, normalization gains one.
pub fn init_model(config: ModelConfig) -> Result<RewardModel, ModelError> {
    config.validate()?;
    let params = Parameters::init(&config);
    Ok(RewardModel { config, params })
}
