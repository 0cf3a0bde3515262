//! End-to-end synthetic run: train a reward model on one corpus, then
//! compare reward-guided sampling with voting on a disjoint one.
//!
//! cargo run --release -p lttk-core --example desk_trend -- [separation] [model_dim] [epochs] [dispersion_ratio]

use std::time::Instant;

use lttk_core::reward::{evaluate, init_model, train, ModelConfig, TrainConfig};
use lttk_core::sampler::{SamplerConfig, VoteWeighting};
use lttk_core::selection::{compare_selectors, score_set};
use lttk_core::synth::{generate, SyntheticConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|a| a.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let base = SyntheticConfig {
        problems: 500,
        samples_per_problem: 20,
        separation: arg(1, SyntheticConfig::default().separation),
        dispersion_ratio: arg(4, SyntheticConfig::default().dispersion_ratio),
        seed: 11,
        ..Default::default()
    };
    let train_set = generate(&base).unwrap();
    let test_set = generate(&SyntheticConfig {
        first_problem_id: 500,
        ..base.clone()
    })
    .unwrap();

    let config = ModelConfig {
        model_dim: arg(2, 64),
        head_hidden: arg(2, 64),
        seed: 1,
        ..ModelConfig::new(base.dim)
    };
    let tc = TrainConfig {
        epochs: arg(3, 10),
        shuffle_seed: 2,
        ..Default::default()
    };
    let start = Instant::now();
    let (model, history) = train(&init_model(config).unwrap(), &train_set, &tc).unwrap();
    println!("train {:.1?} loss {:?}", start.elapsed(), history);

    let eval = evaluate(&model, &test_set).unwrap();
    println!(
        "held-out accuracy {:.4} auc {:?}",
        eval.accuracy, eval.roc_auc
    );
    let rewards = score_set(&model, &test_set).unwrap();
    let cfg = SamplerConfig {
        seed: 3,
        ..Default::default()
    };
    let report = compare_selectors(&test_set, &rewards, &cfg, VoteWeighting::Sum).unwrap();
    println!(
        "base {:.4} lto {:.4} majority {:.4} weighted {:.4} ({:.1?} total)",
        report.base_rate,
        report.lto_rate,
        report.majority_rate,
        report.weighted_rate,
        start.elapsed()
    );
}
