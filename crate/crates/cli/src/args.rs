use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lttk", version, about = "Latent thinking trajectory toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic trajectory set
    Synth(SynthArgs),
    /// Check a container for structural problems
    Validate(ValidateArgs),
    /// Per-step entropy, effective rank, anisotropy and intrinsic dimension
    Metrics(MetricsArgs),
    /// Project pooled step vectors onto principal components
    Pca(PcaArgs),
    /// Train a latent reward model
    TrainLrm(TrainArgs),
    /// Score a labeled set with a trained reward model
    EvalLrm(EvalArgs),
    /// Reward-guided rejection sampling per problem
    Lto(LtoArgs),
    /// Majority and reward-weighted majority vote per problem
    Vote(VoteArgs),
    /// Numerical checks of the sampler, the reward bound and the gradients
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with generator settings; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub problems: Option<usize>,
    #[arg(long)]
    pub samples_per_problem: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub tokens: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub correct_rate: Option<f64>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub dispersion_ratio: Option<f64>,
    #[arg(long)]
    pub answer_vocab: Option<u32>,
    #[arg(long)]
    pub first_problem_id: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long = "in", id = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long = "in", id = "in")]
    pub input: PathBuf,
    /// CSV destination; without it the table goes to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rényi order of the matrix entropy (1 = von Neumann)
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// TwoNN trimming fraction
    #[arg(long, default_value_t = 0.1)]
    pub trim: f64,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long = "in", id = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub components: usize,
    /// One fit over all problems instead of one per problem
    #[arg(long)]
    pub joint: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 64)]
    pub model_dim: usize,
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    #[arg(long, default_value_t = 4)]
    pub ffn_multiplier: usize,
    #[arg(long, default_value_t = 64)]
    pub head_hidden: usize,
    #[arg(long)]
    pub no_positional_encoding: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled containers; several are merged into one training set
    #[arg(long = "in", id = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Train on the first t steps of every trajectory
    #[arg(long)]
    pub prefix_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in", id = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Per-sample rewards as CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub prefix_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LtoArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in", id = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Candidates per problem (N)
    #[arg(long, default_value_t = 20)]
    pub budget: usize,
    /// Accepted samples per problem (M)
    #[arg(long, default_value_t = 1)]
    pub required: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub beta: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iterations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weighting {
    Sum,
    Exp,
}

#[derive(Debug, Args)]
pub struct VoteArgs {
    #[arg(long = "in", id = "in")]
    pub input: PathBuf,
    /// Reward model for the weighted vote; without it only majority runs
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Candidates per problem; all of them when omitted
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, value_enum, default_value_t = Weighting::Sum)]
    pub weighting: Weighting,
    /// Temperature of the exponential weighting
    #[arg(long, default_value_t = 1e-3)]
    pub beta: f64,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Sampler output against the closed-form policy
    Theorem2(Theorem2Args),
    /// Imperfect-reward bound on random instances
    Theorem3(Theorem3Args),
    /// Analytic reward-model gradients against finite differences
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct Theorem2Args {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    #[arg(long, default_value_t = 200_000)]
    pub draws: usize,
    #[arg(long)]
    pub seed: u64,
    /// Largest acceptable total-variation distance
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0.001)]
    pub significance: f64,
}

#[derive(Debug, Args)]
pub struct Theorem3Args {
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 10)]
    pub max_candidates: usize,
    #[arg(long, default_value_t = 0.5)]
    pub max_epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_max: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 8)]
    pub model_dim: usize,
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    #[arg(long, default_value_t = 3)]
    pub tokens: usize,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    /// Finite-difference step
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long)]
    pub seed: u64,
}
